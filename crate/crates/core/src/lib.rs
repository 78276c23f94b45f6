//! Cantor-series numeration: basic sequences, digit expansions, block
//! statistics, normality estimators and the digit-surgery constructions
//! that separate the normality classes.

pub mod blocks;
pub mod digits;
pub mod discrepancy;
pub mod error;
pub mod exact;
pub mod formats;
pub mod normality;
pub mod sequences;
pub mod surgery;

pub use blocks::{Block, BlockCollection, Goodness, GoodnessConfig};
pub use digits::DigitStream;
pub use error::{Error, Result};
pub use sequences::{BasicSequence, Divergence, DivergenceMeta, Rule};
