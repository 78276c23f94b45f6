//! The `cantor` command-line front end as a library, so that tests can
//! drive the same code paths as the binary.

pub mod cli;
pub mod commands;
pub mod config;
