use thiserror::Error;

use crate::surgery::Schedule;

/// Errors raised by the library. Report-style operations (validation,
/// star-condition checks) never fail; they return findings instead.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("range error: requested {requested}, but only {available} digits are available (need at least {required})")]
    Range {
        requested: usize,
        available: usize,
        required: usize,
    },

    #[error("precision error: tail at position {position} needs at least {required_length} digits, stream has {available}")]
    Precision {
        position: usize,
        required_length: usize,
        available: usize,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("mode error: {0}")]
    Mode(String),

    #[error("construction error: {0}")]
    Construction(String),

    #[error(
        "extension error: certified {certified} of {requested} boundaries within {available} digits; \
         boundary {next} needs more than {available} digits"
    )]
    Extension {
        requested: usize,
        certified: usize,
        next: usize,
        available: usize,
        partial: Box<Schedule>,
    },

    #[error("data error at line {line}: {message}")]
    Data { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
