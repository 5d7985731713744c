use thiserror::Error;

/// Errors raised by the volatility library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("unstable: spectral radius {radius:.6} >= 1")]
    Unstable { radius: f64 },

    #[error("ill-conditioned system (condition estimate {condition:.3e})")]
    IllConditioned { condition: f64 },

    #[error("defective matrix: repeated eigenvalue with a rank-1 eigenspace")]
    Defective,

    #[error("negative variance {0:.6e}; use the restricted variance instead")]
    NegativeVariance(f64),

    #[error("runaway simulation: expected {expected:.0} events exceeds cap {cap}")]
    Runaway { expected: f64, cap: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("tick-size mismatch: price change {change} is not a multiple of tick {tick}")]
    TickSizeMismatch { change: f64, tick: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Data(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
