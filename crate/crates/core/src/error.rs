//! Error type shared by every module of the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("kernel: {0}")]
    Kernel(String),

    #[error("habitat: {0}")]
    Habitat(String),

    #[error("table `{path}` line {line}: {reason}")]
    Table {
        path: String,
        line: usize,
        reason: String,
    },

    /// A spreading speed whose growth rate is not positive.
    #[error("speed undefined: rate {rate} is nonpositive")]
    UndefinedSpeed { rate: f64 },

    #[error("exponential moment overflow at lambda = {lambda} (|lambda| * radius > 700)")]
    Overflow { lambda: f64 },

    #[error("minimizer reached the lambda cap {cap}")]
    LambdaCap { cap: f64 },

    #[error("regime: {0}")]
    Regime(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("grid: {0}")]
    Grid(String),

    #[error("integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: String },

    #[error("{what} did not converge (residual {residual:e})")]
    NotConverged { what: String, residual: f64 },

    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error("config line {line}: {reason}")]
    ConfigSyntax { line: usize, reason: String },

    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(String),
}

impl Error {
    /// Process exit code for the command line: 2 for configuration or
    /// regime problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter { .. }
            | Error::Kernel(_)
            | Error::Habitat(_)
            | Error::Table { .. }
            | Error::Regime(_)
            | Error::Precondition(_)
            | Error::Grid(_)
            | Error::ConfigSyntax { .. }
            | Error::Config(_)
            | Error::Io(_) => 2,
            Error::UndefinedSpeed { .. }
            | Error::Overflow { .. }
            | Error::LambdaCap { .. }
            | Error::Integration { .. }
            | Error::NotConverged { .. }
            | Error::Internal(_) => 3,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
