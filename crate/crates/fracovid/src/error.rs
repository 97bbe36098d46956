//! Crate-wide error type and exit-code mapping for the CLI.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A domain-type invariant was violated (rates, orders, grids, bounds).
    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// The time grid could not be constructed.
    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    /// The solver produced a non-finite state component.
    #[error("integration diverged at step {step} (t = {t})")]
    IntegrationDiverged { step: usize, t: f64 },

    /// A series evaluation hit its term cap before converging.
    #[error("series did not converge within {max_terms} terms (alpha = {alpha}, z = {z})")]
    SeriesNotConverged { alpha: f64, z: f64, max_terms: usize },

    /// An expression with a printed division was evaluated at a singular point.
    #[error("singular expression: {0}")]
    Singular(String),

    /// The stated initial compartments exceed the requested population.
    #[error("invalid population {population}: initial compartments leave susceptible = {susceptible}")]
    InvalidPopulation { population: f64, susceptible: f64 },

    /// A name did not match any known parameter or configuration key.
    #[error("unknown parameter name `{name}`")]
    UnknownParameter { name: String },

    /// Sensitivity index requested where R0 = 0.
    #[error("sensitivity index undefined: R0 = 0 for the supplied parameters")]
    UndefinedIndex,

    /// Efficacy requested with i(0) = 0.
    #[error("efficacy undefined: initial infectious count is zero")]
    UndefinedEfficacy,

    /// ACER requested with zero averted cases.
    #[error("ACER undefined: averted cases = 0")]
    AcerUndefined,

    /// Two series/trajectories that must share a grid do not.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// A frozen trajectory was read outside its time range.
    #[error("time {t} outside the stored trajectory range [{t0}, {tf}]")]
    OutOfRange { t: f64, t0: f64, tf: f64 },

    /// Case-data file has a missing calendar day.
    #[error("case data has a gap: missing date {missing}")]
    DataGap { missing: chrono::NaiveDate },

    /// Case-data file contains a negative count.
    #[error("case data line {line}: negative count {value}")]
    NegativeCount { line: usize, value: f64 },

    /// Case-data file could not be parsed.
    #[error("case data line {line}: {message}")]
    DataParse { line: usize, message: String },

    /// The requested fit window is empty or not covered by the data.
    #[error("invalid fit window: {0}")]
    InvalidWindow(String),

    /// An iterative scheme exhausted its iteration budget.
    #[error("{context} did not converge within {iterations} iterations (residual {residual})")]
    NotConverged {
        context: &'static str,
        iterations: usize,
        residual: f64,
    },

    /// Run-configuration parse or validation failure.
    #[error("config error: {0}")]
    Config(String),

    /// A required artifact file is missing or unreadable.
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Stable CLI exit code: 1 numerical, 2 config, 3 data/IO.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Io { .. }
            | Error::DataGap { .. }
            | Error::NegativeCount { .. }
            | Error::DataParse { .. }
            | Error::InvalidWindow(_) => 3,
            _ => 1,
        }
    }
}
