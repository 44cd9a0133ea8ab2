use thiserror::Error;

/// Errors raised by the smoothing toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameter `{name}` = {value} is outside its domain ({expected})")]
    Parameter {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("transform {family}: y = {y} is outside the domain ({expected})")]
    TransformDomain {
        family: &'static str,
        y: f64,
        expected: String,
    },

    #[error("transform {family} overflows at theta = {theta}, y = {y} (log value {log_value:.3})")]
    AmplificationOverflow {
        family: &'static str,
        theta: f64,
        y: f64,
        log_value: f64,
    },

    #[error("quadrature did not converge: estimate {estimate:e}, achieved error {achieved:e}, requested {requested:e}")]
    Quadrature {
        estimate: f64,
        achieved: f64,
        requested: f64,
    },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("objective returned a non-finite value {value} at a sampled point")]
    NonFiniteObjective { value: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid configuration at `{path}`: {message}")]
    Field { path: String, message: String },

    #[error("run aborted at step {step}: {reason}")]
    Aborted { step: usize, reason: String },

    #[error("i/o: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, value: f64, expected: &'static str) -> Self {
        Error::Parameter {
            name,
            value,
            expected,
        }
    }

    pub fn field(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Field {
            path: path.into(),
            message: message.into(),
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

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
