use thiserror::Error;

/// Errors raised by model construction, evaluation, fitting and I/O.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ZacrError {
    /// A parameter or argument lies outside its admissible domain.
    #[error("parameter domain error: {0}")]
    Domain(String),

    /// The dataset violates an invariant. `line` is the 1-based source line when known.
    #[error("{}", match .line { Some(l) => format!("data error at line {l}: {msg}"), None => format!("data error: {msg}") })]
    Data { line: Option<usize>, msg: String },

    /// The data carry no information about the susceptible lifetime distribution.
    #[error("non-identifiable data: {0}")]
    NonIdentifiable(String),

    /// A likelihood or derivative evaluation produced a non-finite value.
    #[error("evaluation error: {0}")]
    Evaluation(String),

    /// A confidence interval could not be formed.
    #[error("interval unavailable: {0}")]
    IntervalUnavailable(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl ZacrError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        ZacrError::Domain(msg.into())
    }

    pub(crate) fn data(msg: impl Into<String>) -> Self {
        ZacrError::Data {
            line: None,
            msg: msg.into(),
        }
    }

    pub(crate) fn data_at(line: usize, msg: impl Into<String>) -> Self {
        ZacrError::Data {
            line: Some(line),
            msg: msg.into(),
        }
    }
}

impl From<std::io::Error> for ZacrError {
    fn from(e: std::io::Error) -> Self {
        ZacrError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, ZacrError>;
