use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// The objective returned NaN or an infinity at `point`.
    #[error("objective is not finite at {point:?}")]
    NonFiniteObjective { point: Vec<f64> },

    /// The iteration budget ran out; the best iterate seen is attached.
    #[error("no convergence after {evaluations} evaluations (best value {value} at {best:?})")]
    NotConverged {
        best: Vec<f64>,
        value: f64,
        evaluations: usize,
    },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
