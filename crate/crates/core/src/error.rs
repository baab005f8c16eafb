use thiserror::Error;

/// Errors raised by the simulator, the estimators and the file formats.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("insufficient data: {points} points for {params} free parameters")]
    InsufficientData { points: usize, params: usize },

    #[error("singular jacobian: unidentifiable parameter combination involving {}", .params.join(", "))]
    SingularJacobian { params: Vec<String> },

    #[error("fit diverged: {0}")]
    DivergedFit(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("missing parameters: {}", .0.join(", "))]
    MissingParameters(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
