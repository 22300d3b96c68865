use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A model was evaluated outside the region where it is defined.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("residual covariance is singular (condition number {condition:e})")]
    SingularResidual { condition: f64 },

    #[error("cannot split a tour of {nodes} nodes into {parts} parts")]
    InvalidSplit { parts: usize, nodes: usize },

    #[error("no UAV available for recruitment")]
    NoUavAvailable,

    #[error("invalid configuration at `{path}`: {message}")]
    Config { path: String, message: String },
}

impl Error {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}
