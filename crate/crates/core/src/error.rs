use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("compile error: {0}")]
    Compile(String),

    #[error("internal error: {0}")]
    Internal(String),

    /// A precondition of an operation was not met. Carries the graph node
    /// id when the violation happened while executing a node.
    #[error("contract violation{}: {msg}", node.map(|n| format!(" at node {n}")).unwrap_or_default())]
    Contract { node: Option<usize>, msg: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract { node: None, msg: msg.into() }
    }

    pub(crate) fn at_node(node: usize, msg: impl Into<String>) -> Self {
        Error::Contract { node: Some(node), msg: msg.into() }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
