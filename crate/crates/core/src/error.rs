use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("parse error at {path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("no label mapping for raw label {0:?}")]
    LabelMap(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("unknown node id {0}")]
    UnknownNode(usize),

    #[error("node {0} has an empty index set")]
    EmptyNode(usize),

    #[error("power iteration did not converge within {0} iterations")]
    Convergence(usize),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("trace format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
