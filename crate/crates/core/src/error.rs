use thiserror::Error;

/// Errors raised by the arrow calculus and the engines built on it.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension must be at least 1")]
    ZeroDimension,

    #[error("matrix entries must be finite")]
    NonFinite,

    #[error("shape mismatch: expected {expected_rows}x{expected_cols}, found {rows}x{cols}")]
    ShapeMismatch {
        expected_rows: usize,
        expected_cols: usize,
        rows: usize,
        cols: usize,
    },

    #[error("object mismatch: expected `{expected}`, found `{found}`")]
    ObjectMismatch { expected: String, found: String },

    #[error("context mismatch: hdim {left} vs {right}")]
    ContextMismatch { left: usize, right: usize },

    #[error("invalid index: {0}")]
    InvalidIndex(String),

    #[error("generator set is not closed under dagger (arrow {index}: {dom} -> {cod}, residual {residual:.3e})")]
    NotDaggerClosed {
        index: usize,
        dom: String,
        cod: String,
        residual: f64,
    },

    #[error("object universe has no unit object `I`")]
    MissingUnit,

    #[error("duplicate object name `{0}`")]
    DuplicateObject(String),

    #[error("unknown object `{0}`")]
    UnknownObject(String),

    #[error("invalid group: {0}")]
    InvalidGroup(String),

    #[error("invalid representation: {0}")]
    InvalidRep(String),

    #[error("unknown group element {0}")]
    UnknownElement(usize),

    #[error("invalid double cone: {0}")]
    InvalidCone(String),
}

pub type Result<T> = std::result::Result<T, Error>;
