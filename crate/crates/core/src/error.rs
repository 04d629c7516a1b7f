use thiserror::Error;

/// Errors raised while building clouds, operators, or solving.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("degenerate neighborhood at node {node}: {detail}")]
    DegenerateNeighborhood { node: usize, detail: String },

    #[error("node {node} has {have} kinematic neighbors, order {order} needs at least {need}")]
    Unisolvency {
        node: usize,
        have: usize,
        need: usize,
        order: usize,
    },

    #[error("point ({x}, {y}) lies outside the domain of the exact solution: {detail}")]
    OutOfDomain { x: f64, y: f64, detail: String },

    #[error("linear solver failed: {0}")]
    Solver(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Whether the error stems from user input rather than from numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidArgument(_) | Error::Parse { .. } | Error::Validation(_) | Error::Io(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
