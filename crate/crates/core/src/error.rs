use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the domain an operation is defined on.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid probability space: {0}")]
    InvalidSpace(String),

    #[error("invalid random variable: {0}")]
    InvalidVariable(String),

    /// Two objects that must live on the same space do not.
    #[error("space mismatch: {0}")]
    SpaceMismatch(String),

    /// A precondition of a transfer or construction was violated.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("refinement error: {0}")]
    Refinement(String),

    #[error("no feasible point: {0}")]
    Infeasible(String),

    #[error("transfer phase did not terminate after {transfers} transfers (worst violation {worst_violation:e})")]
    NonTermination { transfers: usize, worst_violation: f64 },

    #[error("fixed-point iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        last_iterate: Vec<f64>,
    },

    #[error("quadrature tolerance not met: {0}")]
    Quadrature(String),

    #[error("problem file invalid:\n  {}", .0.join("\n  "))]
    Schema(Vec<String>),

    #[error("reproduction mismatch:\n{0}")]
    ReproductionMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Infeasible(_) => 2,
            Error::ReproductionMismatch(_) => 3,
            _ => 1,
        }
    }
}
