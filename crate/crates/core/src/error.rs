use thiserror::Error;

/// Errors produced by the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("capacity exceeded: {requested} matrix elements requested, budget is {budget}")]
    Capacity { requested: usize, budget: usize },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("truncation leakage {leakage:.3e} exceeds {threshold:.1e} at cutoff {cutoff}")]
    Truncation {
        leakage: f64,
        threshold: f64,
        cutoff: usize,
    },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("degenerate conditioning: success probability {0:.3e}")]
    DegenerateConditioning(f64),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
