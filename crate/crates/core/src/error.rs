use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("wrong phase: {0}")]
    Phase(String),
    #[error("inconsistent solution: {0}")]
    Inconsistent(String),
    #[error("resource cap exceeded: {0}")]
    Resource(String),
    #[error("solver did not converge after {iters} iterations (eq_residual={eq_residual:.3e}, min_g={min_g:.3e})")]
    NotConverged {
        iters: usize,
        eq_residual: f64,
        min_g: f64,
        best: Box<crate::zero_temp::ZeroTempSolution>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn precondition<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Precondition(msg.into()))
}
