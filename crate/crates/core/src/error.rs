use thiserror::Error;

/// Errors raised by the solvers and verifiers.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("unsupported configuration: {0}")]
    Config(String),

    #[error("search box too small: minimizer {point:?} at t = {time} lies on the box boundary")]
    Coercivity { time: f64, point: Vec<f64> },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("discrete energy estimate violated at step {step} (residual {residual:e})")]
    EnergyEstimate { step: usize, residual: f64 },

    #[error("gradient check failed: residual {residual:e} at t = {time}, u = {point:?}")]
    Validation { residual: f64, time: f64, point: Vec<f64> },

    #[error("path resolution too coarse: cost {fine} with {nodes} nodes vs {coarse} with half as many")]
    Resolution { nodes: usize, fine: f64, coarse: f64 },

    #[error("runaway transition: arc length exceeded {max_len} without re-entering the stable set")]
    Runaway { max_len: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("jump at t = {0} has no transition path")]
    IncompleteCurve(f64),

    #[error("range error: {0}")]
    Range(String),

    #[error("verification failed: {0}")]
    Verification(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(name: &str, xs: &[f64]) -> Result<()> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Argument(format!("{name} must have finite entries")))
    }
}
