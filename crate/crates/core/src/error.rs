use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A non-finite or otherwise malformed input value.
    #[error("invalid input: {0}")]
    Input(String),

    /// An argument outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// The damper fit did not converge; the best iterate is carried along.
    #[error("damper fit failed after {iterations} iterations (residual rms {residual_rms:e})")]
    FitFailure {
        best: [f64; 4],
        residual_rms: f64,
        iterations: usize,
    },

    #[error("static equilibrium not found: {0}")]
    EquilibriumNotFound(String),

    /// Integration produced NaN/Inf; `time` is the first sample where it was seen.
    #[error("simulation diverged at t = {time} s")]
    Divergence { time: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("optimizer error: {0}")]
    Optimizer(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub(crate) fn ensure_finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::Input(format!("{name} must be finite, got {value}")))
    }
}
