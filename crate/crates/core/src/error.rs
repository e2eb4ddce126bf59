use thiserror::Error;

/// Errors raised across the waveguide toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("integration failed at s = {s}: {reason}")]
    Integration { s: f64, reason: String },

    #[error("ellipticity violated: {detail} (value {value:.6e})")]
    Ellipticity { detail: String, value: f64 },

    #[error("metric degenerates at (s = {s}, u = {u:?}): h = {h:.6e} below floor {floor:.3e}")]
    Singularity {
        s: f64,
        u: Vec<f64>,
        h: f64,
        floor: f64,
    },

    #[error("insufficient resolution: {0}")]
    Resolution(String),

    #[error("insufficient coverage: {0}")]
    Coverage(String),

    #[error("truncation: {0}")]
    Truncation(String),

    #[error("derivative of order {requested} requested but only {available} available")]
    DerivativeOrder { requested: usize, available: usize },

    #[error("eigensolver did not converge after {iterations} iterations (best residual {residual:.3e})")]
    Solver { iterations: usize, residual: f64 },

    #[error("factorization broke down: {0}")]
    Factorization(String),

    #[error("invalid spectral window: {0}")]
    Window(String),

    #[error("non-monotone convergence: {0}")]
    Diagnostics(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}
