use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("division by zero: {0}")]
    DivisionByZero(&'static str),

    /// The reduced equations carry a 1/sqrt(1 - z^2) pole at |z| = 1.
    #[error("1/sqrt(1-z^2) pole reached at t={t}, z={z}, phi={phi}")]
    Singularity { t: f64, z: f64, phi: f64 },

    #[error("non-finite rate encountered at t={t}")]
    NonFinite { t: f64 },

    #[error("step size fell below h_min={h_min} at t={t} (state {state:?})")]
    StepUnderflow { t: f64, h_min: f64, state: Vec<f64> },

    #[error("no separatrix: lambda*H = {lambda_h} must exceed 1")]
    NoSeparatrix { lambda_h: f64 },

    #[error("quadrature did not converge (achieved error estimate {achieved:e})")]
    Quadrature { achieved: f64 },

    #[error("insufficient data: need more than {needed} points, got {got}")]
    InsufficientPoints { needed: usize, got: usize },

    #[error("series is not uniformly sampled (sample {index} deviates by {deviation:e})")]
    NonUniformSampling { index: usize, deviation: f64 },

    #[error("averaging window is empty")]
    EmptyWindow,
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
