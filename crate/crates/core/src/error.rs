use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the models. Constraint violations are not errors; they
/// are reported through [`crate::geometry::ConstraintReport`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("expected {expected} slide units (one per cap), got {actual}")]
    SlideCountMismatch { expected: usize, actual: usize },

    #[error("sample rate {sample_rate} Hz is below the required {required} Hz")]
    Nyquist { sample_rate: f64, required: f64 },

    #[error("series is not uniformly sampled")]
    NonUniformSampling,
}

pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidInput(msg()))
    }
}
