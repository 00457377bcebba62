use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(&'static str),
    #[error("grid mismatch: {0}")]
    GridMismatch(&'static str),
    #[error("insufficient history: need {needed} entries, have {available}")]
    History { needed: usize, available: usize },
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
    #[error("unsupported: {0}")]
    Unsupported(&'static str),
    #[error("reference integrator failed at t = {t}: step size {h} underflowed")]
    StepUnderflow { t: f64, h: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;
