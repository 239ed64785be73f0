use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("pulse spectrum vanishes at k = {k}")]
    SpectrumVanishes { k: i64 },

    #[error("pulse spectrum not tabulated at k = {k}")]
    SpectrumMissing { k: i64 },

    #[error("t = {t} lies outside the observation window [{lo}, {hi}]")]
    OutsideObservation { t: f64, lo: f64, hi: f64 },

    #[error("sequence too short: need at least {need} samples, got {got}")]
    TooShort { need: usize, got: usize },

    #[error("sampling design violates distinctness (condition estimate {condition:.3e})")]
    IllConditioned { condition: f64 },

    #[error("ambiguous null space (coincident delays or wrong L): sigma ratio {ratio:.3e}")]
    AmbiguousNullSpace { ratio: f64 },

    #[error("degenerate minimum eigenspace, amplitudes may be non-positive or L wrong (gap {gap:.3e})")]
    DegenerateEigenspace { gap: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("unit coefficients required; use coeff_budget for general kernels")]
    NonUnitCoefficients,

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
