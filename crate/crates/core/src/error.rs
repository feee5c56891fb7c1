use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration for `{field}`: {reason}")]
    Config { field: &'static str, reason: String },

    #[error("dimension mismatch: expected length {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("unsupported derivative order {0} (expected 1..=4)")]
    UnsupportedOrder(usize),

    #[error("unsupported nonlinearity exponent p = {0} (quadratized form exists for p in {{2, 3, 5}})")]
    UnsupportedExponent(u32),

    #[error("unsupported stage count {0} (expected 1..={max})", max = crate::tableau::MAX_STAGES)]
    UnsupportedStages(usize),

    #[error("inconsistent state: {0}")]
    State(String),

    #[error("imaginary residue {residue:e} exceeds tolerance relative to scale {scale:e}")]
    ImaginaryResidue { residue: f64, scale: f64 },

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("fixed-point iteration did not converge after {iters} iterations (residual {residual:e})")]
    NonConvergence { iters: usize, residual: f64 },

    #[error("solver diverged at iteration {iter}: non-finite stage values")]
    Divergence { iter: usize },

    #[error("unknown preset `{name}`; available: {available}")]
    UnknownPreset { name: String, available: String },

    #[error("observer aborted the run: {0}")]
    Observer(String),
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { expected, got })
    }
}
