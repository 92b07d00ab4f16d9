use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch between operands")]
    GridMismatch,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("the zero x-mode (k = 0) has no {0}")]
    ZeroMode(&'static str),

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("delta too large for inversion (sup |alpha'| = {sup_derivative:.3e})")]
    NonContraction { sup_derivative: f64 },

    #[error("delta too large for elliptic solve (residual {residual:.3e} after {sweeps} sweeps)")]
    EllipticDivergence { sweeps: usize, residual: f64 },

    #[error("off-grid evaluation at {point} lies outside the box")]
    OutsideBox { point: f64 },

    #[error("shear-resolution exhausted at t = {t}: spectral tail fraction {tail:.3e}")]
    ResolutionExhausted { t: f64, tail: f64 },

    #[error("spillover: {fraction:.3e} of the field mass sits in the outer 10% of the box")]
    Spillover { fraction: f64 },

    #[error("non-finite values at t = {t}")]
    NonFinite { t: f64 },

    #[error("data spec exceeds the dealiased band: {0}")]
    OutsideDealiasBand(String),

    #[error("fit window underresolved: {0}")]
    WindowUnderresolved(String),

    #[error("no nonzero-mode content to fit")]
    NoNonzeroContent,

    #[error("missing trace terms: {0}")]
    MissingTrace(&'static str),
}
