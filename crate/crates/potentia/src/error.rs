//! Error type shared by every module in the crate.
//!
//! The variants are coarse on purpose: each one maps to a distinct failure
//! *class* a caller can act on (reject the config, refine the grid, widen the
//! horizon), while the payload strings carry the specifics.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A constructor or operation received a value outside its documented
    /// domain (non-positive rate, shape out of range, dimension mismatch, …).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An operation that needs a finite first moment was given a model whose
    /// mean diverges. Refusing beats silently truncating: every downstream
    /// tail asymptotic would inherit the corruption.
    #[error("infinite mean: {0}")]
    InfiniteMean(String),

    /// A tail value underflowed to exactly zero where a ratio against it was
    /// requested. Callers should move the computation to log-domain
    /// quantities or probe at a smaller abscissa.
    #[error("tail underflow; use log-domain extent")]
    TailUnderflow,

    /// Two lattice measures with different grids (step, origin, or extent)
    /// were combined. Convolution is only defined cell-by-cell on a shared
    /// lattice.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// The kernel mass is ≥ 1, so the renewal operator is not a contraction
    /// and neither the fixed-point iteration nor the geometric series
    /// converges.
    #[error("kernel mass {mass} is not a contraction (requires mass < 1)")]
    NotContractive { mass: f64 },

    /// The iteration cap was reached before the residual dropped below the
    /// requested tolerance. `trace_tail` holds the last few residuals so the
    /// caller can see whether the iteration was diverging or merely slow.
    #[error(
        "no convergence after {iterations} iterations; residual {residual:.3e}; \
         recent residuals [{trace_tail}]"
    )]
    NonConvergence {
        iterations: usize,
        residual: f64,
        trace_tail: String,
    },

    /// The requested operation is not available for this small-component
    /// kind (e.g. kernel construction for mean-reverting dynamics, whose
    /// transition density has no closed form here).
    #[error("unsupported small component: {0}")]
    UnsupportedComponent(String),

    /// A regression over the requested window has (numerically) no slope
    /// information — constant data or fewer usable points than parameters.
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    /// A ladder-based classification could not commit to a limit: the
    /// evidence is non-monotone or has not stabilised. This is a first-class
    /// outcome, never silently replaced by a guess.
    #[error("inconclusive: {0}")]
    Inconclusive(String),

    /// Premium income does not exceed the expected claim outflow in the
    /// named coordinate, so ruin is certain and ruin-probability estimators
    /// are meaningless.
    #[error(
        "net profit condition violated in coordinate {coordinate}: \
         premium rate {premium} must exceed expected claim outflow {claim_drain}"
    )]
    NetProfitViolation {
        coordinate: usize,
        premium: f64,
        claim_drain: f64,
    },
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
