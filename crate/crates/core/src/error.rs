//! Error type shared across the crate.

use thiserror::Error;

/// Errors raised by state construction, simulation stages, and I/O-free
/// numerical checks. CLI-level I/O failures are wrapped separately by the
/// binary.
#[derive(Debug, Error)]
pub enum Error {
    /// A requested amplitude needs more Fock levels than the policy provides.
    #[error(
        "cutoff too small: mean photon number {mean_photon:.6} leaves tail {tail:.3e} \
         at dimension {dim}, above the bound {bound:.3e}"
    )]
    CutoffTooSmall {
        mean_photon: f64,
        dim: usize,
        tail: f64,
        bound: f64,
    },

    /// Probability weight reached the last retained Fock level of a mode
    /// during evolution, so the truncated result can no longer be trusted.
    #[error(
        "cutoff leak on mode `{mode}`: top-level weight {weight:.3e} exceeds the bound {bound:.3e}"
    )]
    CutoffLeak {
        mode: String,
        weight: f64,
        bound: f64,
    },

    /// Two states or modes that must share a shape do not.
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    /// A mode label was not found on the state.
    #[error("unknown mode label `{0}`")]
    UnknownMode(String),

    /// A mode label would appear twice on one state.
    #[error("duplicate mode label `{0}`")]
    DuplicateMode(String),

    /// An operation hit a state or parameter set with (numerically) zero
    /// norm where a normalized object is required.
    #[error("degenerate state: {0}")]
    Degenerate(String),

    /// Parameters outside the supported domain.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An internal consistency check failed; indicates a bug or a broken
    /// precondition rather than a user error.
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;
