//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by the numerical kernels and the orchestration layer.
#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A series or iteration failed to reach the requested tolerance.
    #[error("non-convergence: {0}")]
    NonConvergence(String),

    /// An adaptive quadrature could not certify the requested accuracy.
    #[error("quadrature failure: {0}")]
    Quadrature(String),

    /// The single-scalar hypergeometric prefactor could not reconcile the
    /// cross-check radii.
    #[error("calibration inconsistency: {0}")]
    Calibration(String),

    /// No admissible far-field radius satisfied the sign and envelope
    /// conditions.
    #[error("envelope search failed: {0}")]
    EnvelopeFailure(String),

    /// A structural hypothesis on the reaction term failed validation.
    #[error("reaction validation failed: {0}")]
    Validation(String),

    /// Root bracketing ran out of range.
    #[error("bracket failure: {0}")]
    Bracket(String),

    /// An initial value sits at or below the superlinearity threshold.
    #[error("threshold error: {0}")]
    Threshold(String),

    /// Floating-point range exhausted.
    #[error("overflow: {0}")]
    Overflow(String),

    /// A scan could not complete its contract even after grid refinement.
    #[error("scan incomplete: {0}")]
    ScanIncomplete(String),

    /// Malformed or inconsistent run configuration.
    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
