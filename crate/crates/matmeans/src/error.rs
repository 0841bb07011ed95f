//! Error types shared across the crate.

use thiserror::Error;

/// Everything that can go wrong in this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Two or more eigenvalues coincide within the tie tolerance, and the
    /// requested operation needs a simple spectrum (eigenvalue-repulsion
    /// priors are unbounded on that set).
    #[error("degenerate spectrum: eigenvalue gap {gap:e} below tolerance {tol:e}")]
    DegenerateSpectrum { gap: f64, tol: f64 },

    /// A matrix that must be symmetric positive definite is not.
    #[error("matrix is not symmetric positive definite: {0}")]
    NotPositiveDefinite(String),

    /// Linear algebra broke down (singular precision, failed factorization).
    #[error("numeric failure: {0}")]
    NumericFailure(String),

    /// An accept-reject or rejection sampler exceeded its attempt cap.
    #[error(
        "sampler exceeded {attempts} attempts without accepting; acceptance \
         degrades when V or the block count m is small"
    )]
    StuckSampler { attempts: u64 },

    /// The requested operation needs a proper posterior.
    #[error("posterior is improper: {rule}")]
    ImproperPosterior { rule: String },

    /// The sampler plan is incompatible with the hyperprior specification.
    #[error("plan incompatible with prior specification: {0}")]
    PlanIncompatible(String),

    /// A quadrature estimate is truncation-sensitive: doubling the eigenvalue
    /// cutoff moved the estimate by more than 3 standard errors.
    #[error(
        "inconclusive integration: doubling d_max shifted the estimate by \
         {shift:.3e} (> 3 x SE {se:.3e})"
    )]
    InconclusiveIntegration { shift: f64, se: f64 },

    /// A risk-simulation estimator failed on one replicate.
    #[error("estimator failed on replicate {replicate}: {source}")]
    EstimatorFailure {
        replicate: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
