//! Hierarchical Bayes for the exchangeable "matrix of means" model
//!
//! ```text
//! X_i ~ N_k(theta_i, I),   theta_i ~ N_k(beta, V),   i = 1..m,
//! ```
//!
//! with an objective hyperprior pi(beta, V) = pi(beta) pi(V) drawn from a
//! two-parameter family of (usually improper) priors on the covariance V and
//! three standard choices for beta.
//!
//! The crate provides, in matching modules:
//!
//! - [`model`], [`prior`], [`linalg`], [`randmat`]: domain types, prior
//!   log-densities, spectral coordinates V = H^t D H, and the random-matrix
//!   primitives (Haar orthogonal, Wishart / inverse-Wishart).
//! - [`analysis`]: closed-form classification of each hyperprior — does the
//!   posterior exist, and is the posterior mean admissible under quadratic
//!   loss — with the governing rule attached to every verdict.
//! - [`marginal`] and [`probe`]: numerical oracles for the marginal density
//!   m(x), spherical averages and their growth exponents, and 1-D divergence
//!   probes that cross-check the analytic propriety rules.
//! - [`samplers`]: the full conditional Gibbs steps, an exact accept-reject
//!   step for the hierarchical Jeffreys prior, independence
//!   Metropolis-Hastings for the reference priors, a marginal rejection
//!   sampler, a random-direction walk on the matrix-log scale for the
//!   (V, lambda) marginal, and chain orchestration.
//! - [`estimate`]: posterior-mean extraction, quadratic loss, frequentist
//!   risk Monte Carlo, and the shrinkage boundedness probe.
//!
//! Everything is deterministic given an explicit seed and safe to use from
//! multiple threads as long as each caller owns its random stream.

pub mod analysis;
pub mod error;
pub mod estimate;
pub mod linalg;
pub mod marginal;
pub mod model;
pub mod prior;
pub mod probe;
pub mod randmat;
pub mod samplers;

mod exact;
pub mod numeric;

pub use error::{Error, Result};
pub use model::{ChainState, ModelData};
pub use prior::{
    named_v_prior, BetaPriorSpec, HyperpriorSpec, VPriorName, VPriorParams,
};
