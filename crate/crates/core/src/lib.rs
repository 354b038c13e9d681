//! Numerical toolkit for rank-one spiked matrix estimation.
//!
//! The crate evaluates the replica-symmetric limits of the spiked Wigner and
//! spiked Wishart models, runs approximate message passing (AMP), state
//! evolution and PCA on synthetic instances, and provides exact-enumeration
//! ground truth at small sizes.
//!
//! Module map:
//!
//! - [`priors`]: signal distributions as atoms plus Gaussian components.
//! - [`scalar_channel`]: free energy, MMSE and posterior-mean denoiser of the
//!   scalar Gaussian channel `Y = sqrt(gamma) X + Z`, plus the monotone conjugate.
//! - [`rs_wigner`]: the symmetric potential, its stationary points, limits and
//!   phase classification.
//! - [`rs_wishart`]: the rectangular potential, fixed-point set and limits.
//! - [`dynamics`]: instance generation, PCA, AMP and state evolution.
//! - [`oracle`]: brute-force posteriors and Monte Carlo estimators.

pub mod dynamics;
pub mod error;
pub mod optim;
pub mod oracle;
pub mod priors;
pub mod rng;
pub mod rs_wigner;
pub mod rs_wishart;
pub mod scalar_channel;

pub use error::{Error, Result};
pub use priors::Prior;
pub use scalar_channel::{ChannelEval, Integrator, QuadratureRule, ScalarChannel};
