//! Differentially private principal component analysis through the
//! exponential mechanism on orthonormal frames.
//!
//! The crate privatizes the top-`k` eigenvectors of a sample covariance
//! matrix by drawing from the Gibbs distribution
//! `nu(V | Sigma, beta, k) ∝ exp((p beta / 2) tr[V' Sigma V])` over `p x k`
//! frames, and ships the surrounding machinery needed to use that mechanism
//! responsibly:
//!
//! - [`spectral`]: datasets, covariance, eigendecomposition, and the
//!   empirical Hilbert-transform statistics behind every closed form.
//! - [`mechanism`]: a Haar baseline, a fast approximate Gibbs sampler, and an
//!   exact independence Metropolis-Hastings corrector.
//! - [`theory`]: asymptotic utility predictions, the privacy curve
//!   `beta -> sigma_beta` with its plateau, noise calibration
//!   `w^2 -> beta(w^2)`, worst-case neighboring data points, and Gaussian
//!   trade-off evaluation.
//! - [`adaptive`]: differentially private plug-in estimates of the
//!   calibration quantities and the end-to-end adaptive mechanism.
//! - [`preprocess`]: rank-transform normalization that certifies the
//!   `sqrt(p)` row-norm bound.
//! - [`audit`]: Monte-Carlo estimation of utility and trade-off functions,
//!   small-dimension quadrature oracles, and Procrustes alignment.
//! - [`cli`]: the `dppca` command-line pipelines.
//!
//! See the crate `examples/` directory for one runnable walkthrough per
//! capability.

pub mod adaptive;
pub mod audit;
pub mod cli;
pub mod error;
pub mod io;
pub mod mechanism;
pub mod normal;
pub mod preprocess;
pub mod rng;
pub mod spectral;
pub mod synth;
pub mod theory;

pub use error::{Error, Result};
pub use mechanism::{GibbsTarget, OrthoFrame, SamplerConfig, SamplerMode};
pub use spectral::{covariance, eig_sym, Dataset, SpectralSummary};
