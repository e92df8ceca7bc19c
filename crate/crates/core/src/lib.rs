//! Unbiased deformable atlas building with subject-specific regularization.
//!
//! Images are registered to a common template by geodesic shooting of
//! bandlimited velocity fields. Each subject carries its own smoothness
//! weight `alpha_n` with a Gamma hyperprior; the weights are sampled by
//! Hamiltonian Monte Carlo inside a Monte Carlo EM loop that also estimates
//! the atlas, the noise variance and the hyperparameters.

pub mod error;
mod fft;
pub mod fourier_field;
pub mod geodesic;
pub mod grid;
pub mod special;
pub mod bayes_model;
pub mod hmc_sampler;
pub mod registration;
pub mod mcem;
pub mod metrics;
pub mod gridfile;
pub mod dataset;
pub mod synthetic;

pub use error::{AtlasError, Result};
