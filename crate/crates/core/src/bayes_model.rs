//! Log densities of the hierarchical model, each up to an additive constant
//! that does not depend on any estimated quantity.
//!
//! * likelihood: i.i.d. Gaussian intensity noise,
//!   `-M ln(sqrt(2 pi) sigma) - |I o phi - I_n|^2 / (2 sigma^2)`
//! * prior on the initial velocity: `1/2 ln|L| - 1/2 <L v, L v>`
//! * Gamma hyperprior on `alpha` with shape `k` and scale `beta`.

use crate::error::{AtlasError, Result};
use crate::fourier_field::{OperatorCoeffs, SpectralVelocity};
use crate::geodesic::{warp_image, DeformationField};
use crate::grid::Image;
use crate::special::ln_gamma;

/// Intensity noise variance and the voxel count it applies to.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseModel {
    sigma2: f64,
    voxels: usize,
}

impl NoiseModel {
    pub fn new(sigma2: f64, voxels: usize) -> Result<Self> {
        if !(sigma2.is_finite() && sigma2 > 0.0) {
            return Err(AtlasError::invalid(
                "sigma2",
                format!("noise variance must be positive, got {sigma2}"),
            ));
        }
        if voxels == 0 {
            return Err(AtlasError::invalid("voxels", "need at least one voxel"));
        }
        Ok(Self { sigma2, voxels })
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn voxels(&self) -> usize {
        self.voxels
    }
}

/// Gamma(shape `k`, scale `beta`) hyperprior on the smoothness weights.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GammaHyper {
    k: f64,
    beta: f64,
}

impl GammaHyper {
    pub fn new(k: f64, beta: f64) -> Result<Self> {
        if !(k.is_finite() && k > 0.0) {
            return Err(AtlasError::invalid("k", format!("shape must be positive, got {k}")));
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(AtlasError::invalid(
                "beta",
                format!("scale must be positive, got {beta}"),
            ));
        }
        Ok(Self { k, beta })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn mean(&self) -> f64 {
        self.k * self.beta
    }
}

/// Log-likelihood from a precomputed sum of squared residuals.
pub fn log_likelihood_from_rss(rss: f64, noise: &NoiseModel) -> f64 {
    let sigma = noise.sigma2.sqrt();
    let m = noise.voxels as f64;
    -m * ((2.0 * std::f64::consts::PI).sqrt() * sigma).ln() - rss / (2.0 * noise.sigma2)
}

pub fn log_likelihood(
    atlas: &Image,
    target: &Image,
    phi: &DeformationField,
    noise: &NoiseModel,
) -> Result<f64> {
    atlas.same_grid(target)?;
    if noise.voxels != atlas.len() {
        return Err(AtlasError::Shape(format!(
            "noise model counts {} voxels, images have {}",
            noise.voxels,
            atlas.len()
        )));
    }
    let warped = warp_image(atlas, phi)?;
    Ok(log_likelihood_from_rss(warped.squared_distance(target)?, noise))
}

/// `1/2 ln|L| - 1/2 <L v, L v>`, with `ln|L| = 3 sum_xi ln(alpha A + 1)`.
pub fn log_prior(v: &SpectralVelocity, op: &OperatorCoeffs) -> Result<f64> {
    Ok(0.5 * op.log_det() - 0.5 * op.energy(v)?)
}

/// `(k - 1) ln alpha - alpha / beta - k ln beta - ln Gamma(k)`.
pub fn log_hyperprior(alpha: f64, hyper: &GammaHyper) -> Result<f64> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(AtlasError::Domain(format!(
            "smoothness weight must be positive, got {alpha}"
        )));
    }
    Ok((hyper.k - 1.0) * alpha.ln() - alpha / hyper.beta - hyper.k * hyper.beta.ln() - ln_gamma(hyper.k))
}

/// The three components of one subject's log posterior.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PosteriorTerms {
    pub likelihood: f64,
    pub prior: f64,
    pub hyperprior: f64,
}

impl PosteriorTerms {
    pub fn total(&self) -> f64 {
        self.likelihood + self.prior + self.hyperprior
    }
}

/// Log posterior of `(v_n, alpha_n)` for one subject given the atlas,
/// noise and hyperparameters. `op` must be built with `alpha`.
pub fn log_posterior(
    atlas: &Image,
    target: &Image,
    phi: &DeformationField,
    v: &SpectralVelocity,
    op: &OperatorCoeffs,
    noise: &NoiseModel,
    hyper: &GammaHyper,
) -> Result<PosteriorTerms> {
    Ok(PosteriorTerms {
        likelihood: log_likelihood(atlas, target, phi, noise)?,
        prior: log_prior(v, op)?,
        hyperprior: log_hyperprior(op.alpha(), hyper)?,
    })
}
