//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Three operations, each cheap enough to rerun on every slider move:
//! deform the bull's-eye template with a prior velocity draw, sample a
//! subject's smoothness weight given that velocity, and tabulate the
//! regularization operator along one frequency axis.

use bayes_atlas::bayes_model::GammaHyper;
use bayes_atlas::fourier_field::{build_operator, FrequencyLattice};
use bayes_atlas::geodesic::{jacobian_determinant, warp_image, ShootingContext};
use bayes_atlas::grid::GridShape;
use bayes_atlas::hmc_sampler::{hmc_sample, AlphaPotential, HmcConfig, Potential};
use bayes_atlas::synthetic::{sample_prior_velocity, template, ShapeFamily};
use bayes_atlas::AtlasError;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wasm_bindgen::prelude::*;

/// Side of the demo images.
pub const SIZE: usize = 64;
/// Frequencies per axis.
pub const EXTENT: usize = 15;
const STEPS: usize = 10;

fn js(e: AtlasError) -> String {
    e.to_string()
}

#[wasm_bindgen(getter_with_clone)]
#[derive(Clone, Debug)]
pub struct Deformed {
    /// Row-major `SIZE x SIZE` intensities.
    pub image: Vec<f64>,
    pub template: Vec<f64>,
    pub size: usize,
    pub min_jacobian: f64,
    pub max_displacement: f64,
}

/// The template pushed through the geodesic of a prior draw at `alpha`,
/// scaled by `magnitude`.
#[wasm_bindgen]
pub fn deform(alpha: f64, magnitude: f64, seed: u32) -> Result<Deformed, String> {
    let shape = GridShape::new(&[SIZE, SIZE]).map_err(js)?;
    let lattice = FrequencyLattice::isotropic(EXTENT, &[SIZE, SIZE]).map_err(js)?;
    let ctx = ShootingContext::new(&lattice, STEPS).map_err(js)?;
    let op = ctx.operator(alpha).map_err(js)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.into());
    let v = sample_prior_velocity(&op, &mut rng).scaled(magnitude);
    let shot = ctx.shoot(&v, &op).map_err(js)?;
    let phi = ctx.deformation(&shot.displacement).map_err(js)?;
    let (tmpl, _) = template(ShapeFamily::BullsEye, &shape).map_err(js)?;
    let image = warp_image(&tmpl, &phi).map_err(js)?;
    Ok(Deformed {
        image: image.into_data(),
        template: tmpl.into_data(),
        size: SIZE,
        min_jacobian: jacobian_determinant(&phi).into_iter().fold(f64::INFINITY, f64::min),
        max_displacement: phi.max_displacement(),
    })
}

/// Zero of the potential gradient by bisection in `ln alpha`. The gradient
/// is negative near zero (for `k > 1`) and positive far out.
fn posterior_mode<P: Potential>(pot: &P) -> Result<f64, AtlasError> {
    let (mut lo, mut hi) = (1e-4f64.ln(), 1e6f64.ln());
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if pot.grad(mid.exp())? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

#[wasm_bindgen(getter_with_clone)]
#[derive(Clone, Debug)]
pub struct AlphaDraws {
    pub samples: Vec<f64>,
    pub accept_rate: f64,
    pub step_size: f64,
    pub mean: f64,
}

/// HMC draws of `alpha` for a velocity drawn from the prior at
/// `alpha_true`, under a Gamma(k, beta) hyperprior. The chain starts at
/// the posterior mode; with an unscaled draw it should sit near
/// `alpha_true`.
#[wasm_bindgen]
pub fn sample_alpha(alpha_true: f64, k: f64, beta: f64, draws: usize, seed: u32) -> Result<AlphaDraws, String> {
    let lattice = FrequencyLattice::isotropic(EXTENT, &[SIZE, SIZE]).map_err(js)?;
    let ctx = ShootingContext::new(&lattice, STEPS).map_err(js)?;
    let op = ctx.operator(alpha_true).map_err(js)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.into());
    let v = sample_prior_velocity(&op, &mut rng);
    let hyper = GammaHyper::new(k, beta).map_err(js)?;
    let pot = AlphaPotential::new(ctx.laplacian(), &v, hyper).map_err(js)?;
    let config = HmcConfig {
        n_samples: draws.max(1),
        burn_in: 100,
        seed: seed.into(),
        ..HmcConfig::default()
    };
    let start = posterior_mode(&pot).map_err(js)?;
    let chain = hmc_sample(&pot, start, &config, 0, 0).map_err(js)?;
    Ok(AlphaDraws {
        accept_rate: chain.accept_rate(),
        step_size: chain.step_size,
        mean: chain.mean(),
        samples: chain.samples,
    })
}

#[wasm_bindgen(getter_with_clone)]
#[derive(Clone, Debug)]
pub struct OperatorProfile {
    /// Integer frequencies `0..=EXTENT/2` along the first axis.
    pub frequency: Vec<f64>,
    pub l: Vec<f64>,
    pub k: Vec<f64>,
}

/// `L(xi)` and `K(xi) = 1 / L(xi)` along the first frequency axis.
#[wasm_bindgen]
pub fn operator_profile(alpha: f64) -> Result<OperatorProfile, String> {
    let lattice = FrequencyLattice::isotropic(EXTENT, &[SIZE, SIZE]).map_err(js)?;
    let op = build_operator(&lattice, alpha).map_err(js)?;
    let half = (EXTENT / 2) as i64;
    let mut out = OperatorProfile {
        frequency: Vec::new(),
        l: Vec::new(),
        k: Vec::new(),
    };
    for f in 0..=half {
        let idx = lattice.index_of(&[f, 0]).expect("inside the lattice");
        out.frequency.push(f as f64);
        out.l.push(op.l()[idx]);
        out.k.push(op.k()[idx]);
    }
    Ok(out)
}
