//! Hamiltonian Monte Carlo over a subject's smoothness weight `alpha`.
//!
//! The potential is the negated `alpha`-dependent part of the log posterior:
//!
//! ```text
//! U(a) = -3/2 sum ln(a A + 1) + 1/2 sum (a A + 1)^6 w - (k - 1) ln a + a / beta
//! ```
//!
//! where `w(xi) = sum_comp |v(xi)|^2`. Kinetic energy is `gamma^2 / 2`.
//! Trajectories that step into `alpha <= 0` are rejected outright.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::bayes_model::GammaHyper;
use crate::error::{AtlasError, Result};
use crate::fourier_field::{laplacian_symbol, SpectralVelocity};

/// Leapfrog step size policy, resolved once per chain so the kernel stays
/// fixed within a chain.
///
/// `Relative(c)` gives `c * alpha_start`. `Curvature(c)` gives
/// `c / sqrt(U''(alpha_start))`, a fraction of the local posterior width,
/// which keeps acceptance roughly independent of lattice size.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepSize {
    Fixed(f64),
    Relative(f64),
    Curvature(f64),
}

/// Used by `Curvature` where the potential is not locally convex.
const CURVATURE_FALLBACK: f64 = 0.01;

impl StepSize {
    pub fn factor(&self) -> f64 {
        match *self {
            StepSize::Fixed(e) | StepSize::Relative(e) | StepSize::Curvature(e) => e,
        }
    }

    pub fn resolve<P: Potential + ?Sized>(&self, pot: &P, alpha_start: f64) -> Result<f64> {
        Ok(match *self {
            StepSize::Fixed(e) => e,
            StepSize::Relative(c) => c * alpha_start,
            StepSize::Curvature(c) => {
                let h = 1e-4 * alpha_start;
                let u2 = (pot.grad(alpha_start + h)? - pot.grad(alpha_start - h)?) / (2.0 * h);
                if u2.is_finite() && u2 > 0.0 {
                    c / u2.sqrt()
                } else {
                    CURVATURE_FALLBACK * alpha_start
                }
            }
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HmcConfig {
    pub step_size: StepSize,
    pub n_leapfrog: usize,
    pub n_samples: usize,
    pub burn_in: usize,
    pub seed: u64,
}

impl Default for HmcConfig {
    fn default() -> Self {
        Self {
            step_size: StepSize::Curvature(1.0),
            n_leapfrog: 10,
            n_samples: 10,
            burn_in: 50,
            seed: 0,
        }
    }
}

impl HmcConfig {
    pub fn validate(&self) -> Result<()> {
        let eps = self.step_size.factor();
        if !(eps.is_finite() && eps > 0.0) {
            return Err(AtlasError::invalid("step_size", format!("must be positive, got {eps}")));
        }
        if self.n_leapfrog == 0 {
            return Err(AtlasError::invalid("n_leapfrog", "need at least one leapfrog step"));
        }
        if self.n_samples == 0 {
            return Err(AtlasError::invalid("n_samples", "need at least one sample"));
        }
        Ok(())
    }
}

/// Post-burn-in draws of one chain with its acceptance statistics
/// (counted over burn-in and sampling alike).
#[derive(Clone, Debug, PartialEq)]
pub struct AlphaSamples {
    pub subject: usize,
    pub samples: Vec<f64>,
    pub accepted: usize,
    pub proposals: usize,
    pub step_size: f64,
}

impl AlphaSamples {
    pub fn accept_rate(&self) -> f64 {
        if self.proposals == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposals as f64
        }
    }

    pub fn is_stuck(&self) -> bool {
        self.proposals > 0 && self.accepted == 0
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    /// Errors when every proposal of the chain was rejected.
    pub fn ensure_mixing(&self) -> Result<()> {
        if self.is_stuck() {
            Err(AtlasError::ChainStuck {
                subject: self.subject,
                proposals: self.proposals,
            })
        } else {
            Ok(())
        }
    }
}

/// A one-dimensional potential energy on `alpha > 0`.
pub trait Potential {
    fn value(&self, alpha: f64) -> Result<f64>;
    fn grad(&self, alpha: f64) -> Result<f64>;
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > 0.0 {
        Ok(())
    } else {
        Err(AtlasError::Domain(format!(
            "smoothness weight must be positive, got {alpha}"
        )))
    }
}

/// Per-frequency squared magnitude summed over components.
pub fn velocity_weights(v: &SpectralVelocity) -> Vec<f64> {
    let mut w = vec![0.0; v.lattice().len()];
    for c in v.comps() {
        for (wi, z) in w.iter_mut().zip(c) {
            *wi += z.norm_sqr();
        }
    }
    w
}

/// The subject potential, with the velocity reduced to frequency weights.
#[derive(Clone, Debug)]
pub struct AlphaPotential {
    laplacian: Vec<f64>,
    weights: Vec<f64>,
    hyper: GammaHyper,
}

impl AlphaPotential {
    pub fn new(laplacian: &[f64], v: &SpectralVelocity, hyper: GammaHyper) -> Result<Self> {
        Self::from_weights(laplacian, velocity_weights(v), hyper)
    }

    /// `weights` may be averaged over several velocities: the quadratic
    /// term is linear in them.
    pub fn from_weights(laplacian: &[f64], weights: Vec<f64>, hyper: GammaHyper) -> Result<Self> {
        if laplacian.len() != weights.len() {
            return Err(AtlasError::Shape(format!(
                "{} symbol entries vs {} weights",
                laplacian.len(),
                weights.len()
            )));
        }
        Ok(Self {
            laplacian: laplacian.to_vec(),
            weights,
            hyper,
        })
    }

    pub fn hyper(&self) -> &GammaHyper {
        &self.hyper
    }
}

impl Potential for AlphaPotential {
    fn value(&self, alpha: f64) -> Result<f64> {
        check_alpha(alpha)?;
        let mut log_det = 0.0;
        let mut quad = 0.0;
        for (&a, &w) in self.laplacian.iter().zip(&self.weights) {
            let s = alpha * a + 1.0;
            log_det += s.ln();
            quad += s.powi(6) * w;
        }
        let (k, beta) = (self.hyper.k(), self.hyper.beta());
        Ok(-1.5 * log_det + 0.5 * quad - (k - 1.0) * alpha.ln() + alpha / beta)
    }

    fn grad(&self, alpha: f64) -> Result<f64> {
        check_alpha(alpha)?;
        let mut log_det = 0.0;
        let mut quad = 0.0;
        for (&a, &w) in self.laplacian.iter().zip(&self.weights) {
            let s = alpha * a + 1.0;
            log_det += a / s;
            quad += s.powi(5) * a * w;
        }
        let (k, beta) = (self.hyper.k(), self.hyper.beta());
        Ok(-1.5 * log_det + 3.0 * quad - (k - 1.0) / alpha + 1.0 / beta)
    }
}

/// A bare Gamma(k, beta) target, `U(a) = -(k - 1) ln a + a / beta`.
#[derive(Clone, Copy, Debug)]
pub struct GammaTarget(pub GammaHyper);

impl Potential for GammaTarget {
    fn value(&self, alpha: f64) -> Result<f64> {
        check_alpha(alpha)?;
        Ok(-(self.0.k() - 1.0) * alpha.ln() + alpha / self.0.beta())
    }

    fn grad(&self, alpha: f64) -> Result<f64> {
        check_alpha(alpha)?;
        Ok(-(self.0.k() - 1.0) / alpha + 1.0 / self.0.beta())
    }
}

/// `U(alpha)` for one subject velocity.
pub fn potential(alpha: f64, v: &SpectralVelocity, hyper: &GammaHyper) -> Result<f64> {
    AlphaPotential::new(&laplacian_symbol(v.lattice()), v, *hyper)?.value(alpha)
}

/// `dU/dalpha` for one subject velocity.
pub fn potential_grad(alpha: f64, v: &SpectralVelocity, hyper: &GammaHyper) -> Result<f64> {
    AlphaPotential::new(&laplacian_symbol(v.lattice()), v, *hyper)?.grad(alpha)
}

/// Kick-drift-kick leapfrog. `Ok(None)` when the position leaves
/// `alpha > 0`.
pub fn leapfrog<P: Potential + ?Sized>(
    pot: &P,
    alpha: f64,
    gamma: f64,
    eps: f64,
    steps: usize,
) -> Result<Option<(f64, f64)>> {
    check_alpha(alpha)?;
    let mut a = alpha;
    let mut g = gamma - 0.5 * eps * pot.grad(a)?;
    for i in 0..steps {
        a += eps * g;
        if !(a > 0.0 && a.is_finite()) {
            return Ok(None);
        }
        let kick = if i + 1 == steps { 0.5 * eps } else { eps };
        g -= kick * pot.grad(a)?;
    }
    Ok(Some((a, g)))
}

/// Random stream of one chain: seeded from `master + subject`, with
/// `stream` separating successive calls for the same subject.
pub fn chain_rng(master: u64, subject: usize, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master.wrapping_add(subject as u64));
    rng.set_stream(stream);
    rng
}

/// Runs one chain from `start` and returns `n_samples` draws after
/// `burn_in` discarded transitions.
pub fn hmc_sample<P: Potential + ?Sized>(
    pot: &P,
    start: f64,
    config: &HmcConfig,
    subject: usize,
    stream: u64,
) -> Result<AlphaSamples> {
    config.validate()?;
    check_alpha(start)?;
    let eps = config.step_size.resolve(pot, start)?;
    let mut rng = chain_rng(config.seed, subject, stream);
    let mut alpha = start;
    let mut u = pot.value(alpha)?;
    let mut samples = Vec::with_capacity(config.n_samples);
    let mut accepted = 0;
    let total = config.burn_in + config.n_samples;
    for it in 0..total {
        let gamma: f64 = rng.sample(StandardNormal);
        let log_u: f64 = rng.random::<f64>().ln();
        if let Some((a1, g1)) = leapfrog(pot, alpha, gamma, eps, config.n_leapfrog)? {
            let u1 = pot.value(a1)?;
            let h0 = u + 0.5 * gamma * gamma;
            let h1 = u1 + 0.5 * g1 * g1;
            if log_u < h0 - h1 {
                alpha = a1;
                u = u1;
                accepted += 1;
            }
        }
        if it >= config.burn_in {
            samples.push(alpha);
        }
    }
    let out = AlphaSamples {
        subject,
        samples,
        accepted,
        proposals: total,
        step_size: eps,
    };
    if out.is_stuck() {
        log::warn!(
            "alpha chain for subject {subject} rejected all {total} proposals (step {eps:.3e})"
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier_field::{FrequencyLattice, SpectralField, C64};

    fn random_velocity(lat: &FrequencyLattice, seed: u64, scale: f64) -> SpectralField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v = SpectralField::zero_velocity(lat);
        for c in v.comps_mut() {
            for z in c.iter_mut() {
                *z = C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5) * scale;
            }
        }
        v.symmetrize();
        v
    }

    #[test]
    fn zero_velocity_unit_shape_potential() {
        let lat = FrequencyLattice::new(&[9], &[16]).unwrap();
        let v = SpectralField::zero_velocity(&lat);
        let hyper = GammaHyper::new(1.0, 2.0).unwrap();
        let a = laplacian_symbol(&lat);
        for &alpha in &[0.1, 1.0, 10.0] {
            let u = potential(alpha, &v, &hyper).unwrap();
            let ld: f64 = a.iter().map(|x| (alpha * x + 1.0).ln()).sum();
            assert!((u - (-1.5 * ld + alpha / 2.0)).abs() < 1e-12);
        }
        let big = GammaHyper::new(1.0, 1e300).unwrap();
        let g = potential_grad(2.0, &v, &big).unwrap();
        let expected: f64 = -1.5 * a.iter().map(|x| x / (2.0 * x + 1.0)).sum::<f64>();
        assert!((g - expected).abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let lat = FrequencyLattice::new(&[9], &[16]).unwrap();
        let hyper = GammaHyper::new(9.0, 0.1).unwrap();
        for seed in 0..10 {
            let v = random_velocity(&lat, seed, 0.01);
            let alpha = 0.1 + seed as f64;
            let h = 1e-5 * alpha;
            let fd = (potential(alpha + h, &v, &hyper).unwrap()
                - potential(alpha - h, &v, &hyper).unwrap())
                / (2.0 * h);
            let g = potential_grad(alpha, &v, &hyper).unwrap();
            assert!((g - fd).abs() <= 1e-5 * g.abs().max(1e-12), "seed {seed}: {g} vs {fd}");
        }
    }

    #[test]
    fn nonpositive_alpha_is_a_domain_error() {
        let pot = GammaTarget(GammaHyper::new(2.0, 1.0).unwrap());
        assert!(pot.value(0.0).is_err());
        assert!(pot.grad(-1.0).is_err());
    }

    #[test]
    fn free_particle() {
        struct Flat;
        impl Potential for Flat {
            fn value(&self, _: f64) -> Result<f64> {
                Ok(0.0)
            }
            fn grad(&self, _: f64) -> Result<f64> {
                Ok(0.0)
            }
        }
        let (a, g) = leapfrog(&Flat, 1.0, 0.3, 0.1, 7).unwrap().unwrap();
        assert!((a - (1.0 + 0.1 * 7.0 * 0.3)).abs() < 1e-15);
        assert_eq!(g, 0.3);
        assert!(leapfrog(&Flat, 1.0, -1.0, 0.5, 4).unwrap().is_none());
    }

    #[test]
    fn harmonic_energy_error_is_second_order() {
        struct Harmonic;
        impl Potential for Harmonic {
            fn value(&self, a: f64) -> Result<f64> {
                Ok(0.5 * (a - 5.0) * (a - 5.0))
            }
            fn grad(&self, a: f64) -> Result<f64> {
                Ok(a - 5.0)
            }
        }
        let energy = |a: f64, g: f64| 0.5 * (a - 5.0) * (a - 5.0) + 0.5 * g * g;
        let err = |eps: f64| {
            let steps = (1.0 / eps).round() as usize;
            let (a, g) = leapfrog(&Harmonic, 5.5, 0.8, eps, steps).unwrap().unwrap();
            (energy(a, g) - energy(5.5, 0.8)).abs()
        };
        let ratio = err(0.1) / err(0.05);
        assert!(ratio > 3.0 && ratio < 5.0, "ratio {ratio}");
    }

    #[test]
    fn chains_are_reproducible_and_positive() {
        let lat = FrequencyLattice::new(&[7, 7], &[16, 16]).unwrap();
        let v = random_velocity(&lat, 3, 0.001);
        let pot = AlphaPotential::new(&laplacian_symbol(&lat), &v, GammaHyper::new(9.0, 0.1).unwrap())
            .unwrap();
        let cfg = HmcConfig {
            n_samples: 40,
            seed: 11,
            ..HmcConfig::default()
        };
        let a = hmc_sample(&pot, 1.0, &cfg, 2, 0).unwrap();
        let b = hmc_sample(&pot, 1.0, &cfg, 2, 0).unwrap();
        assert_eq!(a, b);
        assert!(a.samples.iter().all(|&x| x > 0.0));
        let c = hmc_sample(&pot, 1.0, &cfg, 2, 1).unwrap();
        assert_ne!(a.samples, c.samples);
    }

    #[test]
    fn curvature_step_uses_local_width() {
        // Gamma(k, beta) target: U'' = (k - 1) / a^2
        let pot = GammaTarget(GammaHyper::new(9.0, 0.1).unwrap());
        let eps = StepSize::Curvature(0.5).resolve(&pot, 0.8).unwrap();
        assert!((eps - 0.5 * 0.8 / 8f64.sqrt()).abs() < 1e-8, "{eps}");
        // concave at the start point: fall back to a relative step
        let flat = GammaTarget(GammaHyper::new(1.0, 0.1).unwrap());
        let eps = StepSize::Curvature(0.5).resolve(&flat, 2.0).unwrap();
        assert!((eps - CURVATURE_FALLBACK * 2.0).abs() < 1e-15);
    }

    #[test]
    fn tiny_step_accepts_everything() {
        let pot = GammaTarget(GammaHyper::new(9.0, 0.1).unwrap());
        let cfg = HmcConfig {
            step_size: StepSize::Fixed(1e-9),
            n_samples: 20,
            burn_in: 0,
            ..HmcConfig::default()
        };
        let s = hmc_sample(&pot, 0.8, &cfg, 0, 0).unwrap();
        assert_eq!(s.accepted, s.proposals);
        assert!(s.samples.iter().all(|&x| (x - 0.8).abs() < 1e-6));
    }

    #[test]
    fn stuck_chain_is_reported() {
        let s = AlphaSamples {
            subject: 4,
            samples: vec![1.0],
            accepted: 0,
            proposals: 60,
            step_size: 0.1,
        };
        assert!(s.is_stuck());
        assert!(matches!(s.ensure_mixing(), Err(AtlasError::ChainStuck { subject: 4, .. })));
    }
}
