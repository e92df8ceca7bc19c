//! Monte Carlo EM for the atlas, noise variance, Gamma hyperparameters and
//! per-subject velocities, with the smoothness weights sampled by HMC.
//!
//! One iteration:
//! 1. E-step: an HMC chain over `alpha_n` for every subject, given the
//!    subject's mean velocity; the fresh draws give the Monte Carlo `Q`.
//! 2. Velocities `v_nj` for every draw, warm-started from the subject mean.
//! 3. Atlas from the inverse maps, weighted by their Jacobians.
//! 4. Noise variance from the forward maps and the new atlas.
//! 5. `(k, beta)` from all draws.

use rayon::prelude::*;

use crate::bayes_model::{
    log_hyperprior, log_likelihood_from_rss, log_posterior, log_prior, GammaHyper, NoiseModel,
    PosteriorTerms,
};
use crate::error::{AtlasError, Result};
use crate::fourier_field::{spectral_to_spatial, FrequencyLattice, SpectralVelocity};
use crate::geodesic::{jacobian_determinant, warp_image, DeformationField, ShootingContext};
use crate::grid::Image;
use crate::hmc_sampler::{hmc_sample, AlphaPotential, AlphaSamples, HmcConfig};
use crate::registration::{DescentConfig, Registration};
use crate::special::{digamma, inv_digamma, trigamma};

/// Lower clamp on the Jacobian weights of the atlas update.
pub const JACOBIAN_FLOOR: f64 = 1e-6;
/// The stored noise variance never drops below this.
pub const SIGMA2_FLOOR: f64 = 1e-12;
/// Shape estimate used when all draws coincide.
pub const K_CAP: f64 = 1e6;
/// Consecutive small relative changes of `Q` that count as converged.
const PATIENCE: usize = 2;

/// Starting values of the estimated quantities.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InitialValues {
    pub alpha: f64,
    pub k: f64,
    pub beta: f64,
    pub sigma: f64,
}

impl Default for InitialValues {
    fn default() -> Self {
        Self {
            alpha: 10.0,
            k: 9.0,
            beta: 0.1,
            sigma: 0.05,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McemConfig {
    pub em_iterations: usize,
    /// Relative change of `Q` below which an iteration counts as converged.
    pub tolerance: f64,
    /// Integration steps on `[0, 1]`.
    pub time_steps: usize,
    /// Sampler settings; `n_samples` is `S`, draws per subject.
    pub hmc: HmcConfig,
    pub descent: DescentConfig,
    pub init: InitialValues,
}

impl Default for McemConfig {
    fn default() -> Self {
        Self {
            em_iterations: 50,
            tolerance: 1e-4,
            time_steps: crate::geodesic::DEFAULT_STEPS,
            hmc: HmcConfig::default(),
            descent: DescentConfig::default(),
            init: InitialValues::default(),
        }
    }
}

impl McemConfig {
    pub fn validate(&self) -> Result<()> {
        if self.em_iterations == 0 {
            return Err(AtlasError::invalid("em_iterations", "need at least one iteration"));
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(AtlasError::invalid("tolerance", "must be positive"));
        }
        if self.time_steps == 0 {
            return Err(AtlasError::invalid("time_steps", "need at least one step"));
        }
        self.hmc.validate()?;
        self.descent.validate()?;
        let InitialValues { alpha, k, beta, sigma } = self.init;
        for (name, x) in [("alpha", alpha), ("k", k), ("beta", beta), ("sigma", sigma)] {
            if !(x.is_finite() && x > 0.0) {
                return Err(AtlasError::invalid(name, format!("initial value must be positive, got {x}")));
            }
        }
        Ok(())
    }
}

/// Everything the EM loop estimates.
#[derive(Clone, Debug)]
pub struct ModelState {
    pub atlas: Image,
    /// `velocities[n][j]`, one per draw of subject `n`.
    pub velocities: Vec<Vec<SpectralVelocity>>,
    pub mean_velocities: Vec<SpectralVelocity>,
    pub noise: NoiseModel,
    pub hyper: GammaHyper,
    pub alpha_samples: Vec<AlphaSamples>,
    step_memory: Vec<f64>,
}

impl ModelState {
    /// Mean-intensity atlas, zero velocities and every draw at the initial
    /// `alpha`.
    pub fn initialize(images: &[Image], lattice: &FrequencyLattice, config: &McemConfig) -> Result<Self> {
        config.validate()?;
        check_population(images, lattice)?;
        let s = config.hmc.n_samples;
        let zero = SpectralVelocity::zero_velocity(lattice);
        let n = images.len();
        Ok(Self {
            atlas: Image::mean_of(images)?,
            velocities: vec![vec![zero.clone(); s]; n],
            mean_velocities: vec![zero; n],
            noise: NoiseModel::new(config.init.sigma.powi(2), images[0].len())?,
            hyper: GammaHyper::new(config.init.k, config.init.beta)?,
            alpha_samples: (0..n)
                .map(|subject| AlphaSamples {
                    subject,
                    samples: vec![config.init.alpha; s],
                    accepted: 0,
                    proposals: 0,
                    step_size: 0.0,
                })
                .collect(),
            step_memory: vec![config.descent.initial_step; n],
        })
    }

    pub fn subjects(&self) -> usize {
        self.mean_velocities.len()
    }

    pub fn mean_alpha(&self) -> Vec<f64> {
        self.alpha_samples.iter().map(|s| s.mean()).collect()
    }

    /// Largest spatial velocity magnitude over all subjects and draws.
    pub fn max_velocity_magnitude(&self) -> Result<f64> {
        let mut best: f64 = 0.0;
        for v in self.velocities.iter().flatten() {
            best = best.max(spectral_to_spatial(v)?.max_norm());
        }
        Ok(best)
    }

    /// Log posterior of subject `n` at its mean velocity and `alpha`.
    pub fn log_posterior(
        &self,
        ctx: &ShootingContext,
        image: &Image,
        n: usize,
        alpha: f64,
    ) -> Result<PosteriorTerms> {
        let v = self
            .mean_velocities
            .get(n)
            .ok_or_else(|| AtlasError::invalid("subject", format!("no subject {n}")))?;
        let op = ctx.operator(alpha)?;
        let shot = ctx.shoot(v, &op)?;
        let phi = ctx.deformation(&shot.displacement)?;
        log_posterior(&self.atlas, image, &phi, v, &op, &self.noise, &self.hyper)
    }
}

/// At least two images, all on the lattice's full grid.
pub fn check_population(images: &[Image], lattice: &FrequencyLattice) -> Result<()> {
    if images.len() < 2 {
        return Err(AtlasError::Dataset(format!(
            "need at least two images, got {}",
            images.len()
        )));
    }
    let expected = lattice.full_shape();
    let bad: Vec<String> = images
        .iter()
        .enumerate()
        .filter(|(_, im)| im.shape() != &expected)
        .map(|(i, im)| format!("#{i} {:?}", im.shape().dims()))
        .collect();
    if !bad.is_empty() {
        return Err(AtlasError::Dataset(format!(
            "images must all be {:?}; offenders: {}",
            expected.dims(),
            bad.join(", ")
        )));
    }
    Ok(())
}

/// Monte Carlo estimate of `Q` and its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QEstimate {
    pub q: f64,
    pub stderr: f64,
}

/// Draws fresh `alpha` samples for every subject and estimates
/// `Q = 1/S sum_n sum_j ln p(I_n, alpha_nj | theta)`.
pub fn e_step(
    ctx: &ShootingContext,
    images: &[Image],
    state: &mut ModelState,
    config: &HmcConfig,
    stream: u64,
) -> Result<QEstimate> {
    let st = &*state;
    let results: Vec<(AlphaSamples, f64, f64)> = (0..st.subjects())
        .into_par_iter()
        .map(|n| {
            let v = &st.mean_velocities[n];
            let start = *st.alpha_samples[n].samples.last().expect("chains are non-empty");
            let op = ctx.operator(start)?;
            let shot = ctx.shoot(v, &op)?;
            let warped = warp_image(&st.atlas, &ctx.deformation(&shot.displacement)?)?;
            let loglik = log_likelihood_from_rss(warped.squared_distance(&images[n])?, &st.noise);
            let pot = AlphaPotential::new(ctx.laplacian(), v, st.hyper)?;
            let draws = hmc_sample(&pot, start, config, n, stream)?;
            let terms = draws
                .samples
                .iter()
                .map(|&a| {
                    let op = ctx.operator(a)?;
                    Ok(loglik + log_prior(v, &op)? + log_hyperprior(a, &st.hyper)?)
                })
                .collect::<Result<Vec<f64>>>()?;
            let (mean, var) = mean_var(&terms);
            Ok((draws, mean, var / terms.len() as f64))
        })
        .collect::<Result<_>>()?;
    let mut q = 0.0;
    let mut var = 0.0;
    state.alpha_samples = results
        .into_iter()
        .map(|(draws, mean, v)| {
            q += mean;
            var += v;
            draws
        })
        .collect();
    if !q.is_finite() {
        return Err(AtlasError::Numeric(format!("non-finite Q estimate {q}")));
    }
    Ok(QEstimate { q, stderr: var.sqrt() })
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    if x.len() < 2 {
        return (mean, 0.0);
    }
    let var = x.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Descent on every `v_nj` under its own `alpha_nj`, then refreshes the
/// subject means.
pub fn update_velocities(
    ctx: &ShootingContext,
    images: &[Image],
    state: &mut ModelState,
    config: &DescentConfig,
) -> Result<()> {
    let st = &*state;
    let updated: Vec<(Vec<SpectralVelocity>, f64)> = (0..st.subjects())
        .into_par_iter()
        .map(|n| {
            let reg = Registration::new(ctx, &st.atlas, &images[n], st.noise.sigma2())?;
            let mut step = st.step_memory[n];
            let mut out = Vec::with_capacity(st.alpha_samples[n].samples.len());
            for &alpha in &st.alpha_samples[n].samples {
                let op = ctx.operator(alpha)?;
                let d = reg.descend(&st.mean_velocities[n], &op, config, step)?;
                step = d.next_step;
                out.push(d.velocity);
            }
            Ok((out, step))
        })
        .collect::<Result<_>>()?;
    for (n, (vs, step)) in updated.into_iter().enumerate() {
        let mut mean = SpectralVelocity::zero_velocity(ctx.lattice());
        let w = 1.0 / vs.len() as f64;
        for v in &vs {
            mean.axpy(w, v);
        }
        state.mean_velocities[n] = mean;
        state.velocities[n] = vs;
        state.step_memory[n] = step;
    }
    Ok(())
}

/// Forward and inverse maps of one draw.
#[derive(Clone, Debug)]
pub struct SampleMaps {
    pub phi: DeformationField,
    pub phi_inv: DeformationField,
}

/// Shoots every `v_nj` under its `alpha_nj`.
pub fn sample_maps(ctx: &ShootingContext, state: &ModelState) -> Result<Vec<Vec<SampleMaps>>> {
    (0..state.subjects())
        .into_par_iter()
        .map(|n| {
            state.velocities[n]
                .iter()
                .zip(&state.alpha_samples[n].samples)
                .map(|(v, &alpha)| {
                    let op = ctx.operator(alpha)?;
                    let shot = ctx.shoot(v, &op)?;
                    Ok(SampleMaps {
                        phi: ctx.deformation(&shot.displacement)?,
                        phi_inv: ctx.deformation(&ctx.integrate_inverse_flow(&shot.trajectory)?)?,
                    })
                })
                .collect()
        })
        .collect()
}

/// One summary map per subject: its mean velocity shot under its mean
/// `alpha`.
pub fn mean_maps(ctx: &ShootingContext, state: &ModelState) -> Result<Vec<SampleMaps>> {
    (0..state.subjects())
        .into_par_iter()
        .map(|n| {
            let op = ctx.operator(state.alpha_samples[n].mean())?;
            let shot = ctx.shoot(&state.mean_velocities[n], &op)?;
            Ok(SampleMaps {
                phi: ctx.deformation(&shot.displacement)?,
                phi_inv: ctx.deformation(&ctx.integrate_inverse_flow(&shot.trajectory)?)?,
            })
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct AtlasUpdate {
    pub atlas: Image,
    /// Jacobian weights raised to the floor.
    pub clamped: usize,
}

/// `I = sum (I_n o phi_inv) |D phi_inv| / sum |D phi_inv|` over all draws.
pub fn update_atlas(images: &[Image], inverses: &[Vec<DeformationField>]) -> Result<AtlasUpdate> {
    if images.len() != inverses.len() || inverses.iter().all(|v| v.is_empty()) {
        return Err(AtlasError::invalid(
            "inverses",
            "need one list of inverse maps per image and at least one map",
        ));
    }
    let first = &images[0];
    let mut num = vec![0.0; first.len()];
    let mut den = vec![0.0; first.len()];
    let mut clamped = 0;
    for (img, maps) in images.iter().zip(inverses) {
        for phi_inv in maps {
            let warped = warp_image(img, phi_inv)?;
            let jac = jacobian_determinant(phi_inv);
            for ((x, w), (nu, de)) in warped
                .data()
                .iter()
                .zip(jac)
                .zip(num.iter_mut().zip(den.iter_mut()))
            {
                let w = if w < JACOBIAN_FLOOR {
                    clamped += 1;
                    JACOBIAN_FLOOR
                } else {
                    w
                };
                *nu += w * x;
                *de += w;
            }
        }
    }
    if clamped > 0 {
        log::warn!("atlas update raised {clamped} Jacobian weights to {JACOBIAN_FLOOR:e}");
    }
    let mut data = Vec::with_capacity(num.len());
    for (voxel, (nu, de)) in num.into_iter().zip(den).enumerate() {
        if !(de > 0.0 && de.is_finite()) {
            return Err(AtlasError::DegenerateDeformation { voxel });
        }
        data.push(nu / de);
    }
    Ok(AtlasUpdate {
        atlas: Image::with_spacing(first.shape().clone(), first.spacing().to_vec(), data)?,
        clamped,
    })
}

/// `sigma^2 = 1/(M N S) sum |I o phi_nj - I_n|^2`; zero for perfect matches.
pub fn update_sigma(atlas: &Image, images: &[Image], forwards: &[Vec<DeformationField>]) -> Result<f64> {
    if images.len() != forwards.len() {
        return Err(AtlasError::invalid("forwards", "need one list of maps per image"));
    }
    let mut rss = 0.0;
    let mut pairs = 0usize;
    for (img, maps) in images.iter().zip(forwards) {
        for phi in maps {
            rss += warp_image(atlas, phi)?.squared_distance(img)?;
            pairs += 1;
        }
    }
    if pairs == 0 {
        return Err(AtlasError::invalid("forwards", "no maps supplied"));
    }
    Ok(rss / (pairs as f64 * atlas.len() as f64))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HyperUpdate {
    pub hyper: GammaHyper,
    /// `k` hit [`K_CAP`] because the draws have (almost) no spread.
    pub capped: bool,
    pub iterations: usize,
}

/// Joint solution of `k = psi^-1(mean ln a - ln beta)` and
/// `beta = mean a / k` (the Gamma maximum-likelihood equations).
///
/// Substituting the second into the first leaves
/// `ln k - psi(k) = ln(mean a) - mean ln a`, solved by Newton from the
/// usual closed-form starting point; a final pass through `psi^-1` makes the
/// pair consistent with both equations.
pub fn update_hyperparams(samples: &[f64]) -> Result<HyperUpdate> {
    if samples.is_empty() {
        return Err(AtlasError::invalid("samples", "no draws"));
    }
    if let Some(bad) = samples.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
        return Err(AtlasError::Domain(format!("non-positive draw {bad}")));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let mean_ln = samples.iter().map(|a| a.ln()).sum::<f64>() / n;
    let s = mean.ln() - mean_ln;
    let capped_result = |iterations| {
        log::warn!("alpha draws have no spread (s = {s:e}); shape capped at {K_CAP:e}");
        Ok(HyperUpdate {
            hyper: GammaHyper::new(K_CAP, mean / K_CAP)?,
            capped: true,
            iterations,
        })
    };
    // ln k - psi(k) ~ 1/(2k) for large k
    if s <= 0.5 / K_CAP {
        return capped_result(0);
    }
    let mut k = (3.0 - s + ((s - 3.0).powi(2) + 24.0 * s).sqrt()) / (12.0 * s);
    for it in 1..=100 {
        let f = k.ln() - digamma(k) - s;
        let df = 1.0 / k - trigamma(k);
        let mut next = k - f / df;
        if !(next > 0.0) {
            next = 0.5 * k;
        }
        let done = (next - k).abs() <= 1e-11 * k;
        k = next;
        if k > K_CAP {
            return capped_result(it);
        }
        if done {
            let beta = mean / k;
            let k = inv_digamma(mean_ln - beta.ln());
            let beta = mean / k;
            let residual = (digamma(k) - (mean_ln - beta.ln())).abs();
            if !(residual < 1e-8) {
                return Err(AtlasError::Numeric(format!(
                    "hyperparameter equations left residual {residual:e} (k = {k}, beta = {beta})"
                )));
            }
            return Ok(HyperUpdate {
                hyper: GammaHyper::new(k, beta)?,
                capped: false,
                iterations: it,
            });
        }
    }
    Err(AtlasError::Numeric(format!(
        "shape update did not converge (s = {s:e}, last k = {k})"
    )))
}

/// One row of the run history.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub q: f64,
    pub q_stderr: f64,
    pub sigma2: f64,
    pub k: f64,
    pub beta: f64,
    pub mean_accept: f64,
    pub mean_alpha: Vec<f64>,
    pub stuck_chains: usize,
    pub clamped_voxels: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct History {
    pub records: Vec<IterationRecord>,
}

impl History {
    /// Iterations whose `Q` fell by more than `n_se` combined Monte Carlo
    /// standard errors, with the size of the drop in standard errors.
    pub fn q_drops(&self, n_se: f64) -> Vec<(usize, f64)> {
        self.records
            .windows(2)
            .filter_map(|w| {
                let se = (w[0].q_stderr.powi(2) + w[1].q_stderr.powi(2)).sqrt();
                let drop = w[0].q - w[1].q;
                (drop > n_se * se).then(|| (w[1].iteration, drop / se))
            })
            .collect()
    }

    /// True once the last `PATIENCE` relative changes are below `tol`.
    pub fn converged(&self, tol: f64) -> bool {
        let r = &self.records;
        if r.len() <= PATIENCE {
            return false;
        }
        r[r.len() - PATIENCE - 1..]
            .windows(2)
            .all(|w| (w[1].q - w[0].q).abs() <= tol * w[0].q.abs())
    }
}

#[derive(Clone, Debug)]
pub struct McemOutcome {
    pub state: ModelState,
    pub history: History,
    pub converged: bool,
}

/// A failed run with the history accumulated before the failure.
#[derive(Debug)]
pub struct McemFailure {
    pub error: AtlasError,
    pub history: History,
}

impl std::fmt::Display for McemFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} (after {} completed iterations)",
            self.error,
            self.history.records.len()
        )
    }
}

impl std::error::Error for McemFailure {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

/// One full EM iteration; returns its history row.
pub fn iterate(
    ctx: &ShootingContext,
    images: &[Image],
    state: &mut ModelState,
    config: &McemConfig,
    iteration: usize,
) -> Result<IterationRecord> {
    let q = e_step(ctx, images, state, &config.hmc, iteration as u64)?;
    update_velocities(ctx, images, state, &config.descent)?;
    let maps = sample_maps(ctx, state)?;
    let inverses: Vec<Vec<DeformationField>> = maps
        .iter()
        .map(|m| m.iter().map(|s| s.phi_inv.clone()).collect())
        .collect();
    let atlas = update_atlas(images, &inverses)?;
    state.atlas = atlas.atlas;
    let forwards: Vec<Vec<DeformationField>> =
        maps.into_iter().map(|m| m.into_iter().map(|s| s.phi).collect()).collect();
    let sigma2 = update_sigma(&state.atlas, images, &forwards)?;
    state.noise = NoiseModel::new(sigma2.max(SIGMA2_FLOOR), state.noise.voxels())?;
    let all: Vec<f64> = state
        .alpha_samples
        .iter()
        .flat_map(|s| s.samples.iter().copied())
        .collect();
    state.hyper = update_hyperparams(&all)?.hyper;

    let chains = &state.alpha_samples;
    Ok(IterationRecord {
        iteration,
        q: q.q,
        q_stderr: q.stderr,
        sigma2: state.noise.sigma2(),
        k: state.hyper.k(),
        beta: state.hyper.beta(),
        mean_accept: chains.iter().map(|c| c.accept_rate()).sum::<f64>() / chains.len() as f64,
        mean_alpha: state.mean_alpha(),
        stuck_chains: chains.iter().filter(|c| c.is_stuck()).count(),
        clamped_voxels: atlas.clamped,
    })
}

/// Runs EM until `Q` settles or `em_iterations` is reached. `observer` sees
/// every completed iteration (for checkpoints and live history) and may
/// abort the run by returning an error.
pub fn run_mcem<F>(
    images: &[Image],
    lattice: &FrequencyLattice,
    config: &McemConfig,
    mut observer: F,
) -> std::result::Result<McemOutcome, McemFailure>
where
    F: FnMut(&IterationRecord, &ModelState) -> Result<()>,
{
    let mut history = History::default();
    let fail = |error, history| McemFailure { error, history };
    let setup = ShootingContext::new(lattice, config.time_steps)
        .and_then(|ctx| ModelState::initialize(images, lattice, config).map(|s| (ctx, s)));
    let (ctx, mut state) = match setup {
        Ok(x) => x,
        Err(e) => return Err(fail(e, history)),
    };
    let mut converged = false;
    for iteration in 1..=config.em_iterations {
        let record = match iterate(&ctx, images, &mut state, config, iteration) {
            Ok(r) => r,
            Err(e) => return Err(fail(e, history)),
        };
        log::info!(
            "iteration {iteration}: Q = {:.6e} (se {:.2e}), sigma2 = {:.3e}, k = {:.3}, beta = {:.4}, accept = {:.2}",
            record.q,
            record.q_stderr,
            record.sigma2,
            record.k,
            record.beta,
            record.mean_accept
        );
        if let Err(e) = observer(&record, &state) {
            history.records.push(record);
            return Err(fail(e, history));
        }
        history.records.push(record);
        if history.converged(config.tolerance) {
            converged = true;
            break;
        }
    }
    Ok(McemOutcome {
        state,
        history,
        converged,
    })
}
