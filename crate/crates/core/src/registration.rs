//! Per-subject registration energy and its adjoint gradient.
//!
//! ```text
//! E(v) = |I o phi_v - J|^2 / (2 sigma^2) + 1/2 <L v, L v>
//! ```
//!
//! `phi_v = Id + u(1)` comes from shooting `v`. The gradient is computed by
//! the adjoint of the discrete integrators, and descent steps use the
//! Sobolev-preconditioned direction `-(K^2 g_image + v)`.

use crate::error::{AtlasError, Result};
use crate::fourier_field::{OperatorCoeffs, SpectralField, SpectralVelocity};
use crate::geodesic::{interpolate_with_gradient, DeformationField, Shot, ShootingContext};
use crate::grid::{Image, VectorField};

/// Fixed inputs of one subject's registration problem.
#[derive(Clone, Copy, Debug)]
pub struct Registration<'a> {
    pub ctx: &'a ShootingContext,
    pub atlas: &'a Image,
    pub target: &'a Image,
    pub sigma2: f64,
}

/// Energy terms at one velocity.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub rss: f64,
    pub energy: f64,
    pub value: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DescentConfig {
    pub iterations: usize,
    pub initial_step: f64,
    pub max_backtracks: usize,
}

impl Default for DescentConfig {
    fn default() -> Self {
        Self {
            iterations: 3,
            initial_step: 0.5,
            max_backtracks: 20,
        }
    }
}

impl DescentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.initial_step.is_finite() && self.initial_step > 0.0) {
            return Err(AtlasError::invalid("velocity_step", "must be positive"));
        }
        Ok(())
    }
}

/// Result of a run of descent steps.
#[derive(Clone, Debug)]
pub struct Descent {
    pub velocity: SpectralVelocity,
    pub start: f64,
    pub value: f64,
    pub accepted_steps: usize,
    /// Objective evaluations, gradients included.
    pub evaluations: usize,
    /// Step size to start from next time.
    pub next_step: f64,
}

const ARMIJO: f64 = 1e-4;

impl<'a> Registration<'a> {
    pub fn new(
        ctx: &'a ShootingContext,
        atlas: &'a Image,
        target: &'a Image,
        sigma2: f64,
    ) -> Result<Self> {
        atlas.same_grid(target)?;
        if atlas.shape() != &ctx.lattice().full_shape() {
            return Err(AtlasError::Shape(format!(
                "images are {:?}, lattice expects {:?}",
                atlas.shape().dims(),
                ctx.lattice().full_dims()
            )));
        }
        if !(sigma2.is_finite() && sigma2 > 0.0) {
            return Err(AtlasError::invalid("sigma2", "must be positive"));
        }
        Ok(Self {
            ctx,
            atlas,
            target,
            sigma2,
        })
    }

    fn residual(&self, phi: &DeformationField) -> (Vec<f64>, Vec<[f64; 3]>) {
        let d = self.atlas.shape().ndim();
        let n = self.atlas.len();
        let mut r = Vec::with_capacity(n);
        let mut grads = Vec::with_capacity(n);
        for idx in 0..n {
            let p = phi.position(idx);
            let (val, g) = interpolate_with_gradient(self.atlas, &p[..d]);
            r.push(val - self.target.data()[idx]);
            grads.push(g);
        }
        (r, grads)
    }

    fn finish(&self, rss: f64, energy: f64) -> Evaluation {
        Evaluation {
            rss,
            energy,
            value: rss / (2.0 * self.sigma2) + 0.5 * energy,
        }
    }

    fn shot_and_map(
        &self,
        v: &SpectralVelocity,
        op: &OperatorCoeffs,
    ) -> Result<(Shot, DeformationField)> {
        let shot = self.ctx.shoot(v, op)?;
        let phi = self.ctx.deformation(&shot.displacement)?;
        Ok((shot, phi))
    }

    pub fn evaluate(&self, v: &SpectralVelocity, op: &OperatorCoeffs) -> Result<Evaluation> {
        let (_, phi) = self.shot_and_map(v, op)?;
        let (r, _) = self.residual(&phi);
        Ok(self.finish(r.iter().map(|x| x * x).sum(), op.energy(v)?))
    }

    /// Energy and its gradient with respect to the real and imaginary
    /// parts of `v`, projected onto Hermitian fields.
    pub fn gradient(
        &self,
        v: &SpectralVelocity,
        op: &OperatorCoeffs,
    ) -> Result<(Evaluation, SpectralField)> {
        let (shot, phi) = self.shot_and_map(v, op)?;
        let (r, grads) = self.residual(&phi);
        let d = self.atlas.shape().ndim();
        let comps = (0..d)
            .map(|axis| {
                r.iter()
                    .zip(&grads)
                    .map(|(ri, g)| ri * g[axis] / self.sigma2)
                    .collect()
            })
            .collect();
        let disp_bar = VectorField::new(self.atlas.shape().clone(), comps)?;
        let u_bar = self.ctx.displacement_adjoint(&disp_bar);
        let mut g = self.ctx.pullback(&shot, op, &u_bar)?;
        let lv = op.apply_l(v)?;
        g.axpy(1.0, &op.apply_l(&lv)?);
        g.symmetrize();
        Ok((self.finish(r.iter().map(|x| x * x).sum(), op.energy(v)?), g))
    }

    /// Backtracking descent from `v0`. Never returns a velocity with a
    /// larger energy than `v0`.
    pub fn descend(
        &self,
        v0: &SpectralVelocity,
        op: &OperatorCoeffs,
        config: &DescentConfig,
        step: f64,
    ) -> Result<Descent> {
        config.validate()?;
        let mut v = v0.clone();
        let mut tau = if step > 0.0 && step.is_finite() { step } else { config.initial_step };
        let (mut eval, mut g) = self.gradient(&v, op)?;
        let start = eval.value;
        let mut accepted_steps = 0;
        let mut evaluations = 1;
        for it in 0..config.iterations {
            // d = -(K^2 g_image + v) = -K^2 g
            let dir = op.apply_k(&op.apply_k(&g)?)?.scaled(-1.0);
            let slope = g.dot(&dir);
            if !(slope < 0.0) {
                break;
            }
            let mut found = None;
            for trial_no in 0..=config.max_backtracks {
                let mut trial = v.clone();
                trial.axpy(tau, &dir);
                evaluations += 1;
                match self.evaluate(&trial, op) {
                    Ok(e) if e.value <= eval.value + ARMIJO * tau * slope => {
                        found = Some((trial, e, trial_no == 0));
                        break;
                    }
                    Ok(_) => {}
                    Err(e) if e.is_numeric() => {}
                    Err(e) => return Err(e),
                }
                tau *= 0.5;
            }
            match found {
                Some((trial, e, first)) => {
                    v = trial;
                    eval = e;
                    accepted_steps += 1;
                    // probe a longer step only when the last one was not cut
                    if first {
                        tau *= 2.0;
                    }
                    if it + 1 < config.iterations {
                        evaluations += 1;
                        g = self.gradient(&v, op)?.1;
                    }
                }
                None => {
                    log::warn!("velocity line search made no progress; keeping the current velocity");
                    tau = config.initial_step;
                    break;
                }
            }
        }
        Ok(Descent {
            velocity: v,
            start,
            value: eval.value,
            accepted_steps,
            evaluations,
            next_step: tau,
        })
    }
}
