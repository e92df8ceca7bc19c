//! Geodesic shooting on the bandlimited lattice.
//!
//! The initial velocity is carried forward by the Fourier-domain EPDiff
//! equation
//!
//! ```text
//! dv/dt = -K [ (Dv)^T * (L v) + div(L v (x) v) ]
//! ```
//!
//! and the displacement `u` of `phi = Id + u` follows
//! `du/dt = -v - (Du) v`, both with classic RK4 on a uniform grid of `steps`
//! intervals over `t in [0, 1]`. The two equations form one coupled system:
//! the velocity stages of each RK4 step are kept in the trajectory so the
//! flow integration reproduces the coupled scheme exactly, which is what
//! the adjoint in [`adjoint`] differentiates.

pub mod adjoint;
mod deformation;

pub use deformation::{
    compose, interpolate, interpolate_with_gradient, jacobian_determinant, warp_image,
    DeformationField,
};

use crate::error::{AtlasError, Result};
use crate::fourier_field::{
    axpy_comps, build_operator_from_symbol, derivative_symbol, laplacian_symbol, real_fields,
    FrequencyLattice, LatticeTransform, HERMITIAN_TOL, OperatorCoeffs, SpectralField, SpectralVelocity, C64,
};
use crate::grid::VectorField;

pub(crate) type Comps = Vec<Vec<C64>>;

pub const DEFAULT_STEPS: usize = 10;

/// Shared, immutable per-lattice machinery: symbols, FFT plans, step count.
#[derive(Debug)]
pub struct ShootingContext {
    lattice: FrequencyLattice,
    laplacian: Vec<f64>,
    deriv: Vec<Vec<f64>>,
    padded: LatticeTransform,
    full: LatticeTransform,
    steps: usize,
}

/// Velocity snapshots at `t = k / steps`, plus the RK4 stage states of
/// every step (`v + h/2 k1`, `v + h/2 k2`, `v + h k3`).
#[derive(Clone, Debug)]
pub struct VelocityTrajectory {
    snapshots: Vec<SpectralVelocity>,
    stages: Vec<[Comps; 3]>,
}

impl VelocityTrajectory {
    pub fn steps(&self) -> &[SpectralVelocity] {
        &self.snapshots
    }

    pub fn step_count(&self) -> usize {
        self.stages.len()
    }

    pub fn initial(&self) -> &SpectralVelocity {
        &self.snapshots[0]
    }

    pub fn last(&self) -> &SpectralVelocity {
        self.snapshots.last().expect("trajectory is never empty")
    }
}

/// Everything one forward shot produces, with the flow stage states that
/// the adjoint sweep needs.
#[derive(Clone, Debug)]
pub struct Shot {
    pub trajectory: VelocityTrajectory,
    pub displacement: SpectralField,
    flow_stages: Vec<[Comps; 4]>,
}

impl ShootingContext {
    pub fn new(lattice: &FrequencyLattice, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(AtlasError::invalid("steps", "need at least one time step"));
        }
        let deriv = (0..lattice.ndim())
            .map(|axis| derivative_symbol(lattice, axis))
            .collect();
        Ok(Self {
            laplacian: laplacian_symbol(lattice),
            deriv,
            padded: LatticeTransform::padded(lattice),
            full: LatticeTransform::full(lattice),
            lattice: lattice.clone(),
            steps,
        })
    }

    pub fn lattice(&self) -> &FrequencyLattice {
        &self.lattice
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn laplacian(&self) -> &[f64] {
        &self.laplacian
    }

    pub fn operator(&self, alpha: f64) -> Result<OperatorCoeffs> {
        build_operator_from_symbol(&self.lattice, self.laplacian.clone(), alpha)
    }

    fn dt(&self) -> f64 {
        1.0 / self.steps as f64
    }

    fn ndim(&self) -> usize {
        self.lattice.ndim()
    }

    fn check(&self, f: &SpectralField, op: Option<&OperatorCoeffs>) -> Result<()> {
        self.lattice.check_same(f.lattice())?;
        if f.ncomp() != self.ndim() {
            return Err(AtlasError::Shape(format!(
                "expected {} components, got {}",
                self.ndim(),
                f.ncomp()
            )));
        }
        if let Some(op) = op {
            self.lattice.check_same(op.lattice())?;
        }
        Ok(())
    }

    /// Applies the central-difference symbol of `axis` to `c`.
    pub(crate) fn differentiate(&self, c: &[C64], axis: usize) -> Vec<C64> {
        c.iter()
            .zip(&self.deriv[axis])
            .map(|(z, s)| C64::new(-z.im * s, z.re * s))
            .collect()
    }

    /// Applies the adjoint (conjugate) derivative symbol.
    pub(crate) fn differentiate_adjoint(&self, c: &[C64], axis: usize) -> Vec<C64> {
        c.iter()
            .zip(&self.deriv[axis])
            .map(|(z, s)| C64::new(z.im * s, -z.re * s))
            .collect()
    }

    /// Right-hand side of EPDiff. All grid quantities are real, so fields
    /// travel through the FFTs in pairs.
    pub(crate) fn epdiff_rhs(&self, op: &OperatorCoeffs, v: &[Vec<C64>]) -> Comps {
        let d = self.ndim();
        let p = &self.padded;
        let m: Comps = v
            .iter()
            .map(|c| c.iter().zip(op.l()).map(|(z, l)| z * l).collect())
            .collect();
        // derivs[i * d + j] holds d v_i / d x_j
        let derivs: Comps = (0..d * d)
            .map(|ij| self.differentiate(&v[ij / d], ij % d))
            .collect();
        let inputs: Vec<&[C64]> = v.iter().chain(&m).chain(&derivs).map(|c| c.as_slice()).collect();
        let grids = p.to_real_grids(&inputs);
        let (gv, rest) = grids.split_at(d);
        let (gm, grad) = rest.split_at(d);
        let mut prods = Vec::with_capacity(d + d * d);
        for i in 0..d {
            let mut corr = vec![0.0; p.grid_len()];
            for j in 0..d {
                for ((a, g), mj) in corr.iter_mut().zip(&grad[j * d + i]).zip(&gm[j]) {
                    *a += g * mj;
                }
            }
            prods.push(corr);
        }
        for i in 0..d {
            for j in 0..d {
                prods.push(gm[i].iter().zip(&gv[j]).map(|(a, b)| a * b).collect());
            }
        }
        let coeffs = p.from_real_grids(&prods);
        (0..d)
            .map(|i| {
                let mut acc = coeffs[i].clone();
                for j in 0..d {
                    let div = self.differentiate(&coeffs[d + i * d + j], j);
                    acc.iter_mut().zip(&div).for_each(|(a, b)| *a += b);
                }
                acc.iter().zip(op.k()).map(|(z, k)| -z * k).collect()
            })
            .collect()
    }

    /// Right-hand side of the displacement flow, `-v - (Du) v`.
    pub(crate) fn flow_rhs(&self, u: &[Vec<C64>], v: &[Vec<C64>]) -> Comps {
        let d = self.ndim();
        let p = &self.padded;
        let derivs: Comps = (0..d * d)
            .map(|ij| self.differentiate(&u[ij / d], ij % d))
            .collect();
        let inputs: Vec<&[C64]> = v.iter().chain(&derivs).map(|c| c.as_slice()).collect();
        let grids = p.to_real_grids(&inputs);
        let (gv, gu) = grids.split_at(d);
        let prods: Vec<Vec<f64>> = (0..d)
            .map(|i| {
                let mut acc = vec![0.0; p.grid_len()];
                for (j, vj) in gv.iter().enumerate() {
                    for ((a, g), b) in acc.iter_mut().zip(&gu[i * d + j]).zip(vj) {
                        *a += g * b;
                    }
                }
                acc
            })
            .collect();
        p.from_real_grids(&prods)
            .iter()
            .zip(v)
            .map(|(c, vi)| c.iter().zip(vi).map(|(z, w)| -z - w).collect())
            .collect()
    }

    /// Integrates EPDiff from `v0` over `t in [0, 1]`.
    pub fn integrate_epdiff(
        &self,
        v0: &SpectralVelocity,
        op: &OperatorCoeffs,
    ) -> Result<VelocityTrajectory> {
        self.check(v0, Some(op))?;
        let asymmetry = v0.hermitian_asymmetry();
        if asymmetry > HERMITIAN_TOL {
            return Err(AtlasError::NotHermitian { asymmetry });
        }
        let h = self.dt();
        let mut snapshots = Vec::with_capacity(self.steps + 1);
        let mut stages = Vec::with_capacity(self.steps);
        snapshots.push(v0.clone());
        let mut v = v0.comps().to_vec();
        for step in 0..self.steps {
            let k1 = self.epdiff_rhs(op, &v);
            let s2 = offset(&v, 0.5 * h, &k1);
            let k2 = self.epdiff_rhs(op, &s2);
            let s3 = offset(&v, 0.5 * h, &k2);
            let k3 = self.epdiff_rhs(op, &s3);
            let s4 = offset(&v, h, &k3);
            let k4 = self.epdiff_rhs(op, &s4);
            rk4_combine(&mut v, h, [&k1, &k2, &k3, &k4]);
            if !all_finite(&v) {
                return Err(AtlasError::Divergence {
                    stage: "epdiff",
                    step: step + 1,
                });
            }
            stages.push([s2, s3, s4]);
            snapshots.push(SpectralField::from_comps(&self.lattice, v.clone())?);
        }
        Ok(VelocityTrajectory { snapshots, stages })
    }

    /// Integrates the displacement flow `du/dt = -v - (Du) v` along a
    /// trajectory, returning `u(1)` with `u(0) = 0`.
    pub fn integrate_flow(&self, traj: &VelocityTrajectory) -> Result<SpectralField> {
        self.flow(traj, false).map(|(u, _)| u)
    }

    fn flow(
        &self,
        traj: &VelocityTrajectory,
        record: bool,
    ) -> Result<(SpectralField, Vec<[Comps; 4]>)> {
        self.check(traj.initial(), None)?;
        let h = self.dt();
        let d = self.ndim();
        let mut u: Comps = vec![vec![C64::new(0.0, 0.0); self.lattice.len()]; d];
        let mut recorded = Vec::new();
        for (step, stage) in traj.stages.iter().enumerate() {
            let v = traj.snapshots[step].comps();
            let k1 = self.flow_rhs(&u, v);
            let u2 = offset(&u, 0.5 * h, &k1);
            let k2 = self.flow_rhs(&u2, &stage[0]);
            let u3 = offset(&u, 0.5 * h, &k2);
            let k3 = self.flow_rhs(&u3, &stage[1]);
            let u4 = offset(&u, h, &k3);
            let k4 = self.flow_rhs(&u4, &stage[2]);
            if record {
                recorded.push([u.clone(), u2, u3, u4]);
            }
            rk4_combine(&mut u, h, [&k1, &k2, &k3, &k4]);
            if !all_finite(&u) {
                return Err(AtlasError::Divergence {
                    stage: "flow",
                    step: step + 1,
                });
            }
        }
        Ok((SpectralField::from_comps(&self.lattice, u)?, recorded))
    }

    /// Displacement of the inverse map. Integrates the backward transport
    /// `dw/dtau = v(1 - tau) + (Dw) v(1 - tau)` from `tau = 0` to `1`, so that
    /// `Id + w` undoes `Id + u(1)`. Midpoint velocities average the two RK4
    /// midpoint stages of the forward step.
    pub fn integrate_inverse_flow(&self, traj: &VelocityTrajectory) -> Result<SpectralField> {
        self.check(traj.initial(), None)?;
        let h = self.dt();
        let d = self.ndim();
        let n = traj.step_count();
        let mut w: Comps = vec![vec![C64::new(0.0, 0.0); self.lattice.len()]; d];
        let rhs = |w: &[Vec<C64>], v: &[Vec<C64>]| -> Comps {
            let mut out = self.flow_rhs(w, v);
            out.iter_mut().flatten().for_each(|z| *z = -*z);
            out
        };
        for back in 0..n {
            let step = n - 1 - back;
            let v_start = traj.snapshots[step + 1].comps();
            let v_end = traj.snapshots[step].comps();
            let stage = &traj.stages[step];
            let mut v_mid = stage[0].clone();
            axpy_comps(&mut v_mid, 1.0, &stage[1]);
            v_mid.iter_mut().flatten().for_each(|z| *z *= 0.5);

            let k1 = rhs(&w, v_start);
            let k2 = rhs(&offset(&w, 0.5 * h, &k1), &v_mid);
            let k3 = rhs(&offset(&w, 0.5 * h, &k2), &v_mid);
            let k4 = rhs(&offset(&w, h, &k3), v_end);
            rk4_combine(&mut w, h, [&k1, &k2, &k3, &k4]);
            if !all_finite(&w) {
                return Err(AtlasError::Divergence {
                    stage: "inverse flow",
                    step: back + 1,
                });
            }
        }
        SpectralField::from_comps(&self.lattice, w)
    }

    /// EPDiff followed by the forward flow, keeping the stage states.
    pub fn shoot(&self, v0: &SpectralVelocity, op: &OperatorCoeffs) -> Result<Shot> {
        let trajectory = self.integrate_epdiff(v0, op)?;
        let (displacement, flow_stages) = self.flow(&trajectory, true)?;
        Ok(Shot {
            trajectory,
            displacement,
            flow_stages,
        })
    }

    /// Spatial displacement of a lattice displacement field on the full grid.
    pub fn displacement_field(&self, u: &SpectralField) -> Result<VectorField> {
        self.check(u, None)?;
        VectorField::new(self.lattice.full_shape(), real_fields(&self.full, u.comps()))
    }

    /// Position map `Id + u` on the full grid.
    pub fn deformation(&self, u: &SpectralField) -> Result<DeformationField> {
        Ok(DeformationField::from_displacement(self.displacement_field(u)?))
    }
}

fn offset(base: &[Vec<C64>], s: f64, dir: &Comps) -> Comps {
    let mut out = base.to_vec();
    axpy_comps(&mut out, s, dir);
    out
}

fn rk4_combine(y: &mut Comps, h: f64, k: [&Comps; 4]) {
    let w = [h / 6.0, h / 3.0, h / 3.0, h / 6.0];
    for (ki, wi) in k.iter().zip(w) {
        axpy_comps(y, wi, ki);
    }
}

fn all_finite(c: &Comps) -> bool {
    c.iter()
        .flatten()
        .all(|z| z.re.is_finite() && z.im.is_finite())
}

/// One-off EPDiff integration; builds a [`ShootingContext`] internally.
pub fn integrate_epdiff(
    v0: &SpectralVelocity,
    op: &OperatorCoeffs,
    steps: usize,
) -> Result<VelocityTrajectory> {
    ShootingContext::new(v0.lattice(), steps)?.integrate_epdiff(v0, op)
}

/// One-off flow integration along a trajectory.
pub fn integrate_flow(traj: &VelocityTrajectory) -> Result<SpectralField> {
    ShootingContext::new(traj.initial().lattice(), traj.step_count())?.integrate_flow(traj)
}

/// One-off inverse-flow integration along a trajectory.
pub fn integrate_inverse_flow(traj: &VelocityTrajectory) -> Result<SpectralField> {
    ShootingContext::new(traj.initial().lattice(), traj.step_count())?
        .integrate_inverse_flow(traj)
}

/// Central-difference Jacobian symbols: for each axis the imaginary part of
/// the multiplier `i sin(2 pi xi_j / N_j)`.
pub fn jacobian_symbol(lattice: &FrequencyLattice) -> Vec<Vec<f64>> {
    (0..lattice.ndim())
        .map(|axis| derivative_symbol(lattice, axis))
        .collect()
}
