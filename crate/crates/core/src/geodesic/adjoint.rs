//! Reverse-mode sweep through the discretized shooting.
//!
//! Every forward step is a composition of diagonal Fourier multipliers,
//! lattice/grid transfers and pointwise grid products, so the adjoint is
//! assembled from the adjoints of those pieces under the real inner product
//! `Re sum conj(a) b`. The sweep differentiates the exact RK4 scheme used
//! forward (discretize, then differentiate); the result is the gradient with
//! respect to the initial velocity of any functional of `u(1)`.

use super::{Comps, ShootingContext, Shot};
use crate::error::Result;
use crate::fourier_field::{axpy_comps, OperatorCoeffs, SpectralField, C64};
use crate::grid::VectorField;

impl ShootingContext {
    /// Transposed Jacobian of the EPDiff right-hand side at `v`, applied to
    /// `bar`. Both maps commute with conjugate mirroring, so Hermitian
    /// cotangents stay Hermitian and every grid quantity is real.
    pub(crate) fn epdiff_rhs_adjoint(
        &self,
        op: &OperatorCoeffs,
        v: &[Vec<C64>],
        bar: &[Vec<C64>],
    ) -> Comps {
        let d = self.ndim();
        let p = &self.padded;
        let n = p.grid_len();
        let inv_n = 1.0 / n as f64;

        let q_bar: Comps = bar
            .iter()
            .map(|c| c.iter().zip(op.k()).map(|(z, k)| -z * k).collect())
            .collect();
        let m: Comps = v
            .iter()
            .map(|c| c.iter().zip(op.l()).map(|(z, l)| z * l).collect())
            .collect();
        let derivs: Comps = (0..d * d)
            .map(|ij| self.differentiate(&v[ij / d], ij % d))
            .collect();
        // q_derivs[i * d + j] is D_j^T q_bar_i
        let q_derivs: Comps = (0..d * d)
            .map(|ij| self.differentiate_adjoint(&q_bar[ij / d], ij % d))
            .collect();
        let inputs: Vec<&[C64]> = v
            .iter()
            .chain(&m)
            .chain(&derivs)
            .chain(&q_bar)
            .chain(&q_derivs)
            .map(|c| c.as_slice())
            .collect();
        let mut grids = p.to_real_grids(&inputs);
        grids[2 * d + d * d..]
            .iter_mut()
            .flatten()
            .for_each(|x| *x *= inv_n);
        let (gv, rest) = grids.split_at(d);
        let (gm, rest) = rest.split_at(d);
        let (grad, rest) = rest.split_at(d * d);
        let (a_bar, b_bar) = rest.split_at(d);

        // cotangent grids: v (d), m (d), then grad (d * d)
        let mut out_grids = vec![vec![0.0; n]; 2 * d + d * d];
        for i in 0..d {
            // correlation term: A_i = sum_j G_ji M_j
            for j in 0..d {
                let g = &grad[j * d + i];
                for x in 0..n {
                    out_grids[2 * d + j * d + i][x] += a_bar[i][x] * gm[j][x];
                    out_grids[d + j][x] += a_bar[i][x] * g[x];
                }
            }
            // divergence term: b_i = sum_j D_j crop(M_i V_j)
            for j in 0..d {
                let bb = &b_bar[i * d + j];
                for x in 0..n {
                    out_grids[d + i][x] += bb[x] * gv[j][x];
                    out_grids[j][x] += bb[x] * gm[i][x];
                }
            }
        }
        let back = p.to_real_grids_adjoint(&out_grids);
        let mut out: Comps = back[..d].to_vec();
        for i in 0..d {
            for ((o, z), l) in out[i].iter_mut().zip(&back[d + i]).zip(op.l()) {
                *o += z * l;
            }
        }
        for ij in 0..d * d {
            let (i, j) = (ij / d, ij % d);
            let g = self.differentiate_adjoint(&back[2 * d + ij], j);
            out[i].iter_mut().zip(&g).for_each(|(o, z)| *o += z);
        }
        out
    }

    /// Transposed Jacobian of the flow right-hand side at `(u, v)` applied
    /// to `bar`; returns the `(u, v)` cotangents.
    pub(crate) fn flow_rhs_adjoint(
        &self,
        u: &[Vec<C64>],
        v: &[Vec<C64>],
        bar: &[Vec<C64>],
    ) -> (Comps, Comps) {
        let d = self.ndim();
        let p = &self.padded;
        let n = p.grid_len();
        let inv_n = 1.0 / n as f64;
        let derivs: Comps = (0..d * d)
            .map(|ij| self.differentiate(&u[ij / d], ij % d))
            .collect();
        let inputs: Vec<&[C64]> = v
            .iter()
            .chain(&derivs)
            .chain(bar)
            .map(|c| c.as_slice())
            .collect();
        let mut grids = p.to_real_grids(&inputs);
        grids[d + d * d..]
            .iter_mut()
            .flatten()
            .for_each(|x| *x *= -inv_n);
        let (gv, rest) = grids.split_at(d);
        let (gu, p_bar) = rest.split_at(d * d);
        // cotangent grids: D_j u_i (d * d), then v (d)
        let mut out_grids = vec![vec![0.0; n]; d * d + d];
        for i in 0..d {
            for j in 0..d {
                let g = &gu[i * d + j];
                for x in 0..n {
                    out_grids[i * d + j][x] = p_bar[i][x] * gv[j][x];
                    out_grids[d * d + j][x] += p_bar[i][x] * g[x];
                }
            }
        }
        let back = p.to_real_grids_adjoint(&out_grids);
        let zero = C64::new(0.0, 0.0);
        let mut u_bar: Comps = vec![vec![zero; u[0].len()]; d];
        for ij in 0..d * d {
            let (i, j) = (ij / d, ij % d);
            let g = self.differentiate_adjoint(&back[ij], j);
            u_bar[i].iter_mut().zip(&g).for_each(|(o, z)| *o += z);
        }
        let mut v_bar: Comps = back[d * d..].to_vec();
        axpy_comps(&mut v_bar, -1.0, bar);
        (u_bar, v_bar)
    }

    /// Cotangent on the lattice displacement `u(1)` from a cotangent on its
    /// real spatial evaluation.
    pub fn displacement_adjoint(&self, disp_bar: &VectorField) -> SpectralField {
        let comps = disp_bar
            .comps()
            .iter()
            .map(|c| {
                self.full
                    .to_grid_adjoint(c.iter().map(|&x| C64::new(x, 0.0)).collect())
            })
            .collect();
        SpectralField::from_comps(&self.lattice, comps).expect("lattice-sized components")
    }

    /// Pulls a cotangent on `u(1)` back to the initial velocity through the
    /// coupled RK4 steps of `shot`.
    pub fn pullback(
        &self,
        shot: &Shot,
        op: &OperatorCoeffs,
        u_bar: &SpectralField,
    ) -> Result<SpectralField> {
        self.lattice.check_same(u_bar.lattice())?;
        let h = self.dt();
        let d = self.ndim();
        let len = self.lattice.len();
        let traj = &shot.trajectory;
        let mut v_bar: Comps = vec![vec![C64::new(0.0, 0.0); len]; d];
        let mut u_bar: Comps = u_bar.comps().to_vec();
        let weights = [h / 6.0, h / 3.0, h / 3.0, h / 6.0];
        // stage s feeds stage s + 1 through `base + offsets[s] * k_s`
        let offsets = [0.5 * h, 0.5 * h, h];

        for step in (0..traj.step_count()).rev() {
            let v_states: [&[Vec<C64>]; 4] = [
                traj.snapshots[step].comps(),
                &traj.stages[step][0],
                &traj.stages[step][1],
                &traj.stages[step][2],
            ];
            let u_states = &shot.flow_stages[step];

            let mut kv_bar: Vec<Comps> = weights.iter().map(|&w| scale(&v_bar, w)).collect();
            let mut ku_bar: Vec<Comps> = weights.iter().map(|&w| scale(&u_bar, w)).collect();
            let mut v_acc = v_bar.clone();
            let mut u_acc = u_bar.clone();

            for s in (0..4).rev() {
                let mut sv = self.epdiff_rhs_adjoint(op, v_states[s], &kv_bar[s]);
                let (su, sv_flow) = self.flow_rhs_adjoint(&u_states[s], v_states[s], &ku_bar[s]);
                axpy_comps(&mut sv, 1.0, &sv_flow);
                axpy_comps(&mut v_acc, 1.0, &sv);
                axpy_comps(&mut u_acc, 1.0, &su);
                if s > 0 {
                    let c = offsets[s - 1];
                    axpy_comps(&mut kv_bar[s - 1], c, &sv);
                    axpy_comps(&mut ku_bar[s - 1], c, &su);
                }
            }
            v_bar = v_acc;
            u_bar = u_acc;
        }
        SpectralField::from_comps(&self.lattice, v_bar)
    }
}

fn scale(c: &Comps, s: f64) -> Comps {
    c.iter()
        .map(|x| x.iter().map(|z| z * s).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier_field::{FrequencyLattice, SpectralField};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(lat: &FrequencyLattice, scale: f64, seed: u64) -> SpectralField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut f = SpectralField::zero_velocity(lat);
        for c in f.comps_mut() {
            for z in c.iter_mut() {
                *z = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * scale;
            }
        }
        f.symmetrize();
        f
    }

    fn random_comps(lat: &FrequencyLattice, seed: u64) -> Comps {
        random_field(lat, 1.0, seed).into_comps()
    }

    // <bar, J dv> must equal <J^T bar, dv>; J dv from central differences.
    #[test]
    fn epdiff_rhs_adjoint_is_transpose() {
        let lat = FrequencyLattice::new(&[5, 5], &[10, 10]).unwrap();
        let ctx = ShootingContext::new(&lat, 4).unwrap();
        let op = ctx.operator(0.5).unwrap();
        let v = random_comps(&lat, 1);
        let dv = random_comps(&lat, 2);
        let bar = random_comps(&lat, 3);
        let eps = 1e-6;
        let mut vp = v.clone();
        axpy_comps(&mut vp, eps, &dv);
        let mut vm = v.clone();
        axpy_comps(&mut vm, -eps, &dv);
        let fp = ctx.epdiff_rhs(&op, &vp);
        let fm = ctx.epdiff_rhs(&op, &vm);
        let mut jdv = fp;
        axpy_comps(&mut jdv, -1.0, &fm);
        let lhs = crate::fourier_field::dot_comps(&bar, &jdv) / (2.0 * eps);
        let jt = ctx.epdiff_rhs_adjoint(&op, &v, &bar);
        let rhs = crate::fourier_field::dot_comps(&jt, &dv);
        assert!((lhs - rhs).abs() < 1e-6 * rhs.abs().max(1.0), "{lhs} vs {rhs}");
    }

    #[test]
    fn flow_rhs_adjoint_is_transpose() {
        let lat = FrequencyLattice::new(&[5, 3], &[9, 6]).unwrap();
        let ctx = ShootingContext::new(&lat, 4).unwrap();
        let u = random_comps(&lat, 4);
        let v = random_comps(&lat, 5);
        let du = random_comps(&lat, 6);
        let dv = random_comps(&lat, 7);
        let bar = random_comps(&lat, 8);
        // the map is bilinear plus linear, so a unit step is exact
        let mut up = u.clone();
        axpy_comps(&mut up, 1.0, &du);
        let mut vp = v.clone();
        axpy_comps(&mut vp, 1.0, &dv);
        let mut um = u.clone();
        axpy_comps(&mut um, -1.0, &du);
        let mut vm = v.clone();
        axpy_comps(&mut vm, -1.0, &dv);
        let mut diff = ctx.flow_rhs(&up, &vp);
        axpy_comps(&mut diff, -1.0, &ctx.flow_rhs(&um, &vm));
        let lhs = crate::fourier_field::dot_comps(&bar, &diff) / 2.0;
        let (ub, vb) = ctx.flow_rhs_adjoint(&u, &v, &bar);
        let rhs = crate::fourier_field::dot_comps(&ub, &du) + crate::fourier_field::dot_comps(&vb, &dv);
        assert!((lhs - rhs).abs() < 1e-10 * rhs.abs().max(1.0), "{lhs} vs {rhs}");
    }

    #[test]
    fn pullback_matches_directional_derivative() {
        let lat = FrequencyLattice::new(&[5, 5], &[12, 12]).unwrap();
        let ctx = ShootingContext::new(&lat, 5).unwrap();
        let op = ctx.operator(1.0).unwrap();
        let v0 = random_field(&lat, 0.3, 11);
        let dir = random_field(&lat, 1.0, 12);
        let w = random_field(&lat, 1.0, 13);
        // functional: <w, u(1)>
        let f = |v: &SpectralField| ctx.shoot(v, &op).unwrap().displacement.dot(&w);
        let eps = 1e-6;
        let mut vp = v0.clone();
        vp.axpy(eps, &dir);
        let mut vm = v0.clone();
        vm.axpy(-eps, &dir);
        let fd = (f(&vp) - f(&vm)) / (2.0 * eps);
        let shot = ctx.shoot(&v0, &op).unwrap();
        let g = ctx.pullback(&shot, &op, &w).unwrap();
        let an = g.dot(&dir);
        assert!((fd - an).abs() < 1e-7 * an.abs().max(1.0), "{fd} vs {an}");
    }
}
