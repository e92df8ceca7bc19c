//! Bandlimited spectral fields.
//!
//! A field is stored as complex Fourier-series coefficients on a truncated,
//! zero-centred frequency lattice with odd extent per axis. The spatial field
//! on an image grid of `full_dims` is
//!
//! ```text
//! f(x) = sum_xi c(xi) exp(2 pi i sum_j xi_j x_j / full_dims[j])
//! ```
//!
//! i.e. coefficients carry no `1/N` factor: a DC coefficient `c` is the
//! constant field `c`, and the coefficients of a pointwise product are the
//! (untruncated) convolution of the factors' coefficients. The forward
//! transform therefore divides by the voxel count.
//!
//! Real fields have Hermitian coefficients, `c(-xi) = conj(c(xi))`. The full
//! lattice is stored; the mirror of flat index `i` is `len - 1 - i`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{AtlasError, Result};
use crate::fft::{smooth_size, NdFft};
use crate::grid::{strides_of, GridShape, VectorField};

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Relative asymmetry above which a field is rejected as non-Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FrequencyLattice {
    dims: Vec<usize>,
    full_dims: Vec<usize>,
}

impl FrequencyLattice {
    /// `dims` is the truncated extent per axis (odd, so the lattice is
    /// symmetric about zero frequency); `full_dims` the image grid.
    pub fn new(dims: &[usize], full_dims: &[usize]) -> Result<Self> {
        if dims.is_empty() || dims.len() > 3 {
            return Err(AtlasError::invalid("lattice", "dimension must be 1, 2 or 3"));
        }
        if dims.len() != full_dims.len() {
            return Err(AtlasError::invalid(
                "lattice",
                format!("{} lattice axes vs {} grid axes", dims.len(), full_dims.len()),
            ));
        }
        for (axis, (&m, &n)) in dims.iter().zip(full_dims).enumerate() {
            if m == 0 || m % 2 == 0 {
                return Err(AtlasError::invalid(
                    "lattice",
                    format!("axis {axis}: extent {m} must be odd"),
                ));
            }
            if m > n {
                return Err(AtlasError::invalid(
                    "lattice",
                    format!("axis {axis}: extent {m} exceeds grid size {n}"),
                ));
            }
        }
        Ok(Self {
            dims: dims.to_vec(),
            full_dims: full_dims.to_vec(),
        })
    }

    /// Same extent on every axis, clipped to the largest odd size that fits.
    pub fn isotropic(extent: usize, full_dims: &[usize]) -> Result<Self> {
        let dims: Vec<usize> = full_dims
            .iter()
            .map(|&n| {
                let m = extent.min(n);
                if m % 2 == 0 {
                    m.saturating_sub(1).max(1)
                } else {
                    m
                }
            })
            .collect();
        Self::new(&dims, full_dims)
    }

    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn full_dims(&self) -> &[usize] {
        &self.full_dims
    }

    pub fn full_shape(&self) -> GridShape {
        GridShape::new(&self.full_dims).expect("validated at construction")
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of voxels of the full image grid.
    pub fn voxel_count(&self) -> usize {
        self.full_dims.iter().product()
    }

    /// Integer frequency vector at a flat lattice index (unused axes are 0).
    pub fn frequency(&self, mut idx: usize) -> [i64; 3] {
        let mut xi = [0i64; 3];
        for axis in (0..self.dims.len()).rev() {
            let m = self.dims[axis];
            xi[axis] = (idx % m) as i64 - ((m - 1) / 2) as i64;
            idx /= m;
        }
        xi
    }

    pub fn index_of(&self, xi: &[i64]) -> Option<usize> {
        let mut idx = 0usize;
        for (axis, &m) in self.dims.iter().enumerate() {
            let h = ((m - 1) / 2) as i64;
            let f = xi.get(axis).copied().unwrap_or(0);
            if f.abs() > h {
                return None;
            }
            idx = idx * m + (f + h) as usize;
        }
        Some(idx)
    }

    /// Flat index of `-xi` given the index of `xi`.
    #[inline]
    pub fn mirror(&self, idx: usize) -> usize {
        self.len() - 1 - idx
    }

    pub fn zero_index(&self) -> usize {
        (self.len() - 1) / 2
    }

    pub(crate) fn check_same(&self, other: &FrequencyLattice) -> Result<()> {
        if self != other {
            return Err(AtlasError::Shape(format!(
                "lattice {:?}/{:?} vs {:?}/{:?}",
                self.dims, self.full_dims, other.dims, other.full_dims
            )));
        }
        Ok(())
    }
}

/// Multi-component complex coefficient field over a [`FrequencyLattice`].
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    lattice: FrequencyLattice,
    comps: Vec<Vec<C64>>,
}

/// Initial or time-dependent velocity, one component per spatial axis.
pub type SpectralVelocity = SpectralField;
/// Displacement `u` with `phi = Id + u`, one component per spatial axis.
pub type SpectralDisplacement = SpectralField;

impl SpectralField {
    pub fn zeros(lattice: &FrequencyLattice, ncomp: usize) -> Self {
        Self {
            comps: vec![vec![ZERO; lattice.len()]; ncomp],
            lattice: lattice.clone(),
        }
    }

    /// Zero vector field with one component per axis.
    pub fn zero_velocity(lattice: &FrequencyLattice) -> Self {
        Self::zeros(lattice, lattice.ndim())
    }

    pub fn from_comps(lattice: &FrequencyLattice, comps: Vec<Vec<C64>>) -> Result<Self> {
        if comps.is_empty() || comps.iter().any(|c| c.len() != lattice.len()) {
            return Err(AtlasError::Shape(format!(
                "each component needs {} coefficients",
                lattice.len()
            )));
        }
        Ok(Self {
            lattice: lattice.clone(),
            comps,
        })
    }

    pub fn lattice(&self) -> &FrequencyLattice {
        &self.lattice
    }

    pub fn ncomp(&self) -> usize {
        self.comps.len()
    }

    pub fn comps(&self) -> &[Vec<C64>] {
        &self.comps
    }

    pub fn comps_mut(&mut self) -> &mut [Vec<C64>] {
        &mut self.comps
    }

    pub fn into_comps(self) -> Vec<Vec<C64>> {
        self.comps
    }

    pub fn get(&self, comp: usize, xi: &[i64]) -> Option<C64> {
        self.lattice.index_of(xi).map(|i| self.comps[comp][i])
    }

    /// Sets `c(xi)` and its mirror `c(-xi) = conj(c(xi))` together.
    pub fn set_hermitian(&mut self, comp: usize, xi: &[i64], value: C64) -> Result<()> {
        let idx = self
            .lattice
            .index_of(xi)
            .ok_or_else(|| AtlasError::Shape(format!("frequency {xi:?} outside lattice")))?;
        let mirror = self.lattice.mirror(idx);
        if idx == mirror {
            self.comps[comp][idx] = C64::new(value.re, 0.0);
        } else {
            self.comps[comp][idx] = value;
            self.comps[comp][mirror] = value.conj();
        }
        Ok(())
    }

    /// Largest `|c(xi) - conj(c(-xi))|`, relative to the largest coefficient.
    pub fn hermitian_asymmetry(&self) -> f64 {
        let scale = self
            .comps
            .iter()
            .flatten()
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        let worst = self
            .comps
            .iter()
            .flat_map(|c| (0..c.len()).map(move |i| (c[i] - c[c.len() - 1 - i].conj()).norm()))
            .fold(0.0, f64::max);
        worst / scale
    }

    /// Projects onto the Hermitian subspace.
    pub fn symmetrize(&mut self) {
        for c in &mut self.comps {
            symmetrize_in_place(c);
        }
    }

    /// Real inner product `Re sum conj(a) b` over all components and frequencies.
    pub fn dot(&self, other: &SpectralField) -> f64 {
        dot_comps(&self.comps, &other.comps)
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.comps.iter_mut().flatten().for_each(|c| *c *= s);
        out
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: f64, other: &SpectralField) {
        axpy_comps(&mut self.comps, s, &other.comps);
    }

    pub fn max_abs(&self) -> f64 {
        self.comps
            .iter()
            .flatten()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.comps
            .iter()
            .flatten()
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

pub(crate) fn symmetrize_in_place(c: &mut [C64]) {
    let n = c.len();
    for i in 0..=(n - 1) / 2 {
        let j = n - 1 - i;
        let avg = (c[i] + c[j].conj()) * 0.5;
        c[i] = avg;
        c[j] = avg.conj();
    }
}

pub(crate) fn dot_comps(a: &[Vec<C64>], b: &[Vec<C64>]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p.conj() * q).re).sum::<f64>())
        .sum()
}

pub(crate) fn axpy_comps(y: &mut [Vec<C64>], s: f64, x: &[Vec<C64>]) {
    for (yc, xc) in y.iter_mut().zip(x) {
        for (a, b) in yc.iter_mut().zip(xc) {
            *a += b * s;
        }
    }
}

/// Discrete Laplacian symbol `A(xi) = -2 sum_j (cos(2 pi xi_j / N_j) - 1)`,
/// the Fourier multiplier of the negated central-difference Laplacian on the
/// full grid. Lies in `[0, 4d]` and vanishes only at `xi = 0`.
pub fn laplacian_symbol(lattice: &FrequencyLattice) -> Vec<f64> {
    (0..lattice.len())
        .map(|idx| {
            let xi = lattice.frequency(idx);
            lattice
                .full_dims()
                .iter()
                .enumerate()
                .map(|(axis, &n)| -2.0 * ((2.0 * PI * xi[axis] as f64 / n as f64).cos() - 1.0))
                .sum()
        })
        .collect()
}

/// Central-difference derivative symbol along `axis`: the multiplier is
/// `i * sin(2 pi xi_axis / N_axis)`. Returned as the imaginary part only.
pub fn derivative_symbol(lattice: &FrequencyLattice, axis: usize) -> Vec<f64> {
    let n = lattice.full_dims()[axis] as f64;
    (0..lattice.len())
        .map(|idx| (2.0 * PI * lattice.frequency(idx)[axis] as f64 / n).sin())
        .collect()
}

/// Smoothing operator `L = (alpha A + 1)^3` and its inverse `K`, as diagonal
/// Fourier multipliers.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorCoeffs {
    lattice: FrequencyLattice,
    alpha: f64,
    a: Vec<f64>,
    l: Vec<f64>,
    k: Vec<f64>,
}

impl OperatorCoeffs {
    pub fn lattice(&self) -> &FrequencyLattice {
        &self.lattice
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Laplacian symbol `A`.
    pub fn laplacian(&self) -> &[f64] {
        &self.a
    }

    pub fn l(&self) -> &[f64] {
        &self.l
    }

    pub fn k(&self) -> &[f64] {
        &self.k
    }

    pub fn apply_l(&self, v: &SpectralField) -> Result<SpectralField> {
        self.apply(v, &self.l)
    }

    pub fn apply_k(&self, v: &SpectralField) -> Result<SpectralField> {
        self.apply(v, &self.k)
    }

    fn apply(&self, v: &SpectralField, mult: &[f64]) -> Result<SpectralField> {
        self.lattice.check_same(v.lattice())?;
        let comps = v
            .comps()
            .iter()
            .map(|c| c.iter().zip(mult).map(|(z, m)| z * m).collect())
            .collect();
        Ok(SpectralField {
            lattice: self.lattice.clone(),
            comps,
        })
    }

    /// `<L v, L v> = sum_xi sum_axes L(xi)^2 |v(xi)|^2`.
    pub fn energy(&self, v: &SpectralField) -> Result<f64> {
        self.lattice.check_same(v.lattice())?;
        Ok(v
            .comps()
            .iter()
            .map(|c| {
                c.iter()
                    .zip(&self.l)
                    .map(|(z, l)| l * l * z.norm_sqr())
                    .sum::<f64>()
            })
            .sum())
    }

    /// `<L v, v>`, the quantity conserved by the geodesic equation.
    pub fn momentum_pairing(&self, v: &SpectralField) -> Result<f64> {
        self.lattice.check_same(v.lattice())?;
        Ok(v
            .comps()
            .iter()
            .map(|c| c.iter().zip(&self.l).map(|(z, l)| l * z.norm_sqr()).sum::<f64>())
            .sum())
    }

    /// `ln|L| = 3 sum_xi ln(alpha A(xi) + 1)`.
    pub fn log_det(&self) -> f64 {
        self.a.iter().map(|a| 3.0 * (self.alpha * a).ln_1p()).sum()
    }
}

pub fn build_operator(lattice: &FrequencyLattice, alpha: f64) -> Result<OperatorCoeffs> {
    build_operator_from_symbol(lattice, laplacian_symbol(lattice), alpha)
}

pub(crate) fn build_operator_from_symbol(
    lattice: &FrequencyLattice,
    a: Vec<f64>,
    alpha: f64,
) -> Result<OperatorCoeffs> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(AtlasError::invalid(
            "alpha",
            format!("smoothness weight must be positive, got {alpha}"),
        ));
    }
    let l: Vec<f64> = a.iter().map(|&x| (alpha * x + 1.0).powi(3)).collect();
    let k = l.iter().map(|&x| 1.0 / x).collect();
    Ok(OperatorCoeffs {
        lattice: lattice.clone(),
        alpha,
        a,
        l,
        k,
    })
}

/// Moves lattice coefficients to and from samples on a periodic grid.
///
/// `to_grid` evaluates the Fourier series at the grid points (zero padding
/// plus unnormalized inverse FFT); `from_grid` is its left inverse (forward
/// FFT, divide by the grid size, crop to the lattice).
#[derive(Debug)]
pub(crate) struct LatticeTransform {
    fft: NdFft,
    slots: Vec<usize>,
}

impl LatticeTransform {
    pub fn new(lattice: &FrequencyLattice, grid: &[usize]) -> Self {
        let gstrides = strides_of(grid);
        let slots = (0..lattice.len())
            .map(|idx| {
                let xi = lattice.frequency(idx);
                (0..grid.len())
                    .map(|axis| {
                        let n = grid[axis] as i64;
                        (xi[axis].rem_euclid(n) as usize) * gstrides[axis]
                    })
                    .sum()
            })
            .collect();
        Self {
            fft: NdFft::new(grid),
            slots,
        }
    }

    /// Grid able to hold exact products of two lattice fields.
    pub fn padded(lattice: &FrequencyLattice) -> Self {
        let grid: Vec<usize> = lattice
            .dims()
            .iter()
            .map(|&m| smooth_size(2 * m - 1))
            .collect();
        Self::new(lattice, &grid)
    }

    pub fn full(lattice: &FrequencyLattice) -> Self {
        Self::new(lattice, lattice.full_dims())
    }

    pub fn grid_len(&self) -> usize {
        self.fft.len()
    }

    pub fn to_grid(&self, coeffs: &[C64]) -> Vec<C64> {
        let mut buf = vec![ZERO; self.grid_len()];
        for (c, &s) in coeffs.iter().zip(&self.slots) {
            buf[s] = *c;
        }
        self.fft.inverse(&mut buf);
        buf
    }

    pub fn from_grid(&self, buf: Vec<C64>) -> Vec<C64> {
        let scale = 1.0 / self.grid_len() as f64;
        self.from_grid_scaled(buf, scale)
    }

    /// Adjoint of `to_grid` under the real inner product: unscaled crop of
    /// the forward transform.
    pub fn to_grid_adjoint(&self, buf: Vec<C64>) -> Vec<C64> {
        self.from_grid_scaled(buf, 1.0)
    }

    fn from_grid_scaled(&self, mut buf: Vec<C64>, scale: f64) -> Vec<C64> {
        self.fft.forward(&mut buf);
        self.slots.iter().map(|&s| buf[s] * scale).collect()
    }

    /// Real samples of Hermitian coefficient sets, two fields per inverse
    /// FFT (one in the real part, one in the imaginary part).
    pub fn to_real_grids(&self, fields: &[&[C64]]) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(fields.len());
        for pair in fields.chunks(2) {
            let mut buf = vec![ZERO; self.grid_len()];
            for (i, &s) in self.slots.iter().enumerate() {
                let b = pair.get(1).map_or(ZERO, |f| f[i]);
                buf[s] = pair[0][i] + C64::new(-b.im, b.re);
            }
            self.fft.inverse(&mut buf);
            out.push(buf.iter().map(|z| z.re).collect());
            if pair.len() == 2 {
                out.push(buf.iter().map(|z| z.im).collect());
            }
        }
        out
    }

    /// `from_grid` of real grids, two per forward FFT. The coefficients are
    /// exactly Hermitian.
    pub fn from_real_grids(&self, grids: &[Vec<f64>]) -> Vec<Vec<C64>> {
        self.from_real_grids_scaled(grids, 1.0 / self.grid_len() as f64)
    }

    /// `to_grid_adjoint` of real grids.
    pub fn to_real_grids_adjoint(&self, grids: &[Vec<f64>]) -> Vec<Vec<C64>> {
        self.from_real_grids_scaled(grids, 1.0)
    }

    fn from_real_grids_scaled(&self, grids: &[Vec<f64>], scale: f64) -> Vec<Vec<C64>> {
        let n = self.slots.len();
        let mut out = Vec::with_capacity(grids.len());
        for pair in grids.chunks(2) {
            let mut buf: Vec<C64> = match pair {
                [x, y] => x.iter().zip(y).map(|(&a, &b)| C64::new(a, b)).collect(),
                _ => pair[0].iter().map(|&a| C64::new(a, 0.0)).collect(),
            };
            self.fft.forward(&mut buf);
            // X(xi) = (Z(xi) + conj Z(-xi)) / 2, Y(xi) = (Z(xi) - conj Z(-xi)) / 2i
            let half = 0.5 * scale;
            let (mut x, mut y) = (Vec::with_capacity(n), Vec::with_capacity(n));
            for i in 0..n {
                let z = buf[self.slots[i]];
                let w = buf[self.slots[n - 1 - i]].conj();
                x.push((z + w) * half);
                let d = z - w;
                y.push(C64::new(d.im, -d.re) * half);
            }
            out.push(x);
            if pair.len() == 2 {
                out.push(y);
            }
        }
        out
    }
}

fn broadcast_pairs<'a>(
    a: &'a SpectralField,
    b: &'a SpectralField,
) -> Result<Vec<(&'a [C64], &'a [C64])>> {
    a.lattice().check_same(b.lattice())?;
    match (a.ncomp(), b.ncomp()) {
        (1, n) => Ok((0..n).map(|i| (a.comps[0].as_slice(), b.comps[i].as_slice())).collect()),
        (n, m) if n == m => Ok((0..n)
            .map(|i| (a.comps[i].as_slice(), b.comps[i].as_slice()))
            .collect()),
        (n, m) => Err(AtlasError::Shape(format!(
            "cannot pair {n}-component field with {m}-component field"
        ))),
    }
}

/// Circular convolution of lattice coefficients, truncated back to the
/// lattice: `out(xi) = sum_eta a(eta) b(xi - eta)` over lattice `eta` and
/// `xi - eta`. Computed as an exact pointwise product on a grid of at least
/// `2 m - 1` points per axis. A one-component `a` multiplies every
/// component of `b`; otherwise the product is componentwise.
pub fn truncated_convolve(a: &SpectralField, b: &SpectralField) -> Result<SpectralField> {
    let pairs = broadcast_pairs(a, b)?;
    let tr = LatticeTransform::padded(a.lattice());
    let comps = pairs
        .into_iter()
        .map(|(x, y)| {
            let gx = tr.to_grid(x);
            let gy = tr.to_grid(y);
            tr.from_grid(gx.iter().zip(&gy).map(|(p, q)| p * q).collect())
        })
        .collect();
    SpectralField::from_comps(a.lattice(), comps)
}

/// Truncated correlation of a matrix field against a vector field:
/// `out_i(xi) = sum_j sum_eta conj(M_ji(eta)) v_j(eta + xi)`, i.e. the
/// transposed matrix field conjugate-reflected and convolved with `v`. `m`
/// holds `d * d` components in row-major order (`M_ij` at `i * d + j`).
/// For Hermitian inputs this is the spatial product `M(x)^T v(x)`.
pub fn correlate_auto(m: &SpectralField, v: &SpectralField) -> Result<SpectralField> {
    m.lattice().check_same(v.lattice())?;
    let d = v.ncomp();
    if m.ncomp() != d * d {
        return Err(AtlasError::Shape(format!(
            "matrix field needs {} components for a {d}-vector field, got {}",
            d * d,
            m.ncomp()
        )));
    }
    let tr = LatticeTransform::padded(v.lattice());
    let gm: Vec<Vec<C64>> = m.comps().iter().map(|c| tr.to_grid(c)).collect();
    let gv: Vec<Vec<C64>> = v.comps().iter().map(|c| tr.to_grid(c)).collect();
    let comps = (0..d)
        .map(|i| {
            let mut acc = vec![ZERO; tr.grid_len()];
            for j in 0..d {
                for ((a, mji), vj) in acc.iter_mut().zip(&gm[j * d + i]).zip(&gv[j]) {
                    *a += mji.conj() * vj;
                }
            }
            tr.from_grid(acc)
        })
        .collect();
    SpectralField::from_comps(v.lattice(), comps)
}

/// Evaluates a Hermitian field on its full image grid.
pub fn spectral_to_spatial(f: &SpectralField) -> Result<VectorField> {
    let asym = f.hermitian_asymmetry();
    if asym > HERMITIAN_TOL {
        return Err(AtlasError::NotHermitian { asymmetry: asym });
    }
    let tr = LatticeTransform::full(f.lattice());
    Ok(VectorField::new(
        f.lattice().full_shape(),
        real_fields(&tr, f.comps()),
    )?)
}

pub(crate) fn real_fields(tr: &LatticeTransform, comps: &[Vec<C64>]) -> Vec<Vec<f64>> {
    comps
        .iter()
        .map(|c| tr.to_grid(c).into_iter().map(|z| z.re).collect())
        .collect()
}

/// Projects a real field on the full grid onto the lattice (forward DFT
/// divided by the voxel count, cropped). Exact left inverse of
/// [`spectral_to_spatial`] for Hermitian lattice fields.
pub fn spatial_to_spectral(lattice: &FrequencyLattice, field: &VectorField) -> Result<SpectralField> {
    if field.shape().dims() != lattice.full_dims() {
        return Err(AtlasError::Shape(format!(
            "field grid {:?} vs lattice grid {:?}",
            field.shape().dims(),
            lattice.full_dims()
        )));
    }
    let tr = LatticeTransform::full(lattice);
    let comps = field
        .comps()
        .iter()
        .map(|c| tr.from_grid(c.iter().map(|&x| C64::new(x, 0.0)).collect()))
        .collect();
    SpectralField::from_comps(lattice, comps)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lattice_1d(m: usize, n: usize) -> FrequencyLattice {
        FrequencyLattice::new(&[m], &[n]).unwrap()
    }

    #[test]
    fn lattice_validation() {
        assert!(FrequencyLattice::new(&[8, 9], &[32, 32]).is_err());
        assert!(FrequencyLattice::new(&[33], &[32]).is_err());
        assert!(FrequencyLattice::new(&[9, 9], &[32]).is_err());
        let lat = FrequencyLattice::isotropic(16, &[64, 8]).unwrap();
        assert_eq!(lat.dims(), &[15, 7]);
    }

    #[test]
    fn mirror_is_negated_frequency() {
        let lat = FrequencyLattice::new(&[5, 7, 3], &[8, 8, 8]).unwrap();
        for idx in 0..lat.len() {
            let xi = lat.frequency(idx);
            let neg = [-xi[0], -xi[1], -xi[2]];
            assert_eq!(lat.index_of(&neg), Some(lat.mirror(idx)));
        }
        assert_eq!(lat.frequency(lat.zero_index()), [0, 0, 0]);
    }

    #[test]
    fn laplacian_symbol_examples() {
        let lat = lattice_1d(3, 4);
        let a = laplacian_symbol(&lat);
        assert_eq!(a[lat.index_of(&[0]).unwrap()], 0.0);
        assert!((a[lat.index_of(&[1]).unwrap()] - 2.0).abs() < 1e-15);

        let lat2 = FrequencyLattice::new(&[7, 7], &[8, 8]).unwrap();
        for (idx, &v) in laplacian_symbol(&lat2).iter().enumerate() {
            assert!((0.0..=8.0).contains(&v));
            if idx != lat2.zero_index() {
                assert!(v > 0.0);
            }
        }
    }

    #[test]
    fn operator_examples() {
        let lat = lattice_1d(3, 4);
        let one = lat.index_of(&[1]).unwrap();
        let op = build_operator(&lat, 1.0).unwrap();
        assert_eq!(op.l()[lat.zero_index()], 1.0);
        assert_eq!(op.k()[lat.zero_index()], 1.0);
        assert!((op.l()[one] - 27.0).abs() < 1e-12);
        assert!((op.k()[one] - 1.0 / 27.0).abs() < 1e-15);

        // (2 alpha + 1)^3 at alpha = 10, checked against the expanded cubic
        // 8a^3 + 12a^2 + 6a + 1.
        let op10 = build_operator(&lat, 10.0).unwrap();
        let a = 10.0f64;
        let expanded = 8.0 * a * a * a + 12.0 * a * a + 6.0 * a + 1.0;
        assert!((op10.l()[one] - 9261.0).abs() < 1e-9);
        assert!((expanded - 9261.0).abs() < 1e-12);

        assert!(build_operator(&lat, 0.0).is_err());
        assert!(build_operator(&lat, -1.0).is_err());
        assert!(build_operator(&lat, f64::NAN).is_err());
    }

    #[test]
    fn convolution_with_dc_impulse_scales() {
        let lat = FrequencyLattice::new(&[5, 5], &[16, 16]).unwrap();
        let mut delta = SpectralField::zeros(&lat, 1);
        delta.set_hermitian(0, &[0, 0], C64::new(2.5, 0.0)).unwrap();
        let mut b = SpectralField::zeros(&lat, 2);
        b.set_hermitian(0, &[1, -2], C64::new(0.3, -0.7)).unwrap();
        b.set_hermitian(1, &[0, 1], C64::new(-1.1, 0.2)).unwrap();
        let out = truncated_convolve(&delta, &b).unwrap();
        for (o, x) in out.comps().iter().flatten().zip(b.comps().iter().flatten()) {
            assert!((o - x * 2.5).norm() < 1e-13);
        }
        let zero = truncated_convolve(&SpectralField::zeros(&lat, 1), &b).unwrap();
        assert_eq!(zero.max_abs(), 0.0);
    }

    #[test]
    fn spatial_dc_is_constant() {
        let lat = FrequencyLattice::new(&[3, 3], &[6, 5]).unwrap();
        let mut f = SpectralField::zeros(&lat, 2);
        f.set_hermitian(0, &[0, 0], C64::new(1.75, 0.0)).unwrap();
        let s = spectral_to_spatial(&f).unwrap();
        assert!(s.comps()[0].iter().all(|&x| (x - 1.75).abs() < 1e-14));
        assert!(s.comps()[1].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn non_hermitian_rejected() {
        let lat = lattice_1d(5, 8);
        let mut f = SpectralField::zeros(&lat, 1);
        f.comps_mut()[0][lat.index_of(&[1]).unwrap()] = C64::new(1.0, 0.0);
        assert!(matches!(
            spectral_to_spatial(&f),
            Err(AtlasError::NotHermitian { .. })
        ));
        f.symmetrize();
        assert!(spectral_to_spatial(&f).is_ok());
    }

    #[test]
    fn lattice_mismatch_is_shape_error() {
        let a = SpectralField::zeros(&lattice_1d(5, 8), 1);
        let b = SpectralField::zeros(&lattice_1d(3, 8), 1);
        assert!(matches!(truncated_convolve(&a, &b), Err(AtlasError::Shape(_))));
    }
}
