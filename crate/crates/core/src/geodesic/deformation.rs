use crate::error::{AtlasError, Result};
use crate::grid::{GridShape, Image, VectorField};

/// Position map `phi(x)` sampled on the full grid, in voxel units.
#[derive(Clone, Debug, PartialEq)]
pub struct DeformationField {
    spacing: Vec<f64>,
    map: VectorField,
}

impl DeformationField {
    pub fn identity(shape: &GridShape) -> Self {
        Self::from_displacement(VectorField::zeros(shape.clone()))
    }

    pub fn from_displacement(disp: VectorField) -> Self {
        let shape = disp.shape().clone();
        let mut comps = disp.into_comps();
        for idx in 0..shape.len() {
            let pos = shape.unravel(idx);
            for (axis, c) in comps.iter_mut().enumerate() {
                c[idx] += pos[axis] as f64;
            }
        }
        Self {
            spacing: vec![1.0; shape.ndim()],
            map: VectorField::new(shape, comps).expect("shape preserved"),
        }
    }

    pub fn from_positions(map: VectorField) -> Result<Self> {
        if map.comps().iter().flatten().any(|x| !x.is_finite()) {
            return Err(AtlasError::Domain("non-finite position in deformation".into()));
        }
        Ok(Self {
            spacing: vec![1.0; map.shape().ndim()],
            map,
        })
    }

    pub fn with_spacing(mut self, spacing: &[f64]) -> Self {
        self.spacing = spacing.to_vec();
        self
    }

    pub fn shape(&self) -> &GridShape {
        self.map.shape()
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn positions(&self) -> &VectorField {
        &self.map
    }

    pub fn position(&self, idx: usize) -> [f64; 3] {
        let mut p = [0.0; 3];
        for (axis, c) in self.map.comps().iter().enumerate() {
            p[axis] = c[idx];
        }
        p
    }

    /// `phi(x) - x`.
    pub fn displacement(&self) -> VectorField {
        let shape = self.shape().clone();
        let mut comps = self.map.comps().to_vec();
        for idx in 0..shape.len() {
            let pos = shape.unravel(idx);
            for (axis, c) in comps.iter_mut().enumerate() {
                c[idx] -= pos[axis] as f64;
            }
        }
        VectorField::new(shape, comps).expect("shape preserved")
    }

    pub fn max_displacement(&self) -> f64 {
        self.displacement().max_norm()
    }
}

/// Cell origin and fractional offset along one axis, with clamping.
#[inline]
fn cell(p: f64, n: usize) -> (usize, f64, bool) {
    if n == 1 {
        return (0, 0.0, false);
    }
    let hi = (n - 1) as f64;
    let (q, clamped) = if p < 0.0 {
        (0.0, true)
    } else if p > hi {
        (hi, true)
    } else {
        (p, false)
    };
    let i = (q.floor() as usize).min(n - 2);
    (i, q - i as f64, clamped)
}

/// Multilinear interpolation with clamped boundaries.
pub fn interpolate(img: &Image, p: &[f64]) -> f64 {
    interpolate_with_gradient(img, p).0
}

/// Interpolated value and its derivative with respect to the sample
/// position. Clamped axes have zero derivative.
pub fn interpolate_with_gradient(img: &Image, p: &[f64]) -> (f64, [f64; 3]) {
    let dims = img.shape().dims();
    let d = dims.len();
    let data = img.data();
    let mut base = [0usize; 3];
    let mut frac = [0.0f64; 3];
    let mut live = [false; 3];
    let mut stride = [1usize; 3];
    for axis in (0..d).rev() {
        let (i, f, clamped) = cell(p[axis], dims[axis]);
        base[axis] = i;
        frac[axis] = f;
        live[axis] = dims[axis] > 1 && !clamped;
        if axis + 1 < d {
            stride[axis] = stride[axis + 1] * dims[axis + 1];
        }
    }
    let origin: usize = (0..d).map(|a| base[a] * stride[a]).sum();
    let mut value = 0.0;
    let mut grad = [0.0; 3];
    for corner in 0..(1usize << d) {
        let mut offset = 0;
        let mut w = [0.0f64; 3];
        let mut dw = [0.0f64; 3];
        for axis in 0..d {
            let upper = (corner >> axis) & 1 == 1;
            if upper && dims[axis] > 1 {
                offset += stride[axis];
            }
            if upper {
                w[axis] = frac[axis];
                dw[axis] = 1.0;
            } else {
                w[axis] = 1.0 - frac[axis];
                dw[axis] = -1.0;
            }
            if dims[axis] == 1 {
                w[axis] = if upper { 0.0 } else { 1.0 };
            }
        }
        let v = data[origin + offset];
        let weight: f64 = w[..d].iter().product();
        value += weight * v;
        for a in 0..d {
            if !live[a] {
                continue;
            }
            let mut g = dw[a];
            for (b, wb) in w[..d].iter().enumerate() {
                if b != a {
                    g *= wb;
                }
            }
            grad[a] += g * v;
        }
    }
    (value, grad)
}

/// `I o phi` by multilinear interpolation, clamped at the boundary.
pub fn warp_image(img: &Image, phi: &DeformationField) -> Result<Image> {
    if img.shape() != phi.shape() {
        return Err(AtlasError::Shape(format!(
            "image grid {:?} vs deformation grid {:?}",
            img.shape().dims(),
            phi.shape().dims()
        )));
    }
    let d = img.shape().ndim();
    let data = (0..img.len())
        .map(|idx| {
            let p = phi.position(idx);
            interpolate(img, &p[..d])
        })
        .collect();
    Image::with_spacing(img.shape().clone(), img.spacing().to_vec(), data)
}

/// Per-voxel determinant of `D phi` from central differences (one-sided at
/// the boundary).
pub fn jacobian_determinant(phi: &DeformationField) -> Vec<f64> {
    let shape = phi.shape();
    let dims = shape.dims();
    let d = dims.len();
    let strides = shape.strides();
    let comps = phi.positions().comps();
    (0..shape.len())
        .map(|idx| {
            let pos = shape.unravel(idx);
            let mut jac = [[0.0f64; 3]; 3];
            for j in 0..d {
                let n = dims[j];
                if n == 1 {
                    jac[j][j] = 1.0;
                    continue;
                }
                let (lo, hi, span) = if pos[j] == 0 {
                    (idx, idx + strides[j], 1.0)
                } else if pos[j] == n - 1 {
                    (idx - strides[j], idx, 1.0)
                } else {
                    (idx - strides[j], idx + strides[j], 2.0)
                };
                for i in 0..d {
                    jac[i][j] = (comps[i][hi] - comps[i][lo]) / span;
                }
            }
            match d {
                1 => jac[0][0],
                2 => jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0],
                _ => {
                    jac[0][0] * (jac[1][1] * jac[2][2] - jac[1][2] * jac[2][1])
                        - jac[0][1] * (jac[1][0] * jac[2][2] - jac[1][2] * jac[2][0])
                        + jac[0][2] * (jac[1][0] * jac[2][1] - jac[1][1] * jac[2][0])
                }
            }
        })
        .collect()
}

/// Periodic multilinear interpolation of a scalar field.
fn interpolate_periodic(values: &[f64], dims: &[usize], p: &[f64]) -> f64 {
    let d = dims.len();
    let mut acc = 0.0;
    for corner in 0..(1usize << d) {
        let mut idx = 0usize;
        let mut w = 1.0;
        for axis in 0..d {
            let n = dims[axis] as i64;
            let fl = p[axis].floor();
            let f = p[axis] - fl;
            let upper = (corner >> axis) & 1 == 1;
            let i = (fl as i64 + upper as i64).rem_euclid(n) as usize;
            idx = idx * dims[axis] + i;
            w *= if upper { f } else { 1.0 - f };
        }
        acc += w * values[idx];
    }
    acc
}

/// `phi o psi` for maps with periodic displacements (as produced by
/// spectral shooting): `psi(x) + u_phi(psi(x))`, with `u_phi` interpolated
/// periodically.
pub fn compose(phi: &DeformationField, psi: &DeformationField) -> Result<DeformationField> {
    if phi.shape() != psi.shape() {
        return Err(AtlasError::Shape("composition of fields on different grids".into()));
    }
    let shape = phi.shape();
    let dims = shape.dims();
    let d = dims.len();
    let disp = phi.displacement();
    let mut comps = psi.positions().comps().to_vec();
    for idx in 0..shape.len() {
        let p = psi.position(idx);
        for (axis, c) in comps.iter_mut().enumerate() {
            c[idx] += interpolate_periodic(&disp.comps()[axis], dims, &p[..d]);
        }
    }
    DeformationField::from_positions(VectorField::new(shape.clone(), comps)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(shape: &GridShape) -> Image {
        let data = (0..shape.len())
            .map(|i| {
                let p = shape.unravel(i);
                (p[0] as f64 * 0.7).sin() + 0.3 * p[1] as f64
            })
            .collect();
        Image::new(shape.clone(), data).unwrap()
    }

    #[test]
    fn identity_warp_is_exact() {
        let shape = GridShape::new(&[6, 5]).unwrap();
        let img = ramp(&shape);
        let out = warp_image(&img, &DeformationField::identity(&shape)).unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn integer_shift_moves_samples() {
        let shape = GridShape::new(&[8, 8]).unwrap();
        let img = ramp(&shape);
        let mut disp = VectorField::zeros(shape.clone());
        disp.comps_mut()[0].iter_mut().for_each(|x| *x = 2.0);
        let phi = DeformationField::from_displacement(disp);
        let out = warp_image(&img, &phi).unwrap();
        for i in 0..6 {
            for j in 0..8 {
                assert_eq!(out.data()[i * 8 + j], img.data()[(i + 2) * 8 + j]);
            }
        }
    }

    #[test]
    fn determinant_of_scaling() {
        let shape = GridShape::new(&[7, 9]).unwrap();
        let s = 1.3;
        let comps = (0..2)
            .map(|axis| {
                (0..shape.len())
                    .map(|i| s * shape.unravel(i)[axis] as f64)
                    .collect()
            })
            .collect();
        let phi = DeformationField::from_positions(VectorField::new(shape.clone(), comps).unwrap())
            .unwrap();
        for det in jacobian_determinant(&phi) {
            assert!((det - s * s).abs() < 1e-12);
        }
        let id = jacobian_determinant(&DeformationField::identity(&shape));
        assert!(id.iter().all(|&x| x == 1.0));
    }

    #[test]
    fn interpolation_gradient_matches_differences() {
        let shape = GridShape::new(&[6, 7]).unwrap();
        let img = ramp(&shape);
        let p = [2.3, 4.6];
        let (_, g) = interpolate_with_gradient(&img, &p);
        let h = 1e-6;
        for a in 0..2 {
            let mut hi = p;
            let mut lo = p;
            hi[a] += h;
            lo[a] -= h;
            let fd = (interpolate(&img, &hi) - interpolate(&img, &lo)) / (2.0 * h);
            assert!((fd - g[a]).abs() < 1e-7);
        }
        // clamped position: zero derivative along the clamped axis
        let (_, g) = interpolate_with_gradient(&img, &[-1.0, 2.5]);
        assert_eq!(g[0], 0.0);
    }

    #[test]
    fn three_d_identity_and_grid_mismatch() {
        let shape = GridShape::new(&[3, 4, 5]).unwrap();
        let data: Vec<f64> = (0..shape.len()).map(|i| i as f64).collect();
        let img = Image::new(shape.clone(), data).unwrap();
        let out = warp_image(&img, &DeformationField::identity(&shape)).unwrap();
        assert_eq!(out, img);
        let other = DeformationField::identity(&GridShape::new(&[3, 4, 6]).unwrap());
        assert!(warp_image(&img, &other).is_err());
    }
}
