//! Independent reference implementations shared by the integration tests.
//! Nothing here goes through the crate's FFT or special-function code.

#![allow(dead_code)]

use std::f64::consts::PI;

use bayes_atlas::fourier_field::{FrequencyLattice, SpectralField, C64};
use bayes_atlas::grid::{GridShape, Image};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random Hermitian field with coefficients uniform in `[-scale, scale]`.
pub fn random_hermitian(lat: &FrequencyLattice, ncomp: usize, scale: f64, rng: &mut ChaCha8Rng) -> SpectralField {
    let mut f = SpectralField::zeros(lat, ncomp);
    for c in f.comps_mut() {
        for z in c.iter_mut() {
            *z = C64::new(rng.random_range(-scale..scale), rng.random_range(-scale..scale));
        }
    }
    f.symmetrize();
    f
}

/// Random Hermitian field whose magnitude decays with frequency.
pub fn smooth_hermitian(lat: &FrequencyLattice, scale: f64, rng: &mut ChaCha8Rng) -> SpectralField {
    let mut f = random_hermitian(lat, lat.ndim(), scale, rng);
    for c in f.comps_mut() {
        for (idx, z) in c.iter_mut().enumerate() {
            let xi = lat.frequency(idx);
            let r2: i64 = xi.iter().map(|x| x * x).sum();
            *z /= 1.0 + r2 as f64;
        }
    }
    f
}

fn phase(lat: &FrequencyLattice, idx: usize, pos: &[usize], grid: &[usize]) -> f64 {
    let xi = lat.frequency(idx);
    (0..grid.len())
        .map(|a| 2.0 * PI * xi[a] as f64 * pos[a] as f64 / grid[a] as f64)
        .sum()
}

/// Direct evaluation of the Fourier series on a grid, no FFT.
pub fn dense_to_grid(lat: &FrequencyLattice, coeffs: &[C64], grid: &[usize]) -> Vec<C64> {
    let shape = GridShape::new(grid).unwrap();
    (0..shape.len())
        .map(|g| {
            let p = shape.unravel(g);
            coeffs
                .iter()
                .enumerate()
                .map(|(idx, c)| c * C64::from_polar(1.0, phase(lat, idx, &p, grid)))
                .sum()
        })
        .collect()
}

/// Direct DFT at the lattice frequencies, divided by the grid size.
pub fn dense_from_grid(lat: &FrequencyLattice, values: &[C64], grid: &[usize]) -> Vec<C64> {
    let shape = GridShape::new(grid).unwrap();
    let n = shape.len() as f64;
    let positions: Vec<[usize; 3]> = (0..shape.len()).map(|g| shape.unravel(g)).collect();
    (0..lat.len())
        .map(|idx| {
            values
                .iter()
                .zip(&positions)
                .map(|(v, p)| v * C64::from_polar(1.0, -phase(lat, idx, p, grid)))
                .sum::<C64>()
                / n
        })
        .collect()
}

/// Exactly `2 m - 1` points per axis, the smallest alias-free product grid.
pub fn oracle_grid(lat: &FrequencyLattice) -> Vec<usize> {
    lat.dims().iter().map(|&m| 2 * m - 1).collect()
}

/// Componentwise product on the padded grid, cropped back to the lattice.
pub fn oracle_convolve(a: &SpectralField, b: &SpectralField) -> Vec<Vec<C64>> {
    let lat = a.lattice();
    let grid = oracle_grid(lat);
    a.comps()
        .iter()
        .zip(b.comps())
        .map(|(x, y)| {
            let gx = dense_to_grid(lat, x, &grid);
            let gy = dense_to_grid(lat, y, &grid);
            let prod: Vec<C64> = gx.iter().zip(&gy).map(|(p, q)| p * q).collect();
            dense_from_grid(lat, &prod, &grid)
        })
        .collect()
}

/// `out_i = crop(sum_j conj(M_ji) V_j)` on the padded grid.
pub fn oracle_correlate(m: &SpectralField, v: &SpectralField) -> Vec<Vec<C64>> {
    let lat = v.lattice();
    let d = v.ncomp();
    let grid = oracle_grid(lat);
    let gm: Vec<Vec<C64>> = m.comps().iter().map(|c| dense_to_grid(lat, c, &grid)).collect();
    let gv: Vec<Vec<C64>> = v.comps().iter().map(|c| dense_to_grid(lat, c, &grid)).collect();
    (0..d)
        .map(|i| {
            let mut acc = vec![C64::new(0.0, 0.0); gv[0].len()];
            for j in 0..d {
                for ((a, mji), vj) in acc.iter_mut().zip(&gm[j * d + i]).zip(&gv[j]) {
                    *a += mji.conj() * vj;
                }
            }
            dense_from_grid(lat, &acc, &grid)
        })
        .collect()
}

pub fn max_diff(a: &[Vec<C64>], b: &[Vec<C64>]) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Lanczos approximation (g = 7, 9 terms) of `ln Gamma(x)` for `x > 0.5`.
pub fn lanczos_ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    let x = x - 1.0;
    let mut a = C[0];
    let t = x + G + 0.5;
    for (i, &c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Smooth positive test image: a sum of a few Gaussian bumps.
pub fn bumps(shape: &GridShape, seed: u64) -> Image {
    let mut r = rng(seed);
    let centres: Vec<([f64; 3], f64, f64)> = (0..3)
        .map(|_| {
            let mut c = [0.0; 3];
            for (a, &n) in shape.dims().iter().enumerate() {
                c[a] = r.random_range(0.25..0.75) * n as f64;
            }
            let size = *shape.dims().iter().min().unwrap() as f64;
            (c, r.random_range(0.12..0.25) * size, r.random_range(0.3..1.0))
        })
        .collect();
    let data = (0..shape.len())
        .map(|i| {
            let p = shape.unravel(i);
            0.1 + centres
                .iter()
                .map(|(c, s, h)| {
                    let r2: f64 = (0..shape.ndim()).map(|a| (p[a] as f64 - c[a]).powi(2)).sum();
                    h * (-0.5 * r2 / (s * s)).exp()
                })
                .sum::<f64>()
        })
        .collect();
    Image::new(shape.clone(), data).unwrap()
}
