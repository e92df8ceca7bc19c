//! Separable N-d FFT over flat row-major buffers, built from rustfft 1-d plans.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::strides_of;

pub(crate) struct NdFft {
    dims: Vec<usize>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
}

impl std::fmt::Debug for NdFft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NdFft").field("dims", &self.dims).finish()
    }
}

impl NdFft {
    pub fn new(dims: &[usize]) -> Self {
        let mut planner = FftPlanner::new();
        let forward = dims.iter().map(|&n| planner.plan_fft_forward(n)).collect();
        let inverse = dims.iter().map(|&n| planner.plan_fft_inverse(n)).collect();
        Self {
            dims: dims.to_vec(),
            forward,
            inverse,
        }
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    /// Unnormalized forward transform, `X[k] = sum_n x[n] e^{-2 pi i k n / N}`.
    pub fn forward(&self, buf: &mut [Complex64]) {
        self.run(buf, &self.forward);
    }

    /// Unnormalized inverse transform, `x[n] = sum_k X[k] e^{+2 pi i k n / N}`.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.run(buf, &self.inverse);
    }

    fn run(&self, buf: &mut [Complex64], plans: &[Arc<dyn Fft<f64>>]) {
        debug_assert_eq!(buf.len(), self.len());
        let strides = strides_of(&self.dims);
        let total = buf.len();
        let mut lines = Vec::new();
        for (axis, plan) in plans.iter().enumerate() {
            let n = self.dims[axis];
            if n == 1 {
                continue;
            }
            let stride = strides[axis];
            if stride == 1 {
                plan.process(buf);
                continue;
            }
            // gather every line along `axis` into a contiguous buffer
            lines.clear();
            lines.reserve(total);
            let block = n * stride;
            for outer in (0..total).step_by(block) {
                for inner in 0..stride {
                    let base = outer + inner;
                    lines.extend((0..n).map(|k| buf[base + k * stride]));
                }
            }
            plan.process(&mut lines);
            let mut it = lines.iter();
            for outer in (0..total).step_by(block) {
                for inner in 0..stride {
                    let base = outer + inner;
                    for k in 0..n {
                        buf[base + k * stride] = *it.next().unwrap();
                    }
                }
            }
        }
    }
}

/// Smallest integer >= `n` whose only prime factors are 2, 3 and 5.
pub(crate) fn smooth_size(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}
