//! Multi-dimensional complex FFT over row-major arrays.
//!
//! Each axis is transformed by gathering its lines into a contiguous scratch
//! buffer, running batched 1-D transforms, and scattering back. Work is split
//! across the rayon pool by whole lines, so results do not depend on the
//! number of threads.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

const LINES_PER_TASK: usize = 64;

#[derive(Clone)]
pub struct NdFft {
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
        Self { dims: dims.to_vec(), forward, inverse }
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Unnormalized transform with kernel `e^{-i k x}`.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(data, true);
    }

    /// Unnormalized transform with kernel `e^{+i k x}`.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, false);
    }

    fn run(&self, data: &mut [Complex64], forward: bool) {
        assert_eq!(data.len(), self.len(), "buffer does not match transform size");
        let plans = if forward { &self.forward } else { &self.inverse };
        let mut scratch = Vec::new();
        for axis in 0..self.dims.len() {
            self.transform_axis(data, &mut scratch, axis, &plans[axis]);
        }
    }

    fn transform_axis(
        &self,
        data: &mut [Complex64],
        scratch: &mut Vec<Complex64>,
        axis: usize,
        plan: &Arc<dyn Fft<f64>>,
    ) {
        let n = self.dims[axis];
        let inner: usize = self.dims[axis + 1..].iter().product();
        if inner == 1 {
            data.par_chunks_mut(n * LINES_PER_TASK).for_each(|chunk| plan.process(chunk));
            return;
        }
        scratch.resize(data.len(), Complex64::new(0.0, 0.0));
        let src: &[Complex64] = data;
        // scratch layout: [outer][inner][n]
        scratch.par_chunks_mut(n).enumerate().for_each(|(line, dst)| {
            let o = line / inner;
            let i = line % inner;
            let base = o * n * inner + i;
            for (a, d) in dst.iter_mut().enumerate() {
                *d = src[base + a * inner];
            }
        });
        scratch.par_chunks_mut(n * LINES_PER_TASK).for_each(|chunk| plan.process(chunk));
        let lines: &[Complex64] = scratch;
        // data rows: [outer][n] of length inner
        data.par_chunks_mut(inner).enumerate().for_each(|(row, dst)| {
            let o = row / n;
            let a = row % n;
            let base = o * inner * n + a;
            for (i, d) in dst.iter_mut().enumerate() {
                *d = lines[base + i * n];
            }
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn naive_dft(data: &[Complex64], dims: &[usize], sign: f64) -> Vec<Complex64> {
        let len = data.len();
        let unravel = |mut flat: usize| {
            let mut idx = vec![0usize; dims.len()];
            for ax in (0..dims.len()).rev() {
                idx[ax] = flat % dims[ax];
                flat /= dims[ax];
            }
            idx
        };
        (0..len)
            .map(|k| {
                let kk = unravel(k);
                (0..len)
                    .map(|x| {
                        let xx = unravel(x);
                        let phase: f64 = (0..dims.len())
                            .map(|ax| (kk[ax] * xx[ax]) as f64 / dims[ax] as f64)
                            .sum();
                        data[x] * Complex64::from_polar(1.0, sign * TAU * phase)
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn matches_naive_dft_in_three_dimensions() {
        let dims = [4, 6, 4];
        let len: usize = dims.iter().product();
        let data: Vec<Complex64> = (0..len)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let fft = NdFft::new(&dims);
        let mut fwd = data.clone();
        fft.forward(&mut fwd);
        let want = naive_dft(&data, &dims, -1.0);
        for (a, b) in fwd.iter().zip(&want) {
            assert!((a - b).norm() < 1e-11);
        }
        let mut inv = data.clone();
        fft.inverse(&mut inv);
        let want = naive_dft(&data, &dims, 1.0);
        for (a, b) in inv.iter().zip(&want) {
            assert!((a - b).norm() < 1e-11);
        }
    }

    #[test]
    fn forward_then_inverse_scales_by_len() {
        let dims = [4, 4, 4, 4];
        let len: usize = dims.iter().product();
        let data: Vec<Complex64> =
            (0..len).map(|i| Complex64::new(i as f64, -(i as f64) * 0.5)).collect();
        let fft = NdFft::new(&dims);
        let mut buf = data.clone();
        fft.forward(&mut buf);
        fft.inverse(&mut buf);
        for (a, b) in buf.iter().zip(&data) {
            assert!((a / len as f64 - b).norm() < 1e-10);
        }
    }
}
