//! Multi-dimensional complex FFT on flat row-major buffers, one axis at a time.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub struct FftNd {
    n: usize,
    dim: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    line: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl FftNd {
    pub fn new(n: usize, dim: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Self {
            n,
            dim,
            forward,
            inverse,
            line: vec![Complex64::default(); n],
            scratch: vec![Complex64::default(); scratch_len],
        }
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Unnormalized forward transform, X_k = Σ_j x_j e^{−2πi k·j/n}.
    pub fn forward(&mut self, data: &mut [Complex64]) {
        let plan = Arc::clone(&self.forward);
        self.apply(plan.as_ref(), data);
    }

    /// Unnormalized inverse transform, x_j = Σ_k X_k e^{+2πi k·j/n}.
    pub fn inverse(&mut self, data: &mut [Complex64]) {
        let plan = Arc::clone(&self.inverse);
        self.apply(plan.as_ref(), data);
    }

    fn apply(&mut self, plan: &dyn Fft<f64>, data: &mut [Complex64]) {
        debug_assert_eq!(data.len(), self.len());
        let n = self.n;
        if self.dim == 1 {
            plan.process_with_scratch(data, &mut self.scratch);
            return;
        }
        for axis in 0..self.dim {
            let stride = n.pow((self.dim - 1 - axis) as u32);
            if stride == 1 {
                for chunk in data.chunks_exact_mut(n) {
                    plan.process_with_scratch(chunk, &mut self.scratch);
                }
                continue;
            }
            let block = stride * n;
            for outer in (0..data.len()).step_by(block) {
                for inner in 0..stride {
                    let base = outer + inner;
                    for (j, v) in self.line.iter_mut().enumerate() {
                        *v = data[base + j * stride];
                    }
                    plan.process_with_scratch(&mut self.line, &mut self.scratch);
                    for (j, v) in self.line.iter().enumerate() {
                        data[base + j * stride] = *v;
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft(data: &[Complex64], n: usize, dim: usize) -> Vec<Complex64> {
        let len = n.pow(dim as u32);
        let digits = |mut i: usize| {
            let mut v = vec![0usize; dim];
            for j in (0..dim).rev() {
                v[j] = i % n;
                i /= n;
            }
            v
        };
        (0..len)
            .map(|k| {
                let kd = digits(k);
                (0..len)
                    .map(|j| {
                        let jd = digits(j);
                        let phase: usize = kd.iter().zip(&jd).map(|(a, b)| a * b).sum();
                        let ang = -2.0 * std::f64::consts::PI * (phase % n) as f64 / n as f64;
                        data[j] * Complex64::from_polar(1.0, ang)
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn matches_naive_transform_in_two_and_three_dimensions() {
        for (n, dim) in [(8usize, 1usize), (4, 2), (4, 3)] {
            let len = n.pow(dim as u32);
            let x: Vec<Complex64> = (0..len)
                .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 1.3).cos()))
                .collect();
            let mut y = x.clone();
            let mut fft = FftNd::new(n, dim);
            fft.forward(&mut y);
            for (a, b) in y.iter().zip(naive_dft(&x, n, dim)) {
                assert!((a - b).norm() < 1e-12);
            }
            fft.inverse(&mut y);
            for (a, b) in y.iter().zip(&x) {
                assert!((a / len as f64 - b).norm() < 1e-14);
            }
        }
    }
}
