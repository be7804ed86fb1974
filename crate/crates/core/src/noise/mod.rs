//! Spatially homogeneous, white-in-time Gaussian noise on a periodic grid.
//!
//! The torus [0, L)^d carries the lattice of frequencies ξ_k = k/L with
//! k ∈ {−n/2, …, n/2−1}^d. Mode k receives the μ-mass of its lattice cell,
//! w_k = μ(ξ_k + [−1/(2L), 1/(2L))^d), and per time step
//!
//! ```text
//! E|Ŵ_n(k)|² = dt · w_k,    Ŵ_n(−k) = conj Ŵ_n(k),
//! ```
//!
//! with independent steps. The physical increment field is
//! ΔW_n(x) = Σ_k Ŵ_n(k) e^{2πi ξ_k·x}, and a grid function φ pairs with it
//! through its trapezoidal Fourier transform φ̂(ξ_k) = (L/n)^d Σ_x φ(x)e^{−2πiξ_k·x}.
//! Under these conventions the discrete isometry
//! Var W(1_{[0,T]}φ) = T Σ_k |φ̂(ξ_k)|² w_k holds exactly.

pub mod dump;

use std::ops::Range;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fft::FftNd;
use crate::rng;
use crate::spectral_measure::CorrelationKernel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub dim: usize,
    /// Period L of the spatial torus.
    pub length: f64,
    /// Grid points (and Fourier modes) per axis.
    pub n_x: usize,
    pub dt: f64,
    pub n_t: usize,
}

impl GridSpec {
    pub fn new(dim: usize, length: f64, n_x: usize, dt: f64, n_t: usize) -> Result<Self> {
        let g = Self {
            dim,
            length,
            n_x,
            dt,
            n_t,
        };
        g.validate()?;
        Ok(g)
    }

    /// Grid with `n_t` steps covering [0, horizon].
    pub fn with_horizon(
        dim: usize,
        length: f64,
        n_x: usize,
        horizon: f64,
        n_t: usize,
    ) -> Result<Self> {
        if n_t == 0 {
            return Err(Error::InvalidParameter(
                "n_t must be positive to derive dt from a horizon".into(),
            ));
        }
        Self::new(dim, length, n_x, horizon / n_t as f64, n_t)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.dim == 0 {
            return bad("dimension must be positive".into());
        }
        if self.n_x < 8 || !self.n_x.is_power_of_two() {
            return bad(format!(
                "n_x must be a power of two and at least 8, got {}",
                self.n_x
            ));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.length > 0.0 && self.length.is_finite()) {
            return bad(format!(
                "domain length must be positive, got {}",
                self.length
            ));
        }
        Ok(())
    }

    pub fn horizon(&self) -> f64 {
        self.n_t as f64 * self.dt
    }

    pub fn n_points(&self) -> usize {
        self.n_x.pow(self.dim as u32)
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n_x as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Per-axis indices of flat index `idx` (last axis fastest).
    pub fn digits(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim];
        for slot in out.iter_mut().rev() {
            *slot = idx % self.n_x;
            idx /= self.n_x;
        }
        out
    }

    pub fn flat_index(&self, digits: &[usize]) -> usize {
        digits.iter().fold(0, |acc, &d| acc * self.n_x + d)
    }

    /// Physical coordinates of grid point `idx`.
    pub fn point(&self, idx: usize) -> Vec<f64> {
        let h = self.spacing();
        self.digits(idx).into_iter().map(|j| j as f64 * h).collect()
    }

    /// Grid point nearest to `x`, periodically wrapped.
    pub fn nearest_index(&self, x: &[f64]) -> Result<usize> {
        if x.len() != self.dim {
            return Err(Error::InvalidParameter(format!(
                "point has {} coordinates, grid has dimension {}",
                x.len(),
                self.dim
            )));
        }
        let h = self.spacing();
        let n = self.n_x as i64;
        let digits: Vec<usize> = x
            .iter()
            .map(|&c| ((c / h).round() as i64).rem_euclid(n) as usize)
            .collect();
        Ok(self.flat_index(&digits))
    }

    /// Signed integer mode k of flat spectral index `idx`.
    pub fn mode(&self, idx: usize) -> Vec<i64> {
        let n = self.n_x as i64;
        self.digits(idx)
            .into_iter()
            .map(|m| {
                let m = m as i64;
                if m < n / 2 {
                    m
                } else {
                    m - n
                }
            })
            .collect()
    }

    /// Flat index of the mode −k.
    pub fn partner(&self, idx: usize) -> usize {
        let n = self.n_x;
        let digits: Vec<usize> = self.digits(idx).into_iter().map(|m| (n - m) % n).collect();
        self.flat_index(&digits)
    }
}

/// Frequency lattice of a grid together with the cell masses of μ.
#[derive(Debug, Clone)]
pub struct Lattice {
    grid: GridSpec,
    kernel: CorrelationKernel,
    weights: Vec<f64>,
    freq_sq: Vec<f64>,
    partner: Vec<usize>,
}

impl Lattice {
    pub fn new(grid: GridSpec, kernel: CorrelationKernel) -> Result<Self> {
        grid.validate()?;
        if kernel.dim() != grid.dim {
            return Err(Error::InvalidParameter(format!(
                "kernel dimension {} does not match grid dimension {}",
                kernel.dim(),
                grid.dim
            )));
        }
        let side = 1.0 / grid.length;
        let len = grid.n_points();
        let mut weights = Vec::with_capacity(len);
        let mut freq_sq = Vec::with_capacity(len);
        let mut partner = Vec::with_capacity(len);
        for idx in 0..len {
            let xi: Vec<f64> = grid.mode(idx).iter().map(|&k| k as f64 * side).collect();
            freq_sq.push(xi.iter().map(|v| v * v).sum());
            let p = grid.partner(idx);
            partner.push(p);
            // Reuse the partner's mass so that w_k = w_{−k} bit for bit.
            let w = if p < idx {
                weights[p]
            } else {
                kernel.cube_mass(&xi, side)
            };
            weights.push(w);
        }
        Ok(Self {
            grid,
            kernel,
            weights,
            freq_sq,
            partner,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn kernel(&self) -> &CorrelationKernel {
        &self.kernel
    }

    /// Cell masses w_k in flat FFT order.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// |ξ_k|² in flat FFT order.
    pub fn freq_sq(&self) -> &[f64] {
        &self.freq_sq
    }

    pub fn partner(&self, idx: usize) -> usize {
        self.partner[idx]
    }

    /// φ̂(ξ_k) = (L/n)^d Σ_x φ(x) e^{−2πiξ_k·x}.
    pub fn transform(&self, field: &[f64], fft: &mut FftNd) -> Vec<Complex64> {
        let vol = self.grid.cell_volume();
        let mut buf: Vec<Complex64> = field
            .iter()
            .map(|&v| Complex64::new(v * vol, 0.0))
            .collect();
        fft.forward(&mut buf);
        buf
    }

    /// Σ_k |φ̂_k|² w_k for a spectrum in the normalization of `transform`.
    pub fn h_norm_sq_spectral(&self, spectrum: &[Complex64]) -> f64 {
        spectrum
            .iter()
            .zip(&self.weights)
            .map(|(c, w)| c.norm_sqr() * w)
            .sum()
    }

    pub fn h_inner_spectral(&self, a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter()
            .zip(b)
            .zip(&self.weights)
            .map(|((x, y), w)| (x * y.conj()).re * w)
            .sum()
    }

    pub fn h_norm_sq(&self, field: &[f64]) -> f64 {
        let mut fft = FftNd::new(self.grid.n_x, self.grid.dim);
        self.h_norm_sq_spectral(&self.transform(field, &mut fft))
    }

    /// Writes the Fourier increments of step `step` for batch seed `seed`.
    ///
    /// Modes are visited in flat order; each pair {k, −k} draws one circular
    /// complex normal at the lower index, self-conjugate modes one real normal.
    pub fn fill_step(&self, seed: u64, step: usize, out: &mut [Complex64]) {
        debug_assert_eq!(out.len(), self.weights.len());
        let mut rng = rng::step_rng(seed, step as u64);
        let dt = self.grid.dt;
        for idx in 0..out.len() {
            let p = self.partner[idx];
            if p < idx {
                continue;
            }
            let var = dt * self.weights[idx];
            if p == idx {
                let z: f64 = rng.sample(StandardNormal);
                out[idx] = Complex64::new(z * var.sqrt(), 0.0);
            } else {
                let s = (0.5 * var).sqrt();
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                let c = Complex64::new(re * s, im * s);
                out[idx] = c;
                out[p] = c.conj();
            }
        }
    }

    /// Σ_{n ∈ steps} Re Σ_k conj(φ̂_k) Ŵ_n(k), drawing the steps on the fly.
    pub fn pair_streamed(&self, seed: u64, spectrum: &[Complex64], steps: Range<usize>) -> f64 {
        let mut buf = vec![Complex64::default(); self.weights.len()];
        let mut total = 0.0;
        for n in steps {
            self.fill_step(seed, n, &mut buf);
            total += pair_step(spectrum, &buf);
        }
        total
    }
}

fn pair_step(spectrum: &[Complex64], increments: &[Complex64]) -> f64 {
    spectrum
        .iter()
        .zip(increments)
        .map(|(p, w)| (p.conj() * w).re)
        .sum()
}

/// One realization of the noise increments over a whole grid.
#[derive(Debug, Clone)]
pub struct NoiseBatch {
    lattice: Arc<Lattice>,
    seed: u64,
    coeffs: Vec<Complex64>,
}

impl NoiseBatch {
    pub fn sample_increments(grid: GridSpec, kernel: CorrelationKernel, seed: u64) -> Result<Self> {
        Ok(Self::from_lattice(
            Arc::new(Lattice::new(grid, kernel)?),
            seed,
        ))
    }

    pub fn from_lattice(lattice: Arc<Lattice>, seed: u64) -> Self {
        let modes = lattice.grid.n_points();
        let mut coeffs = vec![Complex64::default(); modes * lattice.grid.n_t];
        for (n, chunk) in coeffs.chunks_exact_mut(modes).enumerate() {
            lattice.fill_step(seed, n, chunk);
        }
        Self {
            lattice,
            seed,
            coeffs,
        }
    }

    pub(crate) fn from_parts(lattice: Arc<Lattice>, seed: u64, coeffs: Vec<Complex64>) -> Self {
        Self {
            lattice,
            seed,
            coeffs,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn grid(&self) -> &GridSpec {
        &self.lattice.grid
    }

    pub fn kernel(&self) -> &CorrelationKernel {
        &self.lattice.kernel
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }

    /// Increments Ŵ_n(k) of step n in flat FFT order.
    pub fn step(&self, n: usize) -> &[Complex64] {
        let m = self.lattice.grid.n_points();
        &self.coeffs[n * m..(n + 1) * m]
    }

    pub fn step_mut(&mut self, n: usize) -> &mut [Complex64] {
        let m = self.lattice.grid.n_points();
        &mut self.coeffs[n * m..(n + 1) * m]
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Discrete W(1_{steps}φ) for a grid function φ.
    pub fn pair(&self, field: &[f64], steps: Range<usize>) -> Result<f64> {
        if steps.end > self.lattice.grid.n_t || steps.start > steps.end {
            return Err(Error::InvalidParameter(format!(
                "step range {steps:?} outside [0, {})",
                self.lattice.grid.n_t
            )));
        }
        let mut fft = FftNd::new(self.lattice.grid.n_x, self.lattice.grid.dim);
        let spectrum = self.lattice.transform(field, &mut fft);
        Ok(steps.map(|n| pair_step(&spectrum, self.step(n))).sum())
    }
}

/// ‖φ‖²_H on the lattice: Σ_k |φ̂(ξ_k)|² w_k.
pub fn h_norm_sq(field: &[f64], kernel: &CorrelationKernel, grid: &GridSpec) -> Result<f64> {
    if field.len() != grid.n_points() {
        return Err(Error::InvalidParameter(format!(
            "field has {} values, grid has {}",
            field.len(),
            grid.n_points()
        )));
    }
    Ok(Lattice::new(*grid, *kernel)?.h_norm_sq(field))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CovarianceReport {
    pub estimate: f64,
    pub target: f64,
    pub standard_error: f64,
    pub z_score: f64,
    pub samples: usize,
}

/// Monte Carlo estimate of E[W(1_{[0,T]}φ) W(1_{[0,T]}ψ)] against
/// T·⟨φ, ψ⟩_H on the lattice. Batch i uses seed `derive_seed(seed, i)`.
pub fn covariance_check(
    kernel: &CorrelationKernel,
    grid: &GridSpec,
    phi: &[f64],
    psi: &[f64],
    samples: usize,
    seed: u64,
) -> Result<CovarianceReport> {
    use rayon::prelude::*;
    if samples < 1000 {
        return Err(Error::InvalidParameter(format!(
            "need at least 1000 samples, got {samples}"
        )));
    }
    let lattice = Lattice::new(*grid, *kernel)?;
    let mut fft = FftNd::new(grid.n_x, grid.dim);
    let a = lattice.transform(phi, &mut fft);
    let b = lattice.transform(psi, &mut fft);
    let target = grid.horizon() * lattice.h_inner_spectral(&a, &b);
    let products: Vec<f64> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let s = rng::derive_seed(seed, i);
            let (wa, wb) = pair_both(&lattice, s, &a, &b);
            wa * wb
        })
        .collect();
    let m = samples as f64;
    let estimate = products.iter().sum::<f64>() / m;
    let var = products.iter().map(|p| (p - estimate).powi(2)).sum::<f64>() / (m - 1.0);
    let standard_error = (var / m).sqrt();
    Ok(CovarianceReport {
        estimate,
        target,
        standard_error,
        z_score: (estimate - target) / standard_error,
        samples,
    })
}

fn pair_both(lattice: &Lattice, seed: u64, a: &[Complex64], b: &[Complex64]) -> (f64, f64) {
    let mut buf = vec![Complex64::default(); lattice.weights.len()];
    let (mut wa, mut wb) = (0.0, 0.0);
    for n in 0..lattice.grid.n_t {
        lattice.fill_step(seed, n, &mut buf);
        wa += pair_step(a, &buf);
        wb += pair_step(b, &buf);
    }
    (wa, wb)
}
