//! Pseudo-spectral time stepping of the mild equation with zero initial data.
//!
//! Linear propagation is exact in Fourier space; σ(u) and b(u) are evaluated
//! on the physical grid, and σ(u_n) multiplies the increment field ΔW_n
//! pointwise before transforming back.
//!
//! Heat, with λ_k = 4π²|ξ_k|²:
//!
//! ```text
//! û_{n+1} = e^{−λ dt} [ û_n + dt·F(b(u_n)) ] + Φ·F(σ(u_n) ΔW_n),
//! Φ_k = sqrt((1 − e^{−2λ dt}) / (2λ dt)),
//! ```
//!
//! where Φ is the root-mean-square of e^{−λs} over one step, so that the
//! additive variance is Σ_k w_k ∫₀^T e^{−2λs} ds exactly. Wave, with Ω = 2π|ξ|, C = cos Ωdt and
//! S = sin(Ωdt)/Ω, injects the forcing G = dt·b(u_n) + σ(u_n)ΔW_n into the
//! velocity:
//!
//! ```text
//! û' = C û + S v̂ + S Ĝ,     v̂' = −Ω² S û + C v̂ + C Ĝ.
//! ```
//!
//! An optional 2/3-rule mask zeroes modes with max_i |k_i| > n/3.

mod coefficients;
pub mod dump;

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

pub use coefficients::{Coefficient, Coefficients};

use crate::error::{Error, Result};
use crate::fft::FftNd;
use crate::green::{GreenFunction, Operator};
use crate::noise::{GridSpec, Lattice, NoiseBatch};
use crate::spectral_measure::{CorrelationKernel, Verdict};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct SolverOptions {
    pub dealias: bool,
}

#[derive(Debug, Clone)]
enum Propagator {
    Heat {
        decay: Vec<f64>,
        spread: Vec<f64>,
    },
    Wave {
        cos: Vec<f64>,
        sinc: Vec<f64>,
        omega_sq: Vec<f64>,
    },
}

/// Precomputed integrator for one (operator, lattice, coefficients) triple.
#[derive(Debug, Clone)]
pub struct Solver {
    green: GreenFunction,
    coeffs: Coefficients,
    lattice: Arc<Lattice>,
    options: SolverOptions,
    prop: Propagator,
    mask: Option<Vec<bool>>,
}

/// Discrete path u_0, …, u_N (and v for the wave equation).
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionPath {
    pub grid: GridSpec,
    pub u: Vec<Vec<f64>>,
    pub v: Option<Vec<Vec<f64>>>,
    pub noise_seed: u64,
}

impl SolutionPath {
    pub fn terminal(&self) -> &[f64] {
        self.u.last().expect("a path always holds u_0")
    }

    pub fn steps(&self) -> usize {
        self.u.len() - 1
    }
}

/// Scratch buffers reused across steps of one path.
pub struct Workspace {
    fft: FftNd,
    u_hat: Vec<Complex64>,
    v_hat: Vec<Complex64>,
    buf: Vec<Complex64>,
    noise: Vec<Complex64>,
}

impl Workspace {
    pub fn new(grid: &GridSpec) -> Self {
        let len = grid.n_points();
        Self {
            fft: FftNd::new(grid.n_x, grid.dim),
            u_hat: vec![Complex64::default(); len],
            v_hat: vec![Complex64::default(); len],
            buf: vec![Complex64::default(); len],
            noise: vec![Complex64::default(); len],
        }
    }

    fn reset(&mut self) {
        self.u_hat.fill(Complex64::default());
        self.v_hat.fill(Complex64::default());
    }
}

impl Solver {
    pub fn new(
        green: GreenFunction,
        kernel: CorrelationKernel,
        grid: GridSpec,
        coeffs: Coefficients,
    ) -> Result<Self> {
        if kernel.classify_dalang() != Verdict::Finite {
            return Err(Error::ConditionViolated(format!(
                "{kernel} in dimension {} does not satisfy the integrability condition on the spectral measure",
                kernel.dim()
            )));
        }
        Self::from_lattice(green, Arc::new(Lattice::new(grid, kernel)?), coeffs)
    }

    /// Shares a precomputed lattice, e.g. across an ensemble.
    pub fn from_lattice(
        green: GreenFunction,
        lattice: Arc<Lattice>,
        coeffs: Coefficients,
    ) -> Result<Self> {
        let grid = *lattice.grid();
        if green.dim() != grid.dim {
            return Err(Error::InvalidParameter(format!(
                "operator dimension {} does not match grid dimension {}",
                green.dim(),
                grid.dim
            )));
        }
        if lattice.kernel().classify_dalang() != Verdict::Finite {
            return Err(Error::ConditionViolated(format!(
                "{} fails the integrability condition on the spectral measure",
                lattice.kernel()
            )));
        }
        let dt = grid.dt;
        let rho: Vec<f64> = lattice.freq_sq().iter().map(|q| q.sqrt()).collect();
        let prop = match green.operator() {
            Operator::Heat => Propagator::Heat {
                decay: rho.iter().map(|&r| green.fourier_symbol(dt, r)).collect(),
                spread: rho
                    .iter()
                    .map(|&r| (green.symbol_sq_time_integral(dt, r) / dt).sqrt())
                    .collect(),
            },
            Operator::Wave => Propagator::Wave {
                cos: rho.iter().map(|&r| (2.0 * PI * r * dt).cos()).collect(),
                sinc: rho.iter().map(|&r| green.fourier_symbol(dt, r)).collect(),
                omega_sq: rho.iter().map(|&r| 4.0 * PI * PI * r * r).collect(),
            },
        };
        Ok(Self {
            green,
            coeffs,
            lattice,
            options: SolverOptions::default(),
            prop,
            mask: None,
        })
    }

    pub fn with_options(mut self, options: SolverOptions) -> Self {
        self.options = options;
        self.mask = options.dealias.then(|| {
            let g = self.lattice.grid();
            let cut = g.n_x as i64 / 3;
            (0..g.n_points())
                .map(|i| g.mode(i).iter().all(|k| k.abs() <= cut))
                .collect()
        });
        self
    }

    pub fn grid(&self) -> &GridSpec {
        self.lattice.grid()
    }

    pub fn green(&self) -> &GreenFunction {
        &self.green
    }

    pub fn coeffs(&self) -> &Coefficients {
        &self.coeffs
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }

    pub fn options(&self) -> SolverOptions {
        self.options
    }

    fn check_batch(&self, batch: &NoiseBatch) -> Result<()> {
        if batch.grid() != self.grid() || batch.kernel() != self.lattice.kernel() {
            return Err(Error::InvalidParameter(
                "noise batch was sampled on a different grid or kernel".into(),
            ));
        }
        Ok(())
    }

    /// Full path driven by `batch`.
    pub fn solve(&self, batch: &NoiseBatch) -> Result<SolutionPath> {
        self.check_batch(batch)?;
        let grid = *self.grid();
        let mut ws = Workspace::new(&grid);
        let wave = self.green.operator() == Operator::Wave;
        let zero = vec![0.0; grid.n_points()];
        let mut u = vec![zero.clone()];
        let mut v = wave.then(|| vec![zero.clone()]);
        for n in 0..grid.n_t {
            let (next_u, next_v) = self.advance(&mut ws, &u[n], batch.step(n), n, true)?;
            u.push(next_u);
            if let Some(v) = v.as_mut() {
                v.push(next_v.expect("wave steps return a velocity"));
            }
        }
        Ok(SolutionPath {
            grid,
            u,
            v,
            noise_seed: batch.seed(),
        })
    }

    /// u(T, ·) without storing the path or the noise; bit-identical to
    /// `solve(&NoiseBatch::from_lattice(lattice, seed))`.
    pub fn terminal_field(&self, seed: u64, ws: &mut Workspace) -> Result<Vec<f64>> {
        let grid = *self.grid();
        ws.reset();
        let mut u = vec![0.0; grid.n_points()];
        let mut inc = vec![Complex64::default(); grid.n_points()];
        for n in 0..grid.n_t {
            self.lattice.fill_step(seed, n, &mut inc);
            u = self.advance(ws, &u, &inc, n, false)?.0;
        }
        Ok(u)
    }

    /// One heat step from a physical field; the public form of the integrator.
    pub fn step_heat(&self, u: &[f64], increments: &[Complex64]) -> Result<Vec<f64>> {
        self.require(Operator::Heat)?;
        let mut ws = Workspace::new(self.grid());
        load(&mut ws.fft, u, &mut ws.u_hat);
        Ok(self.advance(&mut ws, u, increments, 0, false)?.0)
    }

    /// One wave step from a physical state (u, v).
    pub fn step_wave(
        &self,
        u: &[f64],
        v: &[f64],
        increments: &[Complex64],
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        self.require(Operator::Wave)?;
        let mut ws = Workspace::new(self.grid());
        load(&mut ws.fft, u, &mut ws.u_hat);
        load(&mut ws.fft, v, &mut ws.v_hat);
        let (u, v) = self.advance(&mut ws, u, increments, 0, true)?;
        Ok((u, v.expect("wave steps return a velocity")))
    }

    fn require(&self, op: Operator) -> Result<()> {
        if self.green.operator() != op {
            return Err(Error::InvalidParameter(format!(
                "solver is set up for {:?}, not {op:?}",
                self.green.operator()
            )));
        }
        Ok(())
    }

    /// Advances the spectral state in `ws` by one step; `u` is its physical image.
    fn advance(
        &self,
        ws: &mut Workspace,
        u: &[f64],
        increments: &[Complex64],
        step: usize,
        want_velocity: bool,
    ) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
        let dt = self.grid().dt;
        let npts = u.len() as f64;
        let Workspace {
            fft,
            u_hat,
            v_hat,
            buf,
            noise,
        } = ws;
        let sigma = self.coeffs.sigma;
        let b = self.coeffs.b;

        // F(σ(u) ΔW) into `noise`.
        match sigma.as_constant() {
            Some(0.0) => noise.fill(Complex64::default()),
            Some(c) => {
                // F(c·IFFT(Ŵ)) = c·N·Ŵ for the unnormalized pair.
                for (o, w) in noise.iter_mut().zip(increments) {
                    *o = w * (c * npts);
                }
            }
            None => {
                noise.copy_from_slice(increments);
                fft.inverse(noise);
                for (o, &z) in noise.iter_mut().zip(u) {
                    *o = Complex64::new(sigma.value(z) * o.re, 0.0);
                }
                fft.forward(noise);
            }
        }
        // dt·F(b(u)) into `buf`.
        let drift = !b.is_zero();
        if drift {
            for (o, &z) in buf.iter_mut().zip(u) {
                *o = Complex64::new(dt * b.value(z), 0.0);
            }
            fft.forward(buf);
        }

        match &self.prop {
            Propagator::Heat { decay, spread } => {
                for k in 0..u_hat.len() {
                    let mut x = u_hat[k];
                    if drift {
                        x += buf[k];
                    }
                    u_hat[k] = x * decay[k] + noise[k] * spread[k];
                }
            }
            Propagator::Wave {
                cos,
                sinc,
                omega_sq,
            } => {
                for k in 0..u_hat.len() {
                    let mut g = noise[k];
                    if drift {
                        g += buf[k];
                    }
                    let (c, s) = (cos[k], sinc[k]);
                    let uk = u_hat[k];
                    let vk = v_hat[k];
                    u_hat[k] = uk * c + (vk + g) * s;
                    v_hat[k] = (vk + g) * c - uk * (omega_sq[k] * s);
                }
            }
        }
        if let Some(mask) = &self.mask {
            for ((uk, vk), &keep) in u_hat.iter_mut().zip(v_hat.iter_mut()).zip(mask) {
                if !keep {
                    *uk = Complex64::default();
                    *vk = Complex64::default();
                }
            }
        }

        let next_u = unload(fft, u_hat, buf, step + 1)?;
        let next_v = if want_velocity && matches!(self.prop, Propagator::Wave { .. }) {
            Some(unload(fft, v_hat, buf, step + 1)?)
        } else {
            None
        };
        Ok((next_u, next_v))
    }
}

fn load(fft: &mut FftNd, field: &[f64], out: &mut [Complex64]) {
    for (o, &x) in out.iter_mut().zip(field) {
        *o = Complex64::new(x, 0.0);
    }
    fft.forward(out);
}

fn unload(
    fft: &mut FftNd,
    spectrum: &[Complex64],
    buf: &mut [Complex64],
    step: usize,
) -> Result<Vec<f64>> {
    buf.copy_from_slice(spectrum);
    fft.inverse(buf);
    let scale = 1.0 / buf.len() as f64;
    let mut out = Vec::with_capacity(buf.len());
    for c in buf.iter() {
        let x = c.re * scale;
        if !x.is_finite() {
            return Err(Error::NumericalBlowup { step });
        }
        out.push(x);
    }
    Ok(out)
}

/// Path from zero initial data driven by a fresh batch with seed `seed`.
pub fn solve(
    grid: GridSpec,
    green: GreenFunction,
    kernel: CorrelationKernel,
    coeffs: Coefficients,
    seed: u64,
) -> Result<SolutionPath> {
    let solver = Solver::new(green, kernel, grid, coeffs)?;
    let batch = NoiseBatch::from_lattice(Arc::clone(solver.lattice()), seed);
    solver.solve(&batch)
}

/// Σ_k w_k ∫₀^δ |FΓ(s)(ξ_k)|² ds: g(δ) with μ replaced by its lattice cell masses.
pub fn g_disc(lattice: &Lattice, green: &GreenFunction, delta: f64) -> f64 {
    lattice
        .weights()
        .iter()
        .zip(lattice.freq_sq())
        .map(|(w, q)| w * green.symbol_sq_time_integral(delta, q.sqrt()))
        .sum()
}
