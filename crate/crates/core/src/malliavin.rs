//! First Malliavin derivative of the discrete solution and the Malliavin matrix.
//!
//! The noise increment ΔW_r(y) at grid point y is W(1_{[t_r, t_{r+1})} ⊗ δ_y / v)
//! with v the cell volume, so D_{r,y_H} u = ∂u/∂ΔW_r(y_H) / v as a function of
//! the H-argument y_H. Differentiating the integrator gives the linear scheme
//!
//! ```text
//! heat: D̂_{r+1} = Φ·Î,   D̂_{s+1} = e^{−λdt}[D̂_s + dt·F(b′(u_s) D_s)] + Φ·F(σ′(u_s) ΔW_s D_s)
//! wave: impulse Î enters the velocity like the forcing, G_s = F((dt·b′(u_s) + σ′(u_s) ΔW_s) D_s)
//! ```
//!
//! with Î(k) = σ(u_r(y_H)) e^{−2πi ξ_k·y_H} / v, the lattice Dirac at y_H scaled
//! by σ. It is the exact derivative of the discrete scheme, so finite
//! differences in a noise mode agree with it to O(ε²). When σ′ ≡ 0 and b′ ≡ 0
//! the propagation is deterministic and collapses to one spectral multiplier.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fft::FftNd;
use crate::green::Operator;
use crate::noise::NoiseBatch;
use crate::solver::{SolutionPath, Solver};

pub use crate::solver::g_disc;

/// σ(u(r, y_H))·δ_{y_H} in Fourier form.
#[derive(Debug, Clone)]
pub struct Impulse {
    pub amplitude: f64,
    pub y_h: usize,
    pub spectrum: Vec<Complex64>,
}

/// D_{r, y_H} u(s, y_eval) for all grid pairs; `values[y_eval * n + y_H]`.
#[derive(Debug, Clone)]
pub struct FirstVariationField {
    pub r_index: usize,
    pub s_index: usize,
    pub n_points: usize,
    pub values: Vec<f64>,
}

impl FirstVariationField {
    pub fn value(&self, y_eval: usize, y_h: usize) -> f64 {
        self.values[y_eval * self.n_points + y_h]
    }

    /// y_H ↦ D_{r, y_H} u(s, y_eval).
    pub fn row(&self, y_eval: usize) -> &[f64] {
        &self.values[y_eval * self.n_points..(y_eval + 1) * self.n_points]
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MalliavinSample {
    pub gamma: f64,
    pub per_r_norms: Vec<f64>,
    pub r_indices: Vec<usize>,
    pub delta_r: f64,
    pub path_seed: u64,
}

fn check_inputs(path: &SolutionPath, batch: &NoiseBatch, solver: &Solver, r: usize) -> Result<()> {
    if path.noise_seed != batch.seed() {
        return Err(Error::SeedMismatch {
            path: path.noise_seed,
            batch: batch.seed(),
        });
    }
    if &path.grid != solver.grid() || batch.grid() != solver.grid() {
        return Err(Error::InvalidParameter(
            "path, batch and solver grids differ".into(),
        ));
    }
    if r >= path.grid.n_t {
        return Err(Error::InvalidParameter(format!(
            "derivative time index {r} outside [0, {})",
            path.grid.n_t
        )));
    }
    Ok(())
}

/// Fourier form of σ(u(r_j, y_H))·δ_{y_H} with δ the unit-mass lattice Dirac.
pub fn derivative_initial(
    path: &SolutionPath,
    solver: &Solver,
    r: usize,
    y_h: usize,
) -> Result<Impulse> {
    if r > path.steps() {
        return Err(Error::InvalidParameter(format!(
            "time index {r} beyond path end {}",
            path.steps()
        )));
    }
    let grid = &path.grid;
    let amplitude = solver.coeffs().sigma.value(path.u[r][y_h]);
    let scale = amplitude / grid.cell_volume();
    let y = grid.digits(y_h);
    let n = grid.n_x as f64;
    let spectrum = (0..grid.n_points())
        .map(|k| {
            let phase: f64 = grid
                .mode(k)
                .iter()
                .zip(&y)
                .map(|(&m, &j)| m as f64 * j as f64)
                .sum();
            Complex64::from_polar(scale, -2.0 * PI * phase / n)
        })
        .collect();
    Ok(Impulse {
        amplitude,
        y_h,
        spectrum,
    })
}

/// Spectral multipliers of the integrator, read off the solver.
struct Linear {
    heat: bool,
    decay: Vec<f64>,
    spread: Vec<f64>,
    cos: Vec<f64>,
    sinc: Vec<f64>,
    omega_sq: Vec<f64>,
    rho: Vec<f64>,
}

impl Linear {
    fn new(solver: &Solver) -> Self {
        let green = solver.green();
        let dt = solver.grid().dt;
        let rho: Vec<f64> = solver
            .lattice()
            .freq_sq()
            .iter()
            .map(|q| q.sqrt())
            .collect();
        let heat = green.operator() == Operator::Heat;
        let map = |f: &dyn Fn(f64) -> f64| rho.iter().map(|&r| f(r)).collect::<Vec<f64>>();
        Self {
            heat,
            decay: map(&|r| green.fourier_symbol(dt, r)),
            spread: map(&|r| (green.symbol_sq_time_integral(dt, r) / dt).sqrt()),
            cos: map(&|r| (2.0 * PI * r * dt).cos()),
            sinc: map(&|r| green.fourier_symbol(dt, r)),
            omega_sq: map(&|r| 4.0 * PI * PI * r * r),
            rho: rho.clone(),
        }
    }
}

struct Scratch {
    fft: FftNd,
    phys: Vec<Complex64>,
    noise: Vec<Complex64>,
    drift: Vec<Complex64>,
    incs: Vec<Vec<f64>>,
}

/// Evolves every impulse to the final time and hands each final spectrum
/// (u-component) to `sink`.
fn propagate<F: FnMut(usize, &[Complex64], &mut FftNd)>(
    path: &SolutionPath,
    batch: &NoiseBatch,
    solver: &Solver,
    r: usize,
    mut sink: F,
) -> Result<()> {
    let grid = *solver.grid();
    let n_pts = grid.n_points();
    let n_t = grid.n_t;
    let lin = Linear::new(solver);
    let sigma = solver.coeffs().sigma;
    let b = solver.coeffs().b;
    let deterministic = sigma.as_constant().is_some() && b.as_constant().is_some();
    let mut fft = FftNd::new(grid.n_x, grid.dim);

    if deterministic {
        // u-component multiplier from the injection at r to time N.
        let m = (n_t - 1 - r) as f64;
        let green = solver.green();
        let factor: Vec<f64> = (0..n_pts)
            .map(|k| {
                if lin.heat {
                    green.fourier_symbol(m * grid.dt, lin.rho[k]) * lin.spread[k]
                } else {
                    green.fourier_symbol((m + 1.0) * grid.dt, lin.rho[k])
                }
            })
            .collect();
        let mut d = vec![Complex64::default(); n_pts];
        for y in 0..n_pts {
            let imp = derivative_initial(path, solver, r, y)?;
            for ((o, i), f) in d.iter_mut().zip(&imp.spectrum).zip(&factor) {
                *o = i * f;
            }
            sink(y, &d, &mut fft);
        }
        return Ok(());
    }

    let mut sc = Scratch {
        fft: FftNd::new(grid.n_x, grid.dim),
        phys: vec![Complex64::default(); n_pts],
        noise: vec![Complex64::default(); n_pts],
        drift: vec![Complex64::default(); n_pts],
        incs: Vec::with_capacity(n_t - r),
    };
    // Physical increment fields ΔW_s for s > r, shared by all impulses.
    for s in r + 1..n_t {
        sc.phys.copy_from_slice(batch.step(s));
        sc.fft.inverse(&mut sc.phys);
        sc.incs.push(sc.phys.iter().map(|c| c.re).collect());
    }
    let inv_n = 1.0 / n_pts as f64;
    let mut du = vec![Complex64::default(); n_pts];
    let mut dv = vec![Complex64::default(); n_pts];
    for y in 0..n_pts {
        let imp = derivative_initial(path, solver, r, y)?;
        for k in 0..n_pts {
            if lin.heat {
                du[k] = imp.spectrum[k] * lin.spread[k];
            } else {
                du[k] = imp.spectrum[k] * lin.sinc[k];
                dv[k] = imp.spectrum[k] * lin.cos[k];
            }
        }
        for s in r + 1..n_t {
            let u_s = &path.u[s];
            let inc = &sc.incs[s - r - 1];
            sc.phys.copy_from_slice(&du);
            sc.fft.inverse(&mut sc.phys);
            // Physical D_s, scaled back to the normalized inverse.
            for (j, p) in sc.phys.iter().enumerate() {
                let d = p.re * inv_n;
                let z = u_s[j];
                sc.noise[j] = Complex64::new(sigma.derivative(z) * inc[j] * d, 0.0);
                sc.drift[j] = Complex64::new(grid.dt * b.derivative(z) * d, 0.0);
            }
            sc.fft.forward(&mut sc.noise);
            sc.fft.forward(&mut sc.drift);
            for k in 0..n_pts {
                if lin.heat {
                    du[k] = (du[k] + sc.drift[k]) * lin.decay[k] + sc.noise[k] * lin.spread[k];
                } else {
                    let g = sc.noise[k] + sc.drift[k];
                    let (c, sn) = (lin.cos[k], lin.sinc[k]);
                    let (uk, vk) = (du[k], dv[k]);
                    du[k] = uk * c + (vk + g) * sn;
                    dv[k] = (vk + g) * c - uk * (lin.omega_sq[k] * sn);
                }
            }
        }
        if du.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NumericalBlowup { step: n_t });
        }
        sink(y, &du, &mut sc.fft);
    }
    Ok(())
}

/// D_{r_j, y_H} u(T, y_eval) over all grid pairs, driven by the path's own noise.
pub fn first_variation(
    path: &SolutionPath,
    batch: &NoiseBatch,
    solver: &Solver,
    r: usize,
) -> Result<FirstVariationField> {
    check_inputs(path, batch, solver, r)?;
    let n_pts = solver.grid().n_points();
    let mut values = vec![0.0; n_pts * n_pts];
    let mut buf = vec![Complex64::default(); n_pts];
    let inv_n = 1.0 / n_pts as f64;
    propagate(path, batch, solver, r, |y, spec, fft| {
        buf.copy_from_slice(spec);
        fft.inverse(&mut buf);
        for (e, c) in buf.iter().enumerate() {
            values[e * n_pts + y] = c.re * inv_n;
        }
    })?;
    Ok(FirstVariationField {
        r_index: r,
        s_index: solver.grid().n_t,
        n_points: n_pts,
        values,
    })
}

/// y_H ↦ D_{r, y_H} u(T, x) at one evaluation point.
fn derivative_at(
    path: &SolutionPath,
    batch: &NoiseBatch,
    solver: &Solver,
    r: usize,
    x: usize,
) -> Result<Vec<f64>> {
    check_inputs(path, batch, solver, r)?;
    let grid = solver.grid();
    let n_pts = grid.n_points();
    let xd = grid.digits(x);
    let n = grid.n_x as f64;
    let phases: Vec<Complex64> = (0..n_pts)
        .map(|k| {
            let p: f64 = grid
                .mode(k)
                .iter()
                .zip(&xd)
                .map(|(&m, &j)| m as f64 * j as f64)
                .sum();
            Complex64::from_polar(1.0 / n_pts as f64, 2.0 * PI * p / n)
        })
        .collect();
    let mut out = vec![0.0; n_pts];
    propagate(path, batch, solver, r, |y, spec, _| {
        out[y] = spec.iter().zip(&phases).map(|(s, p)| (s * p).re).sum();
    })?;
    Ok(out)
}

/// Equally spaced r-subgrid {0, stride, 2·stride, …} below n_t.
pub fn r_subgrid(n_t: usize, stride: usize) -> Vec<usize> {
    (0..n_t).step_by(stride.max(1)).collect()
}

/// γ = Σ_j Δr ‖y_H ↦ D_{r_j, y_H} u(T, x_target)‖²_H.
pub fn malliavin_matrix(
    path: &SolutionPath,
    batch: &NoiseBatch,
    solver: &Solver,
    x_target: usize,
    r_indices: &[usize],
) -> Result<MalliavinSample> {
    let delta_r = subgrid_spacing(r_indices)? as f64 * solver.grid().dt;
    let lattice = solver.lattice();
    let per_r_norms = r_indices
        .iter()
        .map(|&r| {
            derivative_at(path, batch, solver, r, x_target).map(|psi| lattice.h_norm_sq(&psi))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(MalliavinSample {
        gamma: delta_r * per_r_norms.iter().sum::<f64>(),
        per_r_norms,
        r_indices: r_indices.to_vec(),
        delta_r,
        path_seed: path.noise_seed,
    })
}

fn subgrid_spacing(r: &[usize]) -> Result<usize> {
    let bad = |m: &str| Err(Error::InvalidParameter(format!("r-subgrid {m}")));
    match r {
        [] => bad("is empty"),
        [_] => Ok(1),
        [a, b, ..] => {
            if b <= a {
                return bad("must be increasing");
            }
            let step = b - a;
            if r.windows(2).any(|w| w[1] != w[0] + step) {
                return bad("must be equally spaced");
            }
            Ok(step)
        }
    }
}

/// Simulates path `i` with seed `derive_seed(master, i)` and its γ.
pub fn malliavin_ensemble(
    solver: &Solver,
    master_seed: u64,
    paths: usize,
    x_target: usize,
    r_indices: &[usize],
) -> Result<Vec<MalliavinSample>> {
    let lattice = Arc::clone(solver.lattice());
    (0..paths as u64)
        .into_par_iter()
        .map(|i| {
            let batch = NoiseBatch::from_lattice(
                Arc::clone(&lattice),
                crate::rng::derive_seed(master_seed, i),
            );
            let path = solver.solve(&batch)?;
            malliavin_matrix(&path, &batch, solver, x_target, r_indices)
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct SmallBallReport {
    pub eps: Vec<f64>,
    pub probabilities: Vec<f64>,
    /// Log-log slope of P(γ < ε) over the ε with 0 < P < 1, if at least two.
    pub fitted_exponent: Option<f64>,
    pub samples: usize,
    pub min_gamma: f64,
    pub prediction: String,
}

/// Empirical P(γ < ε) over the ε grid.
pub fn small_ball_curve(gammas: &[f64], eps_grid: &[f64]) -> Result<SmallBallReport> {
    if gammas.len() < 100 {
        return Err(Error::InvalidParameter(format!(
            "small-ball curve needs at least 100 samples, got {}",
            gammas.len()
        )));
    }
    if eps_grid.is_empty()
        || eps_grid.iter().any(|&e| !(e > 0.0))
        || eps_grid.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(Error::InvalidParameter(
            "eps grid must be positive and increasing".into(),
        ));
    }
    let m = gammas.len() as f64;
    let probabilities: Vec<f64> = eps_grid
        .iter()
        .map(|&e| gammas.iter().filter(|&&g| g < e).count() as f64 / m)
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = eps_grid
        .iter()
        .zip(&probabilities)
        .filter(|(_, &p)| p > 0.0 && p < 1.0)
        .map(|(e, p)| (e.ln(), p.ln()))
        .unzip();
    let fitted_exponent = (xs.len() >= 2).then(|| crate::green::least_squares(&xs, &ys).0);
    Ok(SmallBallReport {
        eps: eps_grid.to_vec(),
        probabilities,
        fitted_exponent,
        samples: gammas.len(),
        min_gamma: gammas.iter().cloned().fold(f64::INFINITY, f64::min),
        prediction: "when |sigma| >= c > 0 the density of u(t,x) is smooth, so P(gamma < eps) <= C_q eps^q for every q; \
                     a finite sample can only show the lower tail is empty or steep"
            .into(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct WindowReport {
    pub window_steps: Vec<usize>,
    pub deltas: Vec<f64>,
    /// sup_y Σ_{r in window} Δr ‖D_{r,·} u(T, y)‖²_H.
    pub sums: Vec<f64>,
    pub g_disc: Vec<f64>,
    pub ratios: Vec<f64>,
    pub fitted_constant: f64,
}

/// Windowed derivative norms over the last δ = steps·dt before T against g_disc(δ).
pub fn window_bound(
    path: &SolutionPath,
    batch: &NoiseBatch,
    solver: &Solver,
    window_steps: &[usize],
) -> Result<WindowReport> {
    let grid = *solver.grid();
    let longest = window_steps.iter().copied().max().unwrap_or(0);
    if longest == 0 || longest > grid.n_t {
        return Err(Error::InvalidParameter(format!(
            "window lengths must lie in [1, {}]",
            grid.n_t
        )));
    }
    let lattice = solver.lattice();
    let n_pts = grid.n_points();
    // norms[j][y] = ‖D_{N−1−j, ·} u(T, y)‖²_H.
    let norms: Vec<Vec<f64>> = (0..longest)
        .into_par_iter()
        .map(|j| {
            let r = grid.n_t - 1 - j;
            let field = first_variation(path, batch, solver, r)?;
            Ok((0..n_pts)
                .map(|y| lattice.h_norm_sq(field.row(y)))
                .collect())
        })
        .collect::<Result<_>>()?;
    let mut report = WindowReport {
        window_steps: window_steps.to_vec(),
        deltas: Vec::new(),
        sums: Vec::new(),
        g_disc: Vec::new(),
        ratios: Vec::new(),
        fitted_constant: 0.0,
    };
    for &w in window_steps {
        let delta = w as f64 * grid.dt;
        let sup = (0..n_pts)
            .map(|y| grid.dt * norms[..w].iter().map(|row| row[y]).sum::<f64>())
            .fold(0.0, f64::max);
        let g = g_disc(lattice, solver.green(), delta);
        report.deltas.push(delta);
        report.sums.push(sup);
        report.g_disc.push(g);
        report.ratios.push(sup / g);
    }
    report.fitted_constant = report.ratios.iter().cloned().fold(0.0, f64::max);
    Ok(report)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DirectionalCheck {
    pub finite_difference: f64,
    pub first_variation: f64,
    pub relative_error: f64,
}

/// Perturbs Ŵ_step(mode) and its conjugate partner by ±ε and compares the
/// central difference of u(T, x_target) with the first-variation pairing.
pub fn directional_derivative_check(
    solver: &Solver,
    seed: u64,
    step: usize,
    mode: usize,
    x_target: usize,
    eps: f64,
) -> Result<DirectionalCheck> {
    let grid = *solver.grid();
    let lattice = Arc::clone(solver.lattice());
    let batch = NoiseBatch::from_lattice(Arc::clone(&lattice), seed);
    let partner = grid.partner(mode);
    let shifted = |sign: f64| -> Result<f64> {
        let mut b = batch.clone();
        let inc = b.step_mut(step);
        inc[mode] += sign * eps;
        if partner != mode {
            inc[partner] += sign * eps;
        }
        Ok(solver.solve(&b)?.terminal()[x_target])
    };
    let fd = (shifted(1.0)? - shifted(-1.0)?) / (2.0 * eps);

    let path = solver.solve(&batch)?;
    let psi = derivative_at(&path, &batch, solver, step, x_target)?;
    // δΔW(y)/ε = e^{2πiξ·y} + e^{−2πiξ·y}, or the single real exponential when k = −k.
    let k = grid.mode(mode);
    let n = grid.n_x as f64;
    let pairing: f64 = (0..grid.n_points())
        .map(|y| {
            let p: f64 = k
                .iter()
                .zip(grid.digits(y))
                .map(|(&m, j)| m as f64 * j as f64)
                .sum();
            let c = (2.0 * PI * p / n).cos();
            let dir = if partner == mode { c } else { 2.0 * c };
            psi[y] * dir
        })
        .sum::<f64>()
        * grid.cell_volume();
    Ok(DirectionalCheck {
        finite_difference: fd,
        first_variation: pairing,
        relative_error: (fd - pairing).abs() / pairing.abs().max(f64::MIN_POSITIVE),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::green::GreenFunction;
    use crate::noise::GridSpec;
    use crate::solver::{Coefficient, Coefficients};
    use crate::spectral_measure::CorrelationKernel;
    use approx::assert_relative_eq;

    fn setup(
        green: GreenFunction,
        coeffs: Coefficients,
        n_x: usize,
        n_t: usize,
    ) -> (Solver, NoiseBatch, SolutionPath) {
        let grid = GridSpec::with_horizon(1, 4.0, n_x, 0.25, n_t).unwrap();
        let solver = Solver::new(
            green,
            CorrelationKernel::riesz(0.5, 1).unwrap(),
            grid,
            coeffs,
        )
        .unwrap();
        let batch = NoiseBatch::from_lattice(Arc::clone(solver.lattice()), 12);
        let path = solver.solve(&batch).unwrap();
        (solver, batch, path)
    }

    fn smooth() -> Coefficients {
        Coefficients::new(
            Coefficient::SinBounded { a: 1.0, b: 0.5 },
            Coefficient::SinBounded { a: 0.0, b: 0.7 },
        )
        .unwrap()
    }

    #[test]
    fn impulse_amplitude_is_sigma() {
        let (solver, _, path) = setup(GreenFunction::heat(1), smooth(), 16, 8);
        let imp = derivative_initial(&path, &solver, 3, 5).unwrap();
        assert_eq!(imp.amplitude, 1.0 + 0.5 * path.u[3][5].sin());
        let v = solver.grid().cell_volume();
        for c in &imp.spectrum {
            assert_relative_eq!(c.norm() * v, imp.amplitude.abs(), max_relative = 1e-14);
        }
        let (solver0, _, path0) = setup(GreenFunction::heat(1), Coefficients::zero(), 16, 8);
        let zero = derivative_initial(&path0, &solver0, 3, 5).unwrap();
        assert!(zero.spectrum.iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn semigroup_step_of_the_impulse_is_the_periodized_heat_kernel() {
        let grid = GridSpec::new(1, 1.0, 32, 0.01, 4).unwrap();
        let solver = Solver::new(
            GreenFunction::heat(1),
            CorrelationKernel::white_noise(1),
            grid,
            Coefficients::additive(2.0),
        )
        .unwrap();
        let batch = NoiseBatch::from_lattice(Arc::clone(solver.lattice()), 0);
        let path = solver.solve(&batch).unwrap();
        let y = 7;
        let imp = derivative_initial(&path, &solver, 1, y).unwrap();
        let mut spec: Vec<Complex64> = imp
            .spectrum
            .iter()
            .zip(solver.lattice().freq_sq())
            .map(|(c, q)| c * (-4.0 * PI * PI * grid.dt * q).exp())
            .collect();
        let mut fft = FftNd::new(32, 1);
        fft.inverse(&mut spec);
        let t = grid.dt;
        for (x, c) in spec.iter().enumerate() {
            let dx = (x as f64 - y as f64) * grid.spacing();
            let kernel: f64 = (-20..=20)
                .map(|m| {
                    let z = dx + m as f64;
                    (-z * z / (4.0 * t)).exp() / (4.0 * PI * t).sqrt()
                })
                .sum();
            assert!((c.re / 32.0 - 2.0 * kernel).abs() < 1e-8, "x={x}");
        }
    }

    #[test]
    fn constant_sigma_gamma_is_c_squared_lattice_g() {
        let (solver, batch, path) =
            setup(GreenFunction::heat(1), Coefficients::additive(2.0), 32, 32);
        let rs = r_subgrid(32, 1);
        let s = malliavin_matrix(&path, &batch, &solver, 9, &rs).unwrap();
        let g = g_disc(solver.lattice(), solver.green(), 0.25);
        assert_relative_eq!(s.gamma, 4.0 * g, max_relative = 1e-10);
        assert_eq!(s.per_r_norms.len(), 32);
    }

    #[test]
    fn constant_sigma_first_variation_is_the_propagated_impulse() {
        // The deterministic collapse and the step-by-step scheme must agree.
        let (solver, batch, path) =
            setup(GreenFunction::heat(1), Coefficients::additive(1.5), 16, 8);
        let f = first_variation(&path, &batch, &solver, 2).unwrap();
        // Row at y_eval is c·Σ_k decay^{m}Φ e^{2πiξ(y_e − y_H)} / L, symmetric in (y_e, y_H).
        for e in 0..16 {
            for h in 0..16 {
                assert_relative_eq!(
                    f.value(e, h),
                    f.value(h, e),
                    max_relative = 1e-10,
                    epsilon = 1e-14
                );
                assert_relative_eq!(
                    f.value(e, h),
                    f.value((e + 3) % 16, (h + 3) % 16),
                    max_relative = 1e-10,
                    epsilon = 1e-14
                );
            }
        }
    }

    #[test]
    fn zero_coefficient_derivative_vanishes() {
        let c =
            Coefficients::new(Coefficient::Affine { a: 0.0, b: 1.0 }, Coefficient::Zero).unwrap();
        let (solver, batch, path) = setup(GreenFunction::heat(1), c, 16, 8);
        assert!(path.u.iter().flatten().all(|&x| x == 0.0));
        let f = first_variation(&path, &batch, &solver, 1).unwrap();
        assert!(f.values.iter().all(|&x| x == 0.0));
        let s = malliavin_matrix(&path, &batch, &solver, 0, &r_subgrid(8, 2)).unwrap();
        assert_eq!(s.gamma, 0.0);
    }

    #[test]
    fn seed_mismatch_is_rejected() {
        let (solver, _, path) = setup(GreenFunction::heat(1), smooth(), 16, 8);
        let other = NoiseBatch::from_lattice(Arc::clone(solver.lattice()), 13);
        assert!(matches!(
            first_variation(&path, &other, &solver, 0),
            Err(Error::SeedMismatch {
                path: 12,
                batch: 13
            })
        ));
    }

    #[test]
    fn derivative_is_linear_in_the_impulse_amplitude() {
        let c1 = Coefficients::new(Coefficient::Constant { c: 1.0 }, Coefficient::Zero).unwrap();
        let c3 = Coefficients::new(Coefficient::Constant { c: 3.0 }, Coefficient::Zero).unwrap();
        let grid = GridSpec::with_horizon(1, 4.0, 16, 0.25, 8).unwrap();
        let k = CorrelationKernel::riesz(0.5, 1).unwrap();
        let s1 = Solver::new(GreenFunction::heat(1), k, grid, c1).unwrap();
        let s3 = Solver::new(GreenFunction::heat(1), k, grid, c3).unwrap();
        let batch = NoiseBatch::from_lattice(Arc::clone(s1.lattice()), 1);
        let f1 = first_variation(&s1.solve(&batch).unwrap(), &batch, &s1, 2).unwrap();
        let b3 = NoiseBatch::from_lattice(Arc::clone(s3.lattice()), 1);
        let f3 = first_variation(&s3.solve(&b3).unwrap(), &b3, &s3, 2).unwrap();
        for (a, b) in f1.values.iter().zip(&f3.values) {
            assert_relative_eq!(3.0 * a, *b, max_relative = 1e-12, epsilon = 1e-300);
        }
    }

    #[test]
    fn finite_differences_match_first_variation_heat_and_wave() {
        let grid = GridSpec::with_horizon(1, 4.0, 16, 0.5, 16).unwrap();
        let k = CorrelationKernel::riesz(0.5, 1).unwrap();
        for green in [GreenFunction::heat(1), GreenFunction::wave(1).unwrap()] {
            let solver = Solver::new(green, k, grid, smooth()).unwrap();
            for (step, mode) in [(0, 1), (5, 3), (11, 0), (3, 8)] {
                let c = directional_derivative_check(&solver, 4, step, mode, 6, 1e-5).unwrap();
                assert!(
                    c.relative_error < 1e-3,
                    "{green:?} step {step} mode {mode}: {c:?}"
                );
            }
        }
    }

    #[test]
    fn positivity_under_a_lower_bound() {
        let grid = GridSpec::with_horizon(1, 4.0, 16, 0.25, 16).unwrap();
        let solver = Solver::new(
            GreenFunction::heat(1),
            CorrelationKernel::riesz(0.5, 1).unwrap(),
            grid,
            smooth(),
        )
        .unwrap();
        let samples = malliavin_ensemble(&solver, 3, 20, 4, &r_subgrid(16, 4)).unwrap();
        let floor = 0.25 * g_disc(solver.lattice(), solver.green(), 0.25);
        for s in &samples {
            assert!(s.gamma > floor / 2.0);
            assert_relative_eq!(
                s.gamma,
                s.delta_r * s.per_r_norms.iter().sum::<f64>(),
                max_relative = 1e-14
            );
        }
    }

    #[test]
    fn subgrid_refinement_converges() {
        let (solver, batch, path) = setup(GreenFunction::heat(1), smooth(), 16, 32);
        let coarse = malliavin_matrix(&path, &batch, &solver, 3, &r_subgrid(32, 4))
            .unwrap()
            .gamma;
        let fine = malliavin_matrix(&path, &batch, &solver, 3, &r_subgrid(32, 1))
            .unwrap()
            .gamma;
        let mid = malliavin_matrix(&path, &batch, &solver, 3, &r_subgrid(32, 2))
            .unwrap()
            .gamma;
        // Left Riemann sums of a random integrand: not monotone, but close.
        assert!((mid - fine).abs() < 0.03 * fine, "mid {mid} fine {fine}");
        assert!(
            (coarse - fine).abs() < 0.03 * fine,
            "coarse {coarse} fine {fine}"
        );
    }

    #[test]
    fn subgrid_must_be_equally_spaced() {
        let (solver, batch, path) = setup(GreenFunction::heat(1), smooth(), 16, 8);
        assert!(malliavin_matrix(&path, &batch, &solver, 0, &[0, 2, 3]).is_err());
        assert!(malliavin_matrix(&path, &batch, &solver, 0, &[]).is_err());
        assert!(malliavin_matrix(&path, &batch, &solver, 0, &[8]).is_err());
    }

    #[test]
    fn small_ball_curve_of_a_constant_is_a_step() {
        let gammas = vec![0.3; 150];
        let r = small_ball_curve(&gammas, &[0.1, 0.29, 0.31, 1.0]).unwrap();
        assert_eq!(r.probabilities, vec![0.0, 0.0, 1.0, 1.0]);
        assert!(r.fitted_exponent.is_none());
        assert!(small_ball_curve(&gammas[..50], &[0.1]).is_err());
        assert!(small_ball_curve(&gammas, &[0.2, 0.1]).is_err());
    }

    #[test]
    fn small_ball_slope_of_a_uniform_sample_is_one() {
        let gammas: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        let r = small_ball_curve(&gammas, &[0.01, 0.03, 0.1, 0.3]).unwrap();
        assert_relative_eq!(r.fitted_exponent.unwrap(), 1.0, max_relative = 0.02);
    }

    #[test]
    fn window_norms_are_bounded_by_lattice_g() {
        let c = Coefficients::additive(1.0);
        let (solver, batch, path) = setup(GreenFunction::heat(1), c, 16, 16);
        let rep = window_bound(&path, &batch, &solver, &[1, 2, 4, 8]).unwrap();
        // With σ ≡ 1 each windowed sum equals g_disc(δ) at every point.
        for r in &rep.ratios {
            assert_relative_eq!(*r, 1.0, max_relative = 1e-10);
        }
        let (solver, batch, path) = setup(GreenFunction::heat(1), smooth(), 16, 16);
        let rep = window_bound(&path, &batch, &solver, &[1, 2, 4, 8]).unwrap();
        assert!(rep.fitted_constant.is_finite() && rep.fitted_constant < 4.0);
    }
}
