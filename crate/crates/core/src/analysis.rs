//! Monte Carlo statistics of u(T, x_target): ensembles, moments, kernel
//! density estimates, a Kolmogorov–Smirnov Gaussianity check and the
//! L^p moment-bound audit.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::derive_seed;
use crate::solver::{Solver, Workspace};

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Moment {
    pub p: u32,
    /// Sample mean of |u|^p.
    pub value: f64,
    pub standard_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathFailure {
    pub index: usize,
    pub step: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnsembleSummary {
    /// u(T, x_target) for each successful path, in path-index order.
    pub samples: Vec<f64>,
    pub moments: Vec<Moment>,
    pub seed_base: u64,
    pub failures: Vec<PathFailure>,
}

pub fn moment(samples: &[f64], p: u32) -> Moment {
    let m = samples.len() as f64;
    let powers: Vec<f64> = samples.iter().map(|x| x.abs().powi(p as i32)).collect();
    let value = powers.iter().sum::<f64>() / m;
    let var = if samples.len() > 1 {
        powers.iter().map(|x| (x - value).powi(2)).sum::<f64>() / (m - 1.0)
    } else {
        0.0
    };
    Moment {
        p,
        value,
        standard_error: (var / m).sqrt(),
    }
}

/// M paths with seeds `derive_seed(master_seed, i)`; fails if more than 1%
/// of them blow up. Blown-up paths are listed and left out of `samples`.
pub fn run_ensemble(
    solver: &Solver,
    x_target: usize,
    paths: usize,
    master_seed: u64,
) -> Result<EnsembleSummary> {
    if paths == 0 {
        return Err(Error::InvalidParameter(
            "ensemble needs at least one path".into(),
        ));
    }
    if x_target >= solver.grid().n_points() {
        return Err(Error::InvalidParameter(format!(
            "target index {x_target} outside the grid"
        )));
    }
    let grid = *solver.grid();
    let results: Vec<Result<f64>> = (0..paths)
        .into_par_iter()
        .map_init(
            || Workspace::new(&grid),
            |ws, i| {
                solver
                    .terminal_field(derive_seed(master_seed, i as u64), ws)
                    .map(|u| u[x_target])
            },
        )
        .collect();
    let mut samples = Vec::with_capacity(paths);
    let mut failures = Vec::new();
    for (index, r) in results.into_iter().enumerate() {
        match r {
            Ok(x) => samples.push(x),
            Err(Error::NumericalBlowup { step }) => failures.push(PathFailure { index, step }),
            Err(other) => return Err(other),
        }
    }
    if failures.len() * 100 > paths {
        return Err(Error::EnsembleFailed {
            failed: failures.len(),
            total: paths,
        });
    }
    let moments = vec![moment(&samples, 2), moment(&samples, 4)];
    Ok(EnsembleSummary {
        samples,
        moments,
        seed_base: master_seed,
        failures,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase", tag = "rule", content = "h")]
pub enum Bandwidth {
    Silverman,
    Fixed(f64),
}

#[derive(Debug, Clone, Serialize)]
pub struct DensityEstimate {
    pub eval_points: Vec<f64>,
    pub density_values: Vec<f64>,
    pub bandwidth: f64,
}

impl DensityEstimate {
    pub fn mass(&self) -> f64 {
        self.eval_points
            .windows(2)
            .zip(self.density_values.windows(2))
            .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
            .sum()
    }

    /// Linear interpolation; zero outside the evaluation range.
    pub fn at(&self, x: f64) -> f64 {
        let xs = &self.eval_points;
        if x < xs[0] || x > xs[xs.len() - 1] {
            return 0.0;
        }
        let i = xs.partition_point(|&p| p <= x).clamp(1, xs.len() - 1);
        let t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
        self.density_values[i - 1] * (1.0 - t) + self.density_values[i] * t
    }
}

pub const KDE_POINTS: usize = 512;

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let j = (i + 1).min(sorted.len() - 1);
    sorted[i] + (sorted[j] - sorted[i]) * (pos - i as f64)
}

/// Gaussian-kernel density estimate on 512 points spanning the samples ± 4h.
pub fn kde(samples: &[f64], rule: Bandwidth) -> Result<DensityEstimate> {
    if samples.len() < 100 {
        return Err(Error::InvalidParameter(format!(
            "density estimate needs at least 100 samples, got {}",
            samples.len()
        )));
    }
    let m = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / m;
    let sd = (samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt();
    if !(sd > 0.0) {
        return Err(Error::DegenerateSample(format!(
            "all {} samples are equal",
            samples.len()
        )));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let h = match rule {
        Bandwidth::Fixed(h) if h > 0.0 && h.is_finite() => h,
        Bandwidth::Fixed(h) => {
            return Err(Error::InvalidParameter(format!(
                "bandwidth must be positive, got {h}"
            )))
        }
        Bandwidth::Silverman => {
            let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
            let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
            0.9 * spread * m.powf(-0.2)
        }
    };
    let lo = sorted[0] - 4.0 * h;
    let hi = sorted[sorted.len() - 1] + 4.0 * h;
    let step = (hi - lo) / (KDE_POINTS - 1) as f64;
    let norm = 1.0 / (m * h * (2.0 * PI).sqrt());
    let eval_points: Vec<f64> = (0..KDE_POINTS).map(|i| lo + step * i as f64).collect();
    let density_values = eval_points
        .iter()
        .map(|&x| {
            // Only samples within 8h contribute above e^{-32}.
            let a = sorted.partition_point(|&s| s < x - 8.0 * h);
            let b = sorted.partition_point(|&s| s <= x + 8.0 * h);
            norm * sorted[a..b]
                .iter()
                .map(|s| (-0.5 * ((x - s) / h).powi(2)).exp())
                .sum::<f64>()
        })
        .collect();
    Ok(DensityEstimate {
        eval_points,
        density_values,
        bandwidth: h,
    })
}

pub fn normal_cdf(x: f64, variance: f64) -> f64 {
    0.5 * libm::erfc(-x / (2.0 * variance).sqrt())
}

/// Asymptotic Kolmogorov tail P(K > λ) = 2 Σ_{k≥1} (−1)^{k−1} e^{−2k²λ²}.
pub fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 0.2 {
        // The alternating series converges slowly here; the value is 1 to double precision.
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct GaussianReport {
    pub ks_statistic: f64,
    pub p_value: f64,
    pub sample_variance: f64,
    pub target_variance: f64,
    /// Sample variance over target variance.
    pub variance_ratio: f64,
    pub samples: usize,
}

/// Kolmogorov–Smirnov test of the samples against N(0, target_variance).
pub fn gaussian_check(samples: &[f64], target_variance: f64) -> Result<GaussianReport> {
    if samples.len() < 1000 {
        return Err(Error::InvalidParameter(format!(
            "Gaussianity check needs at least 1000 samples, got {}",
            samples.len()
        )));
    }
    if !(target_variance > 0.0) {
        return Err(Error::InvalidParameter(
            "target variance must be positive".into(),
        ));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let d = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal_cdf(x, target_variance);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max);
    let sqrt_n = n.sqrt();
    // Stephens' finite-sample correction of the asymptotic distribution.
    let p_value = kolmogorov_tail((sqrt_n + 0.12 + 0.11 / sqrt_n) * d);
    let mean = sorted.iter().sum::<f64>() / n;
    let sample_variance = sorted.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(GaussianReport {
        ks_statistic: d,
        p_value,
        sample_variance,
        target_variance,
        variance_ratio: sample_variance / target_variance,
        samples: samples.len(),
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PboundReport {
    pub p: u32,
    pub lhs: f64,
    pub lhs_standard_error: f64,
    pub rhs: f64,
    pub constant: f64,
    pub nu_t: f64,
    /// rhs / lhs (infinite when lhs = 0).
    pub slack: f64,
    pub satisfied: bool,
}

/// Burkholder-type constant (4p)^{p/2}.
pub fn burkholder_constant(p: u32) -> f64 {
    (4.0 * p as f64).powf(p as f64 / 2.0)
}

/// E|u(T,x)|^p ≤ C_p ν_T^{p/2−1} · ν_T for the additive stochastic convolution.
pub fn pbound_audit(samples: &[f64], nu_t: f64, p: u32) -> Result<PboundReport> {
    if p != 2 && p != 4 {
        return Err(Error::InvalidParameter(format!(
            "p must be 2 or 4, got {p}"
        )));
    }
    if samples.is_empty() || !(nu_t > 0.0) {
        return Err(Error::InvalidParameter(
            "need samples and a positive nu_T".into(),
        ));
    }
    let m = moment(samples, p);
    let constant = burkholder_constant(p);
    let rhs = constant * nu_t.powf(p as f64 / 2.0 - 1.0) * nu_t;
    Ok(PboundReport {
        p,
        lhs: m.value,
        lhs_standard_error: m.standard_error,
        rhs,
        constant,
        nu_t,
        slack: if m.value > 0.0 {
            rhs / m.value
        } else {
            f64::INFINITY
        },
        satisfied: m.value <= rhs,
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
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn normals(m: usize, sd: f64, seed: u64) -> Vec<f64> {
        let mut rng = crate::rng::step_rng(seed, 0);
        (0..m)
            .map(|_| sd * rng.sample::<f64, _>(StandardNormal))
            .collect()
    }

    fn small_solver(coeffs: Coefficients) -> Solver {
        let grid = GridSpec::with_horizon(1, 10.0, 32, 0.5, 32).unwrap();
        Solver::new(
            GreenFunction::heat(1),
            CorrelationKernel::riesz(0.5, 1).unwrap(),
            grid,
            coeffs,
        )
        .unwrap()
    }

    #[test]
    fn null_forcing_ensemble_is_zero() {
        let s = run_ensemble(&small_solver(Coefficients::zero()), 3, 20, 1).unwrap();
        assert!(s.samples.iter().all(|&x| x == 0.0));
        assert_eq!(s.moments[0].value, 0.0);
    }

    #[test]
    fn single_path_ensembles_are_deterministic() {
        let solver = small_solver(Coefficients::additive(1.0));
        let a = run_ensemble(&solver, 3, 1, 42).unwrap();
        let b = run_ensemble(&solver, 3, 1, 42).unwrap();
        assert_eq!(a.samples, b.samples);
        assert!(run_ensemble(&solver, 3, 0, 42).is_err());
        assert!(run_ensemble(&solver, 99, 1, 42).is_err());
    }

    #[test]
    fn blowups_abort_the_ensemble() {
        let grid = GridSpec::new(1, 5.0, 16, 0.01, 200).unwrap();
        let coeffs =
            Coefficients::new(Coefficient::Zero, Coefficient::Affine { a: 1.0, b: 1e8 }).unwrap();
        let solver = Solver::new(
            GreenFunction::heat(1),
            CorrelationKernel::white_noise(1),
            grid,
            coeffs,
        )
        .unwrap();
        assert!(matches!(
            run_ensemble(&solver, 0, 10, 0),
            Err(Error::EnsembleFailed {
                failed: 10,
                total: 10
            })
        ));
    }

    #[test]
    fn kolmogorov_tail_reference_values() {
        assert_relative_eq!(kolmogorov_tail(1.0), 0.269_999_671, max_relative = 1e-7);
        assert_relative_eq!(kolmogorov_tail(1.3581), 0.05, max_relative = 1e-3);
        assert_relative_eq!(kolmogorov_tail(1.6276), 0.01, max_relative = 2e-3);
        assert_eq!(kolmogorov_tail(0.0), 1.0);
    }

    #[test]
    fn kde_of_normal_samples_is_close_to_the_density() {
        let xs = normals(10_000, 1.0, 3);
        let est = kde(&xs, Bandwidth::Silverman).unwrap();
        assert_eq!(est.eval_points.len(), KDE_POINTS);
        assert!((est.mass() - 1.0).abs() < 0.02);
        let sup = est
            .eval_points
            .iter()
            .zip(&est.density_values)
            .map(|(x, f)| (f - (-0.5 * x * x).exp() / (2.0 * PI).sqrt()).abs())
            .fold(0.0, f64::max);
        assert!(sup <= 0.05, "sup distance {sup}");
        assert!(est.density_values.iter().all(|&f| f >= 0.0));
        let fixed = kde(&xs, Bandwidth::Fixed(0.3)).unwrap();
        assert_eq!(fixed.bandwidth, 0.3);
        assert!((fixed.mass() - 1.0).abs() < 0.02);
    }

    #[test]
    fn kde_rejects_degenerate_samples() {
        assert!(matches!(
            kde(&[1.0; 200], Bandwidth::Silverman),
            Err(Error::DegenerateSample(_))
        ));
        assert!(kde(&[1.0; 20], Bandwidth::Silverman).is_err());
    }

    #[test]
    fn ks_calibration_rejects_about_one_percent() {
        let reps = 300;
        let rejected = (0..reps)
            .filter(|&i| {
                gaussian_check(&normals(1000, 1.0, 100 + i), 1.0)
                    .unwrap()
                    .p_value
                    < 0.01
            })
            .count();
        // Binomial(300, 0.01): mean 3, P(X > 10) below 1e-3.
        assert!(rejected <= 10, "rejected {rejected} of {reps}");
    }

    #[test]
    fn ks_negative_control_detects_a_wrong_variance() {
        let xs = normals(10_000, 1.0, 5);
        let r = gaussian_check(&xs, 2.0).unwrap();
        assert!(r.p_value < 1e-3);
        assert_relative_eq!(r.variance_ratio, 0.5, max_relative = 0.05);
        let ok = gaussian_check(&xs, 1.0).unwrap();
        assert!(ok.p_value > 0.01);
        assert!(gaussian_check(&xs[..10], 1.0).is_err());
    }

    #[test]
    fn pbound_on_gaussian_samples() {
        let nu: f64 = 0.3;
        let xs = normals(20_000, nu.sqrt(), 8);
        let p2 = pbound_audit(&xs, nu, 2).unwrap();
        assert!(p2.satisfied);
        assert_relative_eq!(p2.lhs, nu, max_relative = 0.05);
        assert_relative_eq!(p2.slack, 8.0, max_relative = 0.05);
        let p4 = pbound_audit(&xs, nu, 4).unwrap();
        assert!(p4.satisfied);
        assert_relative_eq!(p4.lhs, 3.0 * nu * nu, max_relative = 0.08);
        assert_eq!(p4.constant, 256.0);
        let zero = pbound_audit(&[0.0; 10], nu, 4).unwrap();
        assert!(zero.satisfied && zero.lhs == 0.0);
        assert!(pbound_audit(&xs, nu, 3).is_err());
    }

    #[test]
    fn nonlinear_density_is_positive_on_the_interquartile_range() {
        let coeffs = Coefficients::new(
            Coefficient::SinBounded { a: 1.0, b: 0.5 },
            Coefficient::Affine { a: 0.0, b: -1.0 },
        )
        .unwrap();
        let s = run_ensemble(&small_solver(coeffs), 5, 400, 7).unwrap();
        let est = kde(&s.samples, Bandwidth::Silverman).unwrap();
        let mut sorted = s.samples.clone();
        sorted.sort_by(f64::total_cmp);
        let (q1, q3) = (quantile(&sorted, 0.25), quantile(&sorted, 0.75));
        for (x, f) in est.eval_points.iter().zip(&est.density_values) {
            if *x >= q1 && *x <= q3 {
                assert!(*f > 0.0);
            }
        }
    }
}
