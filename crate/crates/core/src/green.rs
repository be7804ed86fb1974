//! Fundamental solutions of the heat and wave operators in Fourier form,
//! and the scalar functionals built from them:
//!
//! ```text
//! g(δ) = ∫₀^δ ∫ |FΓ(s)(ξ)|² μ(dξ) ds      h(δ) = ∫₀^δ Γ(s, R^d) ds
//! ```
//!
//! Heat uses FΓ(t)(ξ) = exp(−4π²t|ξ|²) (mass 1); wave uses
//! FΓ(t)(ξ) = sin(2πt|ξ|)/(2π|ξ|) (mass t, d ≤ 3). For d = 2 the wave
//! kernel C(t²−|x|²)₊^{−1/2} is normalized with C = 1/(2π).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{self, Tolerance};
use crate::spectral_measure::{unit_sphere_area, CorrelationKernel, KernelFamily, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Operator {
    Heat,
    Wave,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GreenFunction {
    operator: Operator,
    dim: usize,
}

/// Below this value of 2πtρ the wave symbol switches to its Taylor series.
const WAVE_SERIES_CUTOFF: f64 = 1e-4;

impl GreenFunction {
    pub fn new(operator: Operator, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        if operator == Operator::Wave && dim > 3 {
            return Err(Error::InvalidParameter(format!(
                "the wave fundamental solution is a non-negative measure only for d in {{1, 2, 3}}, got d = {dim}"
            )));
        }
        Ok(Self { operator, dim })
    }

    pub fn heat(dim: usize) -> Self {
        Self {
            operator: Operator::Heat,
            dim,
        }
    }

    pub fn wave(dim: usize) -> Result<Self> {
        Self::new(Operator::Wave, dim)
    }

    pub fn operator(&self) -> Operator {
        self.operator
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// FΓ(t)(ξ) at radial frequency ρ = |ξ|.
    pub fn fourier_symbol(&self, t: f64, rho: f64) -> f64 {
        match self.operator {
            Operator::Heat => (-4.0 * PI * PI * t * rho * rho).exp(),
            Operator::Wave => {
                let x = 2.0 * PI * t * rho;
                if x < WAVE_SERIES_CUTOFF {
                    let x2 = x * x;
                    t * (1.0 - x2 / 6.0 + x2 * x2 / 120.0)
                } else {
                    x.sin() / (2.0 * PI * rho)
                }
            }
        }
    }

    pub fn total_mass(&self, t: f64) -> f64 {
        match self.operator {
            Operator::Heat => 1.0,
            Operator::Wave => t,
        }
    }

    /// sup_{0≤t≤T} Γ(t, R^d).
    pub fn sup_mass(&self, horizon: f64) -> f64 {
        match self.operator {
            Operator::Heat => 1.0,
            Operator::Wave => horizon,
        }
    }

    /// h(δ) = ∫₀^δ Γ(s, R^d) ds.
    pub fn h_delta(&self, delta: f64) -> f64 {
        match self.operator {
            Operator::Heat => delta,
            Operator::Wave => 0.5 * delta * delta,
        }
    }

    /// ∫₀^δ |FΓ(s)(ρ)|² ds in closed form.
    pub fn symbol_sq_time_integral(&self, delta: f64, rho: f64) -> f64 {
        match self.operator {
            Operator::Heat => {
                let a = 8.0 * PI * PI * rho * rho;
                if a * delta < 1e-12 {
                    delta * (1.0 - 0.5 * a * delta)
                } else {
                    -(-a * delta).exp_m1() / a
                }
            }
            Operator::Wave => {
                let a = 2.0 * PI * rho;
                let x = a * delta;
                if x < 0.1 {
                    let a2 = a * a;
                    let d2 = delta * delta;
                    let d3 = d2 * delta;
                    d3 / 3.0 - a2 * d3 * d2 / 15.0 + 2.0 * a2 * a2 * d3 * d2 * d2 / 315.0
                        - a2 * a2 * a2 * d3 * d3 * d3 / 2835.0
                } else {
                    (0.5 * delta - (2.0 * x).sin() / (4.0 * a)) / (a * a)
                }
            }
        }
    }

    /// g(δ) by radial quadrature of the time-integrated squared symbol.
    pub fn g_delta(&self, kernel: &CorrelationKernel, delta: f64) -> Result<f64> {
        self.require_finite(kernel)?;
        if delta < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "delta must be non-negative, got {delta}"
            )));
        }
        if delta == 0.0 {
            return Ok(0.0);
        }
        let d = self.dim;
        let area = unit_sphere_area(d);
        let integrand = |rho: f64| {
            self.symbol_sq_time_integral(delta, rho)
                * kernel.density_at(rho)
                * area
                * rho.powi(d as i32 - 1)
        };
        let origin_exponent = kernel.origin_exponent() + d as f64 - 1.0;
        let tail_kappa = kernel.tail_exponent() + d as f64 - 2.0;
        let tol = Tolerance {
            abs: 0.0,
            rel: 1e-10,
            max_intervals: 20_000,
        };
        let value = match self.operator {
            Operator::Heat => {
                let a = 1.0 / (2.0 * PI * delta.sqrt());
                let b = 40.0 * a;
                let head = quad::integrate_origin(integrand, a, origin_exponent, tol)?.value;
                let mid = quad::integrate_log(integrand, a, b, tol)?.value;
                // Beyond b the exponential has vanished and the integrand is
                // S(ρ)ρ^{d−1}/(8π²ρ²).
                let tail = quad::integrate_tail(integrand, b, tail_kappa, tol)?.value;
                head + mid + tail
            }
            Operator::Wave => {
                let period = 1.0 / (2.0 * delta);
                let a = period;
                let head = quad::integrate_origin(integrand, a, origin_exponent, tol)?.value;
                let panels = 800;
                let mut mid = 0.0;
                for j in 0..panels {
                    let lo = a + j as f64 * period;
                    mid += quad::integrate(integrand, lo, lo + period, tol)?.value;
                }
                // Past the oscillatory window only the mean part δ/(8π²ρ²)
                // is kept; the dropped sin(4πδρ)/ρ³ remainder is O(panels⁻³).
                let end = a + panels as f64 * period;
                let mean = |rho: f64| {
                    delta / (8.0 * PI * PI * rho * rho)
                        * kernel.density_at(rho)
                        * area
                        * rho.powi(d as i32 - 1)
                };
                let tail = quad::integrate_tail(mean, end, tail_kappa, tol)?.value;
                head + mid + tail
            }
        };
        Ok(value)
    }

    /// Closed forms for g(δ) where the Gaussian moment integrals apply.
    pub fn g_delta_closed_form(&self, kernel: &CorrelationKernel, delta: f64) -> Option<f64> {
        if self.operator != Operator::Heat || kernel.dim() != self.dim {
            return None;
        }
        let d = self.dim;
        match kernel.family() {
            KernelFamily::WhiteNoise if d == 1 => Some((delta / (2.0 * PI)).sqrt()),
            KernelFamily::Riesz { beta } => {
                let c = crate::spectral_measure::riesz_constant(d, beta);
                Some(
                    c * unit_sphere_area(d)
                        * 0.5
                        * libm::tgamma(beta / 2.0)
                        * (8.0 * PI * PI).powf(-beta / 2.0)
                        * delta.powf(1.0 - beta / 2.0)
                        / (1.0 - beta / 2.0),
                )
            }
            _ => None,
        }
    }

    /// ν_T = g(T).
    pub fn nu_t(&self, kernel: &CorrelationKernel, horizon: f64) -> Result<f64> {
        self.g_delta(kernel, horizon)
    }

    pub fn fit_gamma_exponent(
        &self,
        kernel: &CorrelationKernel,
        delta_min: f64,
        delta_max: f64,
        n_points: usize,
    ) -> Result<ScalingReport> {
        if !(delta_min > 0.0 && delta_min < delta_max && delta_max <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < delta_min < delta_max <= 1, got [{delta_min}, {delta_max}]"
            )));
        }
        if n_points < 4 {
            return Err(Error::InvalidParameter(
                "at least four points are needed".into(),
            ));
        }
        let ratio = (delta_max / delta_min).ln() / (n_points - 1) as f64;
        let deltas: Vec<f64> = (0..n_points)
            .map(|i| delta_min * (ratio * i as f64).exp())
            .collect();
        let g_values = deltas
            .iter()
            .map(|&d| self.g_delta(kernel, d))
            .collect::<Result<Vec<_>>>()?;
        let xs: Vec<f64> = deltas.iter().map(|d| d.ln()).collect();
        let ys: Vec<f64> = g_values.iter().map(|g| g.ln()).collect();
        let (slope, intercept) = least_squares(&xs, &ys);
        let fit_residual = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (y - slope * x - intercept).abs())
            .fold(0.0, f64::max);
        Ok(ScalingReport {
            deltas,
            g_values,
            fitted_slope: slope,
            fit_intercept: intercept,
            fit_residual,
        })
    }

    fn require_finite(&self, kernel: &CorrelationKernel) -> Result<()> {
        if kernel.dim() != self.dim {
            return Err(Error::InvalidParameter(format!(
                "kernel dimension {} does not match operator dimension {}",
                kernel.dim(),
                self.dim
            )));
        }
        match kernel.classify_dalang() {
            Verdict::Finite => Ok(()),
            Verdict::Infinite => Err(Error::ConditionViolated(format!(
                "∫ μ(dξ)/(1+|ξ|²) diverges for {kernel} in d = {}",
                self.dim
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingReport {
    pub deltas: Vec<f64>,
    pub g_values: Vec<f64>,
    pub fitted_slope: f64,
    pub fit_intercept: f64,
    /// Largest absolute residual of the log-log fit.
    pub fit_residual: f64,
}

pub(crate) fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn white1() -> CorrelationKernel {
        CorrelationKernel::white_noise(1)
    }

    #[test]
    fn symbols() {
        let heat = GreenFunction::heat(2);
        assert_eq!(heat.fourier_symbol(3.0, 0.0), 1.0);
        let wave = GreenFunction::wave(1).unwrap();
        assert!(wave.fourier_symbol(1.0, 0.5).abs() < 1e-15);
        assert_eq!(wave.fourier_symbol(0.7, 0.0), 0.7);
        // Both branches agree across the series cutoff.
        let rho = WAVE_SERIES_CUTOFF / (2.0 * PI * 0.7);
        let below = wave.fourier_symbol(0.7, rho * (1.0 - 1e-9));
        let above = wave.fourier_symbol(0.7, rho * (1.0 + 1e-9));
        assert_relative_eq!(below, above, max_relative = 1e-12);
    }

    #[test]
    fn wave_is_rejected_above_three_dimensions() {
        assert!(GreenFunction::wave(4).is_err());
        assert!(GreenFunction::new(Operator::Heat, 7).is_ok());
    }

    #[test]
    fn masses() {
        assert_eq!(GreenFunction::heat(1).total_mass(3.0), 1.0);
        for d in 1..=3 {
            let w = GreenFunction::wave(d).unwrap();
            assert_eq!(w.total_mass(2.0), 2.0);
            assert_eq!(w.total_mass(2.0), w.fourier_symbol(2.0, 0.0));
        }
    }

    #[test]
    fn symbol_is_bounded_by_mass() {
        for g in [GreenFunction::heat(1), GreenFunction::wave(3).unwrap()] {
            for i in 0..200 {
                let t = 0.01 * i as f64;
                for j in 0..50 {
                    let rho = 0.37 * j as f64;
                    assert!(g.fourier_symbol(t, rho).abs() <= g.total_mass(t) + 1e-15);
                }
            }
        }
    }

    #[test]
    fn time_integral_matches_direct_quadrature() {
        for g in [GreenFunction::heat(1), GreenFunction::wave(1).unwrap()] {
            for &(delta, rho) in &[(0.3, 0.0), (0.3, 0.01), (0.1, 2.5), (1.0, 7.3)] {
                let direct = quad::integrate(
                    |s| g.fourier_symbol(s, rho).powi(2),
                    0.0,
                    delta,
                    Tolerance::relative(1e-12),
                )
                .unwrap()
                .value;
                assert_relative_eq!(
                    g.symbol_sq_time_integral(delta, rho),
                    direct,
                    max_relative = 1e-10
                );
            }
        }
    }

    #[test]
    fn h_delta_values() {
        assert_relative_eq!(GreenFunction::heat(3).h_delta(0.3), 0.3);
        assert_relative_eq!(
            GreenFunction::wave(3).unwrap().h_delta(0.2),
            0.02,
            max_relative = 1e-14
        );
        assert_eq!(GreenFunction::wave(2).unwrap().h_delta(0.0), 0.0);
    }

    #[test]
    fn g_delta_heat_white_noise() {
        let g = GreenFunction::heat(1);
        assert_eq!(g.g_delta(&white1(), 0.0).unwrap(), 0.0);
        assert_relative_eq!(
            g.g_delta(&white1(), 0.1).unwrap(),
            0.126_156_626_101_008,
            max_relative = 1e-9
        );
        assert_relative_eq!(
            g.nu_t(&white1(), 1.0).unwrap(),
            0.398_942_280_401_433,
            max_relative = 1e-9
        );
        assert_eq!(
            g.nu_t(&white1(), 0.4).unwrap(),
            g.g_delta(&white1(), 0.4).unwrap()
        );
    }

    #[test]
    fn g_delta_heat_riesz_matches_gaussian_moment_formula() {
        let beta = 0.5;
        let k = CorrelationKernel::riesz(beta, 1).unwrap();
        let g = GreenFunction::heat(1);
        let delta: f64 = 0.1;
        // c_{1,β} Γ(β/2) (8π²)^{−β/2} δ^{1−β/2}/(1−β/2), c_{1,1/2} = 1.
        let oracle = libm::tgamma(beta / 2.0)
            * (8.0 * PI * PI).powf(-beta / 2.0)
            * delta.powf(1.0 - beta / 2.0)
            / (1.0 - beta / 2.0);
        assert_relative_eq!(g.g_delta(&k, delta).unwrap(), oracle, max_relative = 1e-7);
        assert_relative_eq!(
            g.g_delta_closed_form(&k, delta).unwrap(),
            oracle,
            max_relative = 1e-12
        );
        for d in [2, 3] {
            let k = CorrelationKernel::riesz(1.3, d).unwrap();
            let h = GreenFunction::heat(d);
            let q = h.g_delta(&k, 0.05).unwrap();
            assert_relative_eq!(
                q,
                h.g_delta_closed_form(&k, 0.05).unwrap(),
                max_relative = 1e-6
            );
        }
    }

    #[test]
    fn g_delta_rejects_infinite_kernels() {
        let g = GreenFunction::heat(2);
        let err = g
            .g_delta(&CorrelationKernel::white_noise(2), 0.1)
            .unwrap_err();
        assert!(matches!(err, Error::ConditionViolated(_)));
    }

    #[test]
    fn wave_g_delta_for_riesz_scales_like_three_minus_beta() {
        // μ is homogeneous of degree β − d, so g(δ) = g(1)·δ^{3−β} exactly.
        let k = CorrelationKernel::riesz(1.0, 3).unwrap();
        let w = GreenFunction::wave(3).unwrap();
        let g1 = w.g_delta(&k, 1.0).unwrap();
        for delta in [0.5, 0.1, 0.01] {
            assert_relative_eq!(
                w.g_delta(&k, delta).unwrap(),
                g1 * delta.powi(2),
                max_relative = 1e-6
            );
        }
    }

    #[test]
    fn wave_g_delta_with_finite_measure_approaches_cubic_law() {
        // μ(R^d) = f(0) = 1 and FΓ(s) ≈ s for |ξ| ≪ 1/s, so g(δ) ≈ δ³/3.
        let k = CorrelationKernel::exponential(1.0, 3).unwrap();
        let w = GreenFunction::wave(3).unwrap();
        let delta = 1e-3;
        let ratio = w.g_delta(&k, delta).unwrap() / (delta.powi(3) / 3.0);
        assert!((ratio - 1.0).abs() < 0.02, "ratio {ratio}");
    }

    #[test]
    fn fitted_slopes() {
        let heat = GreenFunction::heat(1);
        let rep = heat.fit_gamma_exponent(&white1(), 1e-3, 1e-2, 8).unwrap();
        assert!((rep.fitted_slope - 0.5).abs() < 1e-6);
        assert!(rep.g_values.windows(2).all(|w| w[1] > w[0]));
        for beta in [0.25, 0.5, 0.75] {
            let k = CorrelationKernel::riesz(beta, 1).unwrap();
            let rep = heat.fit_gamma_exponent(&k, 1e-3, 1e-2, 6).unwrap();
            assert!(rep.fitted_slope <= 1.0);
            assert_relative_eq!(rep.fitted_slope, 1.0 - beta / 2.0, max_relative = 1e-6);
        }
        assert!(heat.fit_gamma_exponent(&white1(), 1e-3, 1e-2, 3).is_err());
        assert!(heat.fit_gamma_exponent(&white1(), 1e-2, 1e-3, 6).is_err());
    }

    #[test]
    fn g_and_h_are_monotone() {
        let k = CorrelationKernel::riesz(0.5, 1).unwrap();
        for g in [GreenFunction::heat(1), GreenFunction::wave(1).unwrap()] {
            let mut last = (0.0, 0.0);
            for i in 1..=20 {
                let delta = 0.05 * i as f64;
                let now = (g.g_delta(&k, delta).unwrap(), g.h_delta(delta));
                assert!(now.0 >= last.0 && now.1 >= last.1);
                last = now;
            }
        }
    }
}
