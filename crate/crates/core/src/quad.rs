//! One-dimensional quadrature: adaptive Gauss–Kronrod (7/15) and fixed
//! Gauss–Legendre rules, plus the endpoint substitutions used for the
//! algebraic singularities and infinite tails of radial spectral integrals.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

// Gauss weights for the odd Kronrod nodes (1, 3, 5) and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Absolute/relative tolerance pair for adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs: 1e-9,
            rel: 1e-7,
            max_intervals: 4000,
        }
    }
}

impl Tolerance {
    pub fn relative(rel: f64) -> Self {
        Self {
            abs: 0.0,
            rel,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(centre - dx) + f(centre + dx);
        kron += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    kron *= half;
    gauss *= half;
    (kron, (kron - gauss).abs())
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive G7K15 on a finite interval.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<Estimate> {
    if a == b {
        return Ok(Estimate {
            value: 0.0,
            error: 0.0,
            intervals: 0,
        });
    }
    let (v, e) = kronrod(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Panel {
        a,
        b,
        value: v,
        error: e,
    });
    let mut total = v;
    let mut err = e;
    loop {
        if !total.is_finite() || !err.is_finite() {
            return Err(Error::QuadratureFailure(format!(
                "non-finite integrand on [{a}, {b}]"
            )));
        }
        if err <= tol.abs.max(tol.rel * total.abs()) {
            break;
        }
        if heap.len() >= tol.max_intervals {
            return Err(Error::QuadratureFailure(format!(
                "no convergence on [{a}, {b}] after {} panels: estimate {total:e}, error {err:e}",
                heap.len()
            )));
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Panel cannot be split further in floating point.
            return Err(Error::QuadratureFailure(format!(
                "panel [{}, {}] collapsed: estimate {total:e}, error {err:e}",
                worst.a, worst.b
            )));
        }
        let (vl, el) = kronrod(&f, worst.a, mid);
        let (vr, er) = kronrod(&f, mid, worst.b);
        total += vl + vr - worst.value;
        err += el + er - worst.error;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: vl,
            error: el,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: vr,
            error: er,
        });
    }
    // Re-sum to shed accumulated round-off from the running updates.
    let intervals = heap.len();
    let (value, error) = heap
        .into_iter()
        .fold((0.0, 0.0), |(s, e), p| (s + p.value, e + p.error));
    Ok(Estimate {
        value,
        error,
        intervals,
    })
}

/// ∫₀^a f where f(ρ) ~ ρ^α near the origin (α > −1). Non-integer or negative
/// α is removed by the substitution ρ = a·s^{1/(α+1)}.
pub fn integrate_origin<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    origin_exponent: f64,
    tol: Tolerance,
) -> Result<Estimate> {
    let smooth = origin_exponent >= 0.0 && origin_exponent.fract() == 0.0;
    if smooth {
        return integrate(f, 0.0, a, tol);
    }
    let p = 1.0 / (origin_exponent + 1.0);
    integrate(
        |s: f64| {
            if s <= 0.0 {
                return 0.0;
            }
            let rho = a * s.powf(p);
            f(rho) * a * p * s.powf(p - 1.0)
        },
        0.0,
        1.0,
        tol,
    )
}

/// ∫_a^∞ f where f(ρ) ~ ρ^{κ−1} at infinity with κ < 0. The substitution
/// ρ = a·t^{1/κ} maps the tail onto (0, 1] with a bounded integrand.
pub fn integrate_tail<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    tail_kappa: f64,
    tol: Tolerance,
) -> Result<Estimate> {
    if tail_kappa >= 0.0 {
        return Err(Error::QuadratureFailure(format!(
            "tail exponent {tail_kappa} is not integrable"
        )));
    }
    let q = -1.0 / tail_kappa;
    integrate(
        |t: f64| {
            if t <= 0.0 {
                return 0.0;
            }
            let rho = a * t.powf(-q);
            f(rho) * a * q * t.powf(-q - 1.0)
        },
        0.0,
        1.0,
        tol,
    )
}

/// ∫_a^b f on a positive interval, integrated in ln ρ.
pub fn integrate_log<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<Estimate> {
    integrate(
        |s: f64| {
            let rho = s.exp();
            f(rho) * rho
        },
        a.ln(),
        b.ln(),
        tol,
    )
}

/// Nodes and weights of the n-point Gauss–Legendre rule on [−1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    if n == 1 {
        return (vec![0.0], vec![2.0]);
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            // Legendre recurrence for P_n(x) and P_{n-1}(x).
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn kronrod_integrates_polynomials_exactly() {
        let e = integrate(|x| x.powi(6) - 3.0 * x, 0.0, 2.0, Tolerance::default()).unwrap();
        assert_relative_eq!(e.value, 128.0 / 7.0 - 6.0, max_relative = 1e-13);
    }

    #[test]
    fn origin_substitution_handles_inverse_square_root() {
        let e = integrate_origin(|x| x.powf(-0.5), 1.0, -0.5, Tolerance::relative(1e-10)).unwrap();
        assert_relative_eq!(e.value, 2.0, max_relative = 1e-10);
    }

    #[test]
    fn tail_substitution_gives_arctangent_limit() {
        let e = integrate_tail(
            |x| 1.0 / (1.0 + x * x),
            1.0,
            -1.0,
            Tolerance::relative(1e-11),
        )
        .unwrap();
        assert_relative_eq!(e.value, std::f64::consts::FRAC_PI_4, max_relative = 1e-10);
    }

    #[test]
    fn gauss_legendre_weights_sum_to_two_and_integrate_degree_2n_minus_1() {
        for n in 1..=10 {
            let (x, w) = gauss_legendre(n);
            assert_relative_eq!(w.iter().sum::<f64>(), 2.0, max_relative = 1e-13);
            let deg = 2 * n as i32 - 2;
            let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg)).sum();
            assert_relative_eq!(s, 2.0 / (deg as f64 + 1.0), max_relative = 1e-12);
        }
    }

    #[test]
    fn exhausted_panels_report_failure() {
        let tol = Tolerance {
            abs: 0.0,
            rel: 1e-14,
            max_intervals: 4,
        };
        let err = integrate(|x: f64| (50.0 * x).sin().abs(), 0.0, 10.0, tol).unwrap_err();
        assert!(matches!(err, Error::QuadratureFailure(_)));
    }
}
