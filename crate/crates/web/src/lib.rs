//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every export returns a JSON string; the page parses it and draws. The
//! `*_json` functions hold the logic and are plain Rust so they can be
//! tested natively.

use serde_json::{json, Value};
use spdelab::fft::FftNd;
use spdelab::noise::{GridSpec, NoiseBatch};
use spdelab::spectral_measure::default_cutoffs;
use spdelab::{Coefficient, Coefficients, CorrelationKernel, GreenFunction, Operator, Solver};
use std::sync::Arc;
use wasm_bindgen::prelude::*;

fn green(operator: &str, dim: usize) -> Result<GreenFunction, String> {
    let op = match operator {
        "heat" => Operator::Heat,
        "wave" => Operator::Wave,
        other => return Err(format!("unknown operator `{other}` (heat or wave)")),
    };
    GreenFunction::new(op, dim).map_err(|e| e.to_string())
}

fn kernel(spec: &str, dim: usize) -> Result<CorrelationKernel, String> {
    CorrelationKernel::parse(spec, dim).map_err(|e| e.to_string())
}

/// g(δ) on a log grid plus the least-squares log-log slope.
pub fn g_curve_json(
    operator: &str,
    dim: usize,
    kernel_spec: &str,
    delta_min: f64,
    delta_max: f64,
    points: usize,
) -> Result<String, String> {
    let g = green(operator, dim)?;
    let k = kernel(kernel_spec, dim)?;
    let fit = g
        .fit_gamma_exponent(&k, delta_min, delta_max, points)
        .map_err(|e| e.to_string())?;
    Ok(json!({
        "deltas": fit.deltas,
        "g": fit.g_values,
        "fitted_slope": fit.fitted_slope,
        "closed_form": fit.deltas.iter().map(|&d| g.g_delta_closed_form(&k, d)).collect::<Vec<_>>(),
    })
    .to_string())
}

/// Partial Dalang integrals ∫_{|ξ|<R} μ(dξ)/(1+|ξ|²) over the default cutoffs.
pub fn dalang_json(kernel_spec: &str, dim: usize) -> Result<String, String> {
    let k = kernel(kernel_spec, dim)?;
    let r = k
        .dalang_integral(&default_cutoffs())
        .map_err(|e| e.to_string())?;
    Ok(json!({
        "analytic": format!("{:?}", r.analytic_verdict),
        "empirical": format!("{:?}", r.empirical_verdict),
        "agreement": r.agreement,
        "tail_growth_exponent": r.tail_growth_exponent,
        "cutoffs": r.quadrature_values.iter().map(|p| p.0).collect::<Vec<_>>(),
        "values": r.quadrature_values.iter().map(|p| p.1).collect::<Vec<_>>(),
    })
    .to_string())
}

/// One 1-d path on [0, length) up to `time`: the terminal field and the
/// first noise increment in physical space.
#[allow(clippy::too_many_arguments)]
pub fn sample_path_json(
    operator: &str,
    kernel_spec: &str,
    sigma: &str,
    drift: &str,
    length: f64,
    n_x: usize,
    n_t: usize,
    time: f64,
    seed: u64,
) -> Result<String, String> {
    let grid = GridSpec::with_horizon(1, length, n_x, time, n_t).map_err(|e| e.to_string())?;
    let sigma = Coefficient::parse(sigma).map_err(|e| e.to_string())?;
    let drift = Coefficient::parse(drift).map_err(|e| e.to_string())?;
    let coeffs = Coefficients::new(sigma, drift).map_err(|e| e.to_string())?;
    let solver = Solver::new(green(operator, 1)?, kernel(kernel_spec, 1)?, grid, coeffs)
        .map_err(|e| e.to_string())?;
    let batch = NoiseBatch::from_lattice(Arc::clone(solver.lattice()), seed);
    let path = solver.solve(&batch).map_err(|e| e.to_string())?;
    let mut increment = batch.step(0).to_vec();
    FftNd::new(n_x, 1).inverse(&mut increment);
    let noise: Vec<f64> = increment.iter().map(|z| z.re).collect();
    let x: Vec<f64> = (0..n_x).map(|i| grid.point(i)[0]).collect();
    let terminal: Value = path.terminal().to_vec().into();
    Ok(json!({ "x": x, "u": terminal, "noise": noise }).to_string())
}

fn js(r: Result<String, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn g_curve(
    operator: &str,
    dim: usize,
    kernel_spec: &str,
    delta_min: f64,
    delta_max: f64,
    points: usize,
) -> Result<String, JsError> {
    js(g_curve_json(
        operator,
        dim,
        kernel_spec,
        delta_min,
        delta_max,
        points,
    ))
}

#[wasm_bindgen]
pub fn dalang(kernel_spec: &str, dim: usize) -> Result<String, JsError> {
    js(dalang_json(kernel_spec, dim))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn sample_path(
    operator: &str,
    kernel_spec: &str,
    sigma: &str,
    drift: &str,
    length: f64,
    n_x: usize,
    n_t: usize,
    time: f64,
    seed: u64,
) -> Result<String, JsError> {
    js(sample_path_json(
        operator,
        kernel_spec,
        sigma,
        drift,
        length,
        n_x,
        n_t,
        time,
        seed,
    ))
}
