//! Schema and admissibility checks, run before anything is computed.

use serde::Serialize;
use spdelab::noise::GridSpec;
use spdelab::{Coefficient, Coefficients, CorrelationKernel, GreenFunction, Operator, Verdict};

use crate::config::ExperimentConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub field: String,
    pub message: String,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{tag}: {}: {}", self.field, self.message)
    }
}

/// Library objects built from a config that passed validation.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub green: GreenFunction,
    pub kernel: CorrelationKernel,
    pub grid: GridSpec,
    pub coeffs: Coefficients,
    pub x_index: usize,
}

#[derive(Debug, Clone)]
pub struct Validation {
    pub diagnostics: Vec<Diagnostic>,
    pub resolved: Option<Resolved>,
}

impl Validation {
    pub fn errors(&self) -> impl Iterator<Item = &Diagnostic> {
        self.diagnostics
            .iter()
            .filter(|d| d.severity == Severity::Error)
    }

    pub fn is_ok(&self) -> bool {
        self.errors().next().is_none()
    }
}

struct Collector(Vec<Diagnostic>);

impl Collector {
    fn error(&mut self, field: &str, message: impl Into<String>) {
        self.0.push(Diagnostic {
            severity: Severity::Error,
            field: field.into(),
            message: message.into(),
        });
    }

    fn warn(&mut self, field: &str, message: impl Into<String>) {
        self.0.push(Diagnostic {
            severity: Severity::Warning,
            field: field.into(),
            message: message.into(),
        });
    }
}

fn is_additive(c: &Coefficients) -> bool {
    c.sigma.as_constant().is_some() && c.b.is_zero()
}

pub fn validate(cfg: &ExperimentConfig) -> Validation {
    let mut out = Collector(Vec::new());
    let a = &cfg.analyses;

    let green = match GreenFunction::new(cfg.operator, cfg.dim) {
        Ok(g) => Some(g),
        Err(_) if cfg.operator == Operator::Wave => {
            out.error(
                "dim",
                format!("the wave operator has a nonnegative fundamental solution only for d in {{1, 2, 3}}, got d = {}", cfg.dim),
            );
            None
        }
        Err(e) => {
            out.error("dim", e.to_string());
            None
        }
    };

    let kernel = match CorrelationKernel::parse(&cfg.kernel, cfg.dim.max(1)) {
        Ok(k) => Some(k),
        Err(e) => {
            out.error("kernel", e.to_string());
            None
        }
    };
    if cfg.dim == 0 {
        out.error("dim", "dimension must be at least 1");
    }

    if let Some(k) = &kernel {
        if k.classify_dalang() == Verdict::Infinite && (a.uses_solver() || a.scaling.is_some()) {
            out.error(
                "kernel",
                format!(
                    "{k} in d = {} fails the Dalang condition: ∫ μ(dξ)/(1+|ξ|²) diverges, so the mild solution and g(δ) are undefined",
                    cfg.dim
                ),
            );
        }
    }

    if !(cfg.target.time > 0.0 && cfg.target.time.is_finite()) {
        out.error("target.time", "time horizon must be positive");
    }
    if cfg.target.x.len() != cfg.dim {
        out.error(
            "target.x",
            format!(
                "target point has {} coordinates, expected {}",
                cfg.target.x.len(),
                cfg.dim
            ),
        );
    }
    if a.uses_solver() && cfg.grid.n_t == 0 {
        out.error("grid.n_t", "the solver needs at least one time step");
    }
    let grid = if cfg.target.time > 0.0 && cfg.grid.n_t > 0 {
        match GridSpec::with_horizon(
            cfg.dim.max(1),
            cfg.grid.length,
            cfg.grid.n_x,
            cfg.target.time,
            cfg.grid.n_t,
        ) {
            Ok(g) => Some(g),
            Err(e) => {
                out.error("grid", e.to_string());
                None
            }
        }
    } else {
        None
    };
    if let Some(g) = &grid {
        if g.n_points() > 1 << 21 && a.uses_solver() {
            out.error(
                "grid.n_x",
                format!("{} grid points exceed the supported 2^21", g.n_points()),
            );
        }
    }

    let sigma = Coefficient::parse(&cfg.coefficients.sigma)
        .map_err(|e| out.error("coefficients.sigma", e.to_string()));
    let b = Coefficient::parse(&cfg.coefficients.b)
        .map_err(|e| out.error("coefficients.b", e.to_string()));
    let coeffs = match (sigma, b) {
        (Ok(s), Ok(b)) => Coefficients::new(s, b)
            .map_err(|e| out.error("coefficients", e.to_string()))
            .ok(),
        _ => None,
    };

    if let Some(d) = &a.dalang {
        if let Some(c) = &d.cutoffs {
            if c.len() < 3 || c[0] <= 0.0 || c.windows(2).any(|w| w[1] <= w[0]) {
                out.error(
                    "analyses.dalang.cutoffs",
                    "need at least three positive, strictly increasing cutoffs",
                );
            }
        }
    }
    if let Some(s) = &a.scaling {
        if !(s.delta_min > 0.0 && s.delta_min < s.delta_max && s.delta_max <= 1.0) {
            out.error("analyses.scaling", "need 0 < delta_min < delta_max <= 1");
        }
        if s.points < 4 {
            out.error(
                "analyses.scaling.points",
                "at least four points are needed for the fit",
            );
        }
    }
    if let Some(e) = &a.ensemble {
        if e.paths == 0 {
            out.error("analyses.ensemble.paths", "need at least one path");
        }
        if e.kde && e.paths < 100 {
            out.error(
                "analyses.ensemble.kde",
                "the density estimate needs at least 100 paths",
            );
        }
        if e.gaussian_check && e.paths < 1000 {
            out.error(
                "analyses.ensemble.gaussian_check",
                "the Gaussianity check needs at least 1000 paths",
            );
        }
        if e.pbound.iter().any(|&p| p != 2 && p != 4) {
            out.error("analyses.ensemble.pbound", "moment orders must be 2 or 4");
        }
        if let Some(c) = &coeffs {
            if !is_additive(c) && (e.gaussian_check || !e.pbound.is_empty()) {
                out.warn(
                    "analyses.ensemble",
                    "Gaussianity and L^p bound audits compare against the additive case; sigma is not constant or b is nonzero",
                );
            }
        }
    }
    if let Some(m) = &a.malliavin {
        if m.paths < 100 {
            out.error(
                "analyses.malliavin.paths",
                "the small-ball curve needs at least 100 paths",
            );
        }
        if m.r_stride == 0 {
            out.error("analyses.malliavin.r_stride", "stride must be at least 1");
        }
        if let Some(eps) = &m.eps_grid {
            if eps.is_empty()
                || eps.iter().any(|&e| !(e > 0.0))
                || eps.windows(2).any(|w| w[1] <= w[0])
            {
                out.error(
                    "analyses.malliavin.eps_grid",
                    "thresholds must be positive and strictly increasing",
                );
            }
        }
    }

    let resolved = match (green, kernel, grid, coeffs) {
        (Some(green), Some(kernel), Some(grid), Some(coeffs))
            if out.0.iter().all(|d| d.severity != Severity::Error) =>
        {
            grid.nearest_index(&cfg.target.x)
                .ok()
                .map(|x_index| Resolved {
                    green,
                    kernel,
                    grid,
                    coeffs,
                    x_index,
                })
        }
        _ => None,
    };
    Validation {
        diagnostics: out.0,
        resolved,
    }
}
