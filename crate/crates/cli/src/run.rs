//! Executes the enabled analyses in dependency order
//! (dalang → scaling → ensemble → malliavin) and writes the artifacts.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;
use sha2::{Digest, Sha256};
use spdelab::analysis::{self, Bandwidth, GaussianReport, Moment, PathFailure, PboundReport};
use spdelab::malliavin::{self, SmallBallReport};
use spdelab::noise::{self, NoiseBatch};
use spdelab::rng::derive_seed;
use spdelab::solver::{self, SolverOptions};
use spdelab::spectral_measure::default_cutoffs;
use spdelab::{DalangReport, ScalingReport, Solver};

use crate::config::{ExperimentConfig, LoadError};
use crate::plot::{line_plot, Axis};
use crate::validate::{validate, Diagnostic, Resolved, Severity};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; all cores when `None`.
    pub threads: Option<usize>,
    /// Overrides `master_seed`.
    pub seed: Option<u64>,
    /// Overrides `output_dir`.
    pub out: Option<PathBuf>,
}

#[derive(Debug)]
pub enum RunError {
    Load(LoadError),
    Validation(Vec<Diagnostic>),
    Numerical(spdelab::Error),
    Io(io::Error),
}

impl RunError {
    /// 2 for unusable configs, 3 for numerical failures, 1 for output I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Load(_) | Self::Validation(_) => 2,
            Self::Numerical(_) => 3,
            Self::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Load(e) => write!(f, "{e}"),
            Self::Validation(d) => {
                writeln!(f, "config failed validation:")?;
                for x in d {
                    writeln!(f, "  {x}")?;
                }
                Ok(())
            }
            Self::Numerical(e) => write!(f, "numerical failure: {e}"),
            Self::Io(e) => write!(f, "cannot write artifacts: {e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<io::Error> for RunError {
    fn from(e: io::Error) -> Self {
        Self::Io(e)
    }
}

impl From<spdelab::Error> for RunError {
    fn from(e: spdelab::Error) -> Self {
        match e {
            spdelab::Error::Io(io) => Self::Io(io),
            other => Self::Numerical(other),
        }
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub files: Vec<String>,
    pub warnings: Vec<Diagnostic>,
}

#[derive(Serialize)]
struct ScalingSection {
    operator: spdelab::Operator,
    kernel: String,
    #[serde(flatten)]
    report: ScalingReport,
    h_values: Vec<f64>,
    closed_form: Option<Vec<f64>>,
}

#[derive(Serialize)]
struct KdeSection {
    bandwidths: [f64; 2],
    masses: [f64; 2],
    note: &'static str,
}

#[derive(Serialize)]
struct EnsembleSection {
    paths: usize,
    successful: usize,
    failures: Vec<PathFailure>,
    x_target: Vec<f64>,
    mean: f64,
    variance: f64,
    moments: Vec<Moment>,
    g_t: f64,
    g_disc_t: f64,
    /// Continuum Var u(T,x) of the additive case, c²·g(T); absent otherwise.
    additive_variance: Option<f64>,
    variance_ratio: Option<f64>,
    gaussian: Option<GaussianReport>,
    pbound: Vec<PboundReport>,
    kde: Option<KdeSection>,
}

#[derive(Serialize)]
struct MalliavinSection {
    paths: usize,
    r_stride: usize,
    delta_r: f64,
    sigma_lower_bound: f64,
    g_disc_t: f64,
    /// c²·g_disc(T), the deterministic lower envelope of γ.
    floor: f64,
    min_gamma: f64,
    mean_gamma: f64,
    max_gamma: f64,
    below_half_floor: usize,
    small_ball: SmallBallReport,
}

#[derive(Serialize)]
struct Reports {
    timestamp: String,
    version: &'static str,
    config_hash: String,
    master_seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    dalang: Option<DalangReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    scaling: Option<ScalingSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ensemble: Option<EnsembleSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    malliavin: Option<MalliavinSection>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    version: &'static str,
    config_hash: &'a str,
    master_seed: u64,
    config: &'a ExperimentConfig,
    files: &'a [String],
}

pub fn config_hash(cfg: &ExperimentConfig) -> String {
    format!("{:x}", Sha256::digest(cfg.canonical_json().as_bytes()))
}

fn timestamp() -> String {
    time::OffsetDateTime::now_utc()
        .format(&time::format_description::well_known::Rfc3339)
        .unwrap_or_else(|_| "unknown".into())
}

struct Writer {
    dir: PathBuf,
    files: Vec<String>,
}

impl Writer {
    fn text(&mut self, name: &str, body: &str) -> io::Result<()> {
        fs::write(self.dir.join(name), body)?;
        self.files.push(name.into());
        Ok(())
    }

    fn csv(
        &mut self,
        name: &str,
        header: [&str; 2],
        rows: impl IntoIterator<Item = (String, f64)>,
    ) -> io::Result<()> {
        let mut w = csv::Writer::from_path(self.dir.join(name)).map_err(io::Error::other)?;
        w.write_record(header).map_err(io::Error::other)?;
        for (a, b) in rows {
            w.write_record([a, b.to_string()])
                .map_err(io::Error::other)?;
        }
        w.flush()?;
        self.files.push(name.into());
        Ok(())
    }

    fn binary(
        &mut self,
        name: &str,
        f: impl FnOnce(io::BufWriter<fs::File>) -> spdelab::Result<()>,
    ) -> Result<(), RunError> {
        f(io::BufWriter::new(fs::File::create(self.dir.join(name))?))?;
        self.files.push(name.into());
        Ok(())
    }
}

pub fn run(config_path: &Path, opts: &RunOptions) -> Result<RunOutcome, RunError> {
    let cfg = ExperimentConfig::load(config_path).map_err(RunError::Load)?;
    run_config(cfg, opts)
}

pub fn run_config(mut cfg: ExperimentConfig, opts: &RunOptions) -> Result<RunOutcome, RunError> {
    if let Some(seed) = opts.seed {
        cfg.master_seed = seed;
    }
    let v = validate(&cfg);
    if !v.is_ok() {
        return Err(RunError::Validation(v.diagnostics));
    }
    let warnings: Vec<Diagnostic> = v
        .diagnostics
        .iter()
        .filter(|d| d.severity == Severity::Warning)
        .cloned()
        .collect();
    let out_dir = opts
        .out
        .clone()
        .or_else(|| cfg.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("spdelab-out"));
    fs::create_dir_all(&out_dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.threads.unwrap_or(0))
        .build()
        .map_err(|e| RunError::Io(io::Error::other(e)))?;
    let resolved = v.resolved.expect("validated configs resolve");
    let mut w = Writer {
        dir: out_dir.clone(),
        files: Vec::new(),
    };
    pool.install(|| execute(&cfg, &resolved, &mut w))?;
    Ok(RunOutcome {
        out_dir,
        files: w.files,
        warnings,
    })
}

fn execute(cfg: &ExperimentConfig, r: &Resolved, w: &mut Writer) -> Result<(), RunError> {
    let hash = config_hash(cfg);
    let a = &cfg.analyses;
    let svg = cfg.options.svg;
    let seed = cfg.master_seed;
    let mut reports = Reports {
        timestamp: timestamp(),
        version: VERSION,
        config_hash: hash.clone(),
        master_seed: seed,
        dalang: None,
        scaling: None,
        ensemble: None,
        malliavin: None,
    };

    if let Some(d) = &a.dalang {
        let cutoffs = d.cutoffs.clone().unwrap_or_else(default_cutoffs);
        let rep = r.kernel.dalang_integral(&cutoffs)?;
        w.csv(
            "dalang.csv",
            ["cutoff", "partial_integral"],
            rep.quadrature_values
                .iter()
                .map(|&(c, v)| (c.to_string(), v)),
        )?;
        reports.dalang = Some(rep);
    }

    if let Some(s) = &a.scaling {
        let rep = r
            .green
            .fit_gamma_exponent(&r.kernel, s.delta_min, s.delta_max, s.points)?;
        let closed: Option<Vec<f64>> = rep
            .deltas
            .iter()
            .map(|&d| r.green.g_delta_closed_form(&r.kernel, d))
            .collect();
        w.csv(
            "scaling.csv",
            ["delta", "g"],
            rep.deltas
                .iter()
                .zip(&rep.g_values)
                .map(|(d, g)| (d.to_string(), *g)),
        )?;
        if svg {
            let pts: Vec<(f64, f64)> = rep
                .deltas
                .iter()
                .copied()
                .zip(rep.g_values.iter().copied())
                .collect();
            w.text(
                "scaling.svg",
                &line_plot(
                    "g(delta)",
                    Axis {
                        label: "delta",
                        log: true,
                    },
                    Axis {
                        label: "g",
                        log: true,
                    },
                    &pts,
                ),
            )?;
        }
        reports.scaling = Some(ScalingSection {
            operator: r.green.operator(),
            kernel: r.kernel.to_string(),
            h_values: rep.deltas.iter().map(|&d| r.green.h_delta(d)).collect(),
            closed_form: closed,
            report: rep,
        });
    }

    let solver = if a.uses_solver() || cfg.options.dump_noise || cfg.options.dump_path {
        Some(
            Solver::new(r.green, r.kernel, r.grid, r.coeffs)?.with_options(SolverOptions {
                dealias: cfg.options.dealias,
            }),
        )
    } else {
        None
    };

    if let Some(solver) = &solver {
        if cfg.options.dump_noise || cfg.options.dump_path {
            let batch =
                NoiseBatch::from_lattice(Arc::clone(solver.lattice()), derive_seed(seed, 0));
            if cfg.options.dump_noise {
                w.binary("noise.bin", |f| noise::dump::write_batch(&batch, f))?;
            }
            if cfg.options.dump_path {
                let path = solver.solve(&batch)?;
                w.binary("path.bin", |f| solver::dump::write_path(&path, f))?;
            }
        }
    }

    let horizon = r.grid.horizon();
    let additive_c = (r.coeffs.b.is_zero())
        .then(|| r.coeffs.sigma.as_constant())
        .flatten();

    if let (Some(e), Some(solver)) = (&a.ensemble, &solver) {
        let summary = analysis::run_ensemble(solver, r.x_index, e.paths, seed)?;
        let xs = &summary.samples;
        let m = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / m;
        let variance = if xs.len() > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0)
        } else {
            0.0
        };
        let g_t = r.green.g_delta(&r.kernel, horizon)?;
        let g_disc_t = malliavin::g_disc(solver.lattice(), &r.green, horizon);
        let additive_variance = additive_c.map(|c| c * c * g_t);
        let gaussian = match additive_variance {
            Some(v) if e.gaussian_check && v > 0.0 => Some(analysis::gaussian_check(xs, v)?),
            _ => None,
        };
        let pbound = match additive_variance {
            Some(v) if v > 0.0 => e
                .pbound
                .iter()
                .map(|&p| analysis::pbound_audit(xs, v, p))
                .collect::<spdelab::Result<Vec<_>>>()?,
            _ => Vec::new(),
        };
        w.csv(
            "samples.csv",
            ["path_index", "value"],
            xs.iter().enumerate().map(|(i, x)| (i.to_string(), *x)),
        )?;
        let kde = if e.kde {
            let narrow = analysis::kde(xs, Bandwidth::Silverman)?;
            let wide = analysis::kde(xs, Bandwidth::Fixed(2.0 * narrow.bandwidth))?;
            w.csv(
                "density.csv",
                ["point", "value"],
                narrow
                    .eval_points
                    .iter()
                    .zip(&narrow.density_values)
                    .map(|(x, f)| (x.to_string(), *f)),
            )?;
            w.csv(
                "density_wide.csv",
                ["point", "value"],
                wide.eval_points
                    .iter()
                    .zip(&wide.density_values)
                    .map(|(x, f)| (x.to_string(), *f)),
            )?;
            if svg {
                let pts: Vec<(f64, f64)> = narrow
                    .eval_points
                    .iter()
                    .copied()
                    .zip(narrow.density_values.iter().copied())
                    .collect();
                w.text(
                    "density.svg",
                    &line_plot(
                        "density of u(T, x)",
                        Axis {
                            label: "u",
                            log: false,
                        },
                        Axis {
                            label: "density",
                            log: false,
                        },
                        &pts,
                    ),
                )?;
            }
            Some(KdeSection {
                bandwidths: [narrow.bandwidth, wide.bandwidth],
                masses: [narrow.mass(), wide.mass()],
                note: "smoothness of the density cannot be certified from samples; two bandwidths and the small-ball curve are reported instead",
            })
        } else {
            None
        };
        reports.ensemble = Some(EnsembleSection {
            paths: e.paths,
            successful: xs.len(),
            failures: summary.failures.clone(),
            x_target: r.grid.point(r.x_index),
            mean,
            variance,
            moments: summary.moments.clone(),
            g_t,
            g_disc_t,
            additive_variance,
            variance_ratio: additive_variance.filter(|v| *v > 0.0).map(|v| variance / v),
            gaussian,
            pbound,
            kde,
        });
    }

    if let (Some(mc), Some(solver)) = (&a.malliavin, &solver) {
        let rs = malliavin::r_subgrid(r.grid.n_t, mc.r_stride);
        let samples = malliavin::malliavin_ensemble(solver, seed, mc.paths, r.x_index, &rs)?;
        let gammas: Vec<f64> = samples.iter().map(|s| s.gamma).collect();
        let g_disc_t = malliavin::g_disc(solver.lattice(), &r.green, horizon);
        let c = r.coeffs.sigma.lower_bound();
        let floor = c * c * g_disc_t;
        let mean_gamma = gammas.iter().sum::<f64>() / gammas.len() as f64;
        let eps = mc.eps_grid.clone().unwrap_or_else(|| {
            let base = if mean_gamma > 0.0 { mean_gamma } else { 1.0 };
            (-6..=2).map(|k| base * 2f64.powi(k)).collect()
        });
        let small_ball = malliavin::small_ball_curve(&gammas, &eps)?;
        w.csv(
            "gamma.csv",
            ["path_index", "gamma"],
            gammas.iter().enumerate().map(|(i, g)| (i.to_string(), *g)),
        )?;
        w.csv(
            "small_ball.csv",
            ["eps", "probability"],
            small_ball
                .eps
                .iter()
                .zip(&small_ball.probabilities)
                .map(|(e, p)| (e.to_string(), *p)),
        )?;
        if svg {
            let pts: Vec<(f64, f64)> = small_ball
                .eps
                .iter()
                .copied()
                .zip(small_ball.probabilities.iter().copied())
                .collect();
            w.text(
                "small_ball.svg",
                &line_plot(
                    "P(gamma < eps)",
                    Axis {
                        label: "eps",
                        log: true,
                    },
                    Axis {
                        label: "probability",
                        log: false,
                    },
                    &pts,
                ),
            )?;
        }
        reports.malliavin = Some(MalliavinSection {
            paths: mc.paths,
            r_stride: mc.r_stride,
            delta_r: samples.first().map_or(0.0, |s| s.delta_r),
            sigma_lower_bound: c,
            g_disc_t,
            floor,
            min_gamma: small_ball.min_gamma,
            mean_gamma,
            max_gamma: gammas.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            below_half_floor: gammas.iter().filter(|&&g| g < floor / 2.0).count(),
            small_ball,
        });
    }

    if a.any() {
        let body = serde_json::to_string_pretty(&reports).expect("reports serialize");
        w.text("reports.json", &(body + "\n"))?;
    }
    let mut files = w.files.clone();
    files.push("manifest.json".into());
    let manifest = Manifest {
        version: VERSION,
        config_hash: &hash,
        master_seed: seed,
        config: cfg,
        files: &files,
    };
    w.text(
        "manifest.json",
        &(serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n"),
    )?;
    Ok(())
}
