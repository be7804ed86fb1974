//! Config-driven runner: `validate` checks an experiment document, `run`
//! executes it and writes reports, CSV plot data, optional SVG plots and a
//! reproducibility manifest.

pub mod config;
pub mod plot;
pub mod run;
pub mod validate;

pub use config::ExperimentConfig;
pub use run::{run, run_config, RunError, RunOptions, RunOutcome};
pub use validate::{validate, Diagnostic, Severity, Validation};
