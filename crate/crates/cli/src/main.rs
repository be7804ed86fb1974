use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use spdelab_cli::config::ExperimentConfig;
use spdelab_cli::{run, validate, RunOptions};

#[derive(Parser)]
#[command(
    name = "spdelab",
    version,
    about = "SPDE experiments driven by spatially homogeneous noise"
)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "SPDELAB_THREADS")]
    threads: Option<usize>,
    /// Master seed, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory, overriding the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every enabled analysis and write the artifacts.
    Run { config: PathBuf },
    /// Check a config without running anything.
    Validate { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { config } => {
            let cfg = match ExperimentConfig::load(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("{e}");
                    return ExitCode::from(2);
                }
            };
            let v = validate(&cfg);
            for d in &v.diagnostics {
                eprintln!("{d}");
            }
            if v.is_ok() {
                println!("{}: ok", config.display());
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Command::Run { config } => {
            let opts = RunOptions {
                threads: cli.threads,
                seed: cli.seed,
                out: cli.out,
            };
            match run(&config, &opts) {
                Ok(outcome) => {
                    for d in &outcome.warnings {
                        eprintln!("{d}");
                    }
                    println!(
                        "wrote {} files to {}",
                        outcome.files.len(),
                        outcome.out_dir.display()
                    );
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("{e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
    }
}
