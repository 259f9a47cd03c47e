//! `r2r`: run, sweep and inspect continual-learning experiments.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use r2r_core::pipeline::{run_pipeline, run_sweep, validate_config, EvalReport, ReplayMode, RunConfig};
use r2r_core::R2rError;
use tracing_subscriber::EnvFilter;

#[derive(Parser, Debug)]
#[command(name = "r2r", version, about = "Unsupervised continual learning with uncertainty-driven replay")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the full task stream once.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_parser = parse_replay)]
        replay: Option<ReplayMode>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides `sidecar_url` from the config.
        #[arg(long, env = "R2R_SIDECAR_URL")]
        sidecar_url: Option<String>,
    },
    /// Paired runs over samples-per-cluster values.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        samples: Vec<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, env = "R2R_SIDECAR_URL")]
        sidecar_url: Option<String>,
    },
    /// Print the summary of a finished run.
    Inspect {
        #[arg(long)]
        run: PathBuf,
        /// Print the raw report JSON instead.
        #[arg(long)]
        json: bool,
    },
}

fn parse_replay(s: &str) -> Result<ReplayMode, String> {
    s.parse().map_err(|e: R2rError| e.to_string())
}

fn exit_code(e: &R2rError) -> u8 {
    match e.root() {
        R2rError::Config { .. } | R2rError::UnknownKey { .. } => 2,
        R2rError::Format { .. } | R2rError::Io(_) | R2rError::Image(_) | R2rError::Empty(_) | R2rError::Json(_) => 3,
        R2rError::Sidecar(_) => 4,
        R2rError::Divergence { .. } => 5,
        _ => 1,
    }
}

fn load(path: &PathBuf, seed: Option<u64>, out: Option<PathBuf>, sidecar: Option<String>) -> Result<RunConfig, R2rError> {
    let raw = std::fs::read_to_string(path).map_err(|e| R2rError::Config {
        field: "<file>".into(),
        reason: format!("{}: {e}", path.display()),
    })?;
    let mut cfg = validate_config(&raw)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(o) = out {
        cfg.out_dir = o.to_string_lossy().into_owned();
    }
    if let Some(url) = sidecar {
        cfg.sidecar_url = url;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<(), R2rError> {
    match cli.command {
        Command::Run {
            config,
            replay,
            seed,
            out,
            sidecar_url,
        } => {
            let mut cfg = load(&config, seed, out, sidecar_url)?;
            if let Some(r) = replay {
                cfg.replay = r;
            }
            let report = run_pipeline(&cfg)?;
            print!("{}", report.summary());
        }
        Command::Sweep {
            config,
            samples,
            seed,
            out,
            sidecar_url,
        } => {
            let cfg = load(&config, seed, out, sidecar_url)?;
            print!("{}", run_sweep(&cfg, &samples)?.to_csv());
        }
        Command::Inspect { run, json } => {
            let report = EvalReport::load(&run)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                print!("{}", report.summary());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    tracing_subscriber::fmt()
        .json()
        .with_writer(std::io::stderr)
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .init();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            tracing::error!(error = %e, "r2r failed");
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_kinds_map_to_documented_exit_codes() {
        let config = R2rError::Config { field: "eta".into(), reason: "negative".into() };
        let wrapped = R2rError::Stage { stage: "A", task: 2, source: Box::new(R2rError::Divergence { epoch: 0, loss: f64::NAN }) };
        assert_eq!(exit_code(&config), 2);
        assert_eq!(exit_code(&R2rError::Format { offset: 0, reason: "short".into() }), 3);
        assert_eq!(exit_code(&R2rError::Sidecar("down".into())), 4);
        assert_eq!(exit_code(&wrapped), 5);
        assert_eq!(exit_code(&R2rError::UnknownCluster(3)), 1);
    }
}
