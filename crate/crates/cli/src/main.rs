//! `srl`: train, evaluate oracles, validate invariants and export figure data.

mod error;
mod figures;
mod oracle;
mod run_dir;
mod train;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use srl_core::config::RunConfig;
use srl_core::validate::{self, Suite};

use crate::error::CliError;

#[derive(Parser)]
#[command(name = "srl", version, about = "Reinforcement learning for singular control with randomized activation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the benchmark or randomized actor-critic and write an episode log.
    Train {
        /// Flat `key = value` config; defaults reproduce the reference experiment.
        #[arg(long)]
        config: Option<PathBuf>,
        /// benchmark or randomized; overrides the config.
        #[arg(long)]
        mode: Option<String>,
        /// Overrides SRL_SEED and the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Defaults to `runs/<mode>-seed<seed>`.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Evaluate closed-form quantities on a grid and print CSV.
    Oracle {
        /// phi, psi, gamma, v or boundary.
        #[arg(long)]
        what: String,
        #[arg(long)]
        config: Option<PathBuf>,
        /// `lo..hi` (with --points) or a comma-separated list.
        #[arg(long, allow_hyphen_values = true, default_value = "-5..5")]
        x: String,
        /// Delay for psi.
        #[arg(long, allow_hyphen_values = true, default_value = "0")]
        q: String,
        /// Activated-fraction levels for v.
        #[arg(long, allow_hyphen_values = true, default_value = "0.1..0.9")]
        z: String,
        #[arg(long, default_value_t = 101)]
        points: usize,
        /// Write to this file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run invariant suites and report measured residuals.
    Validate {
        /// closedform, simulator, pe, pi or all.
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Turn episode logs into tidy plot data (mode, episode, series, value).
    Figures {
        #[arg(long)]
        run_dir: PathBuf,
        /// Second run to combine with the first.
        #[arg(long)]
        compare: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

pub fn load_config(path: Option<&PathBuf>) -> Result<RunConfig, CliError> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|source| CliError::Read {
                path: p.clone(),
                source,
            })?;
            RunConfig::parse(&text).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))
        }
    }
}

fn cmd_validate(suite: &str, config: Option<&PathBuf>) -> Result<(), CliError> {
    let suite: Suite = suite.parse().map_err(|e: srl_core::Error| CliError::Usage(e.to_string()))?;
    let cfg = load_config(config)?;
    let checks = validate::run(suite, &cfg.params)?;
    for c in &checks {
        println!("{c}");
    }
    let failed = checks.iter().filter(|c| !c.passed()).count();
    if failed > 0 {
        return Err(CliError::ChecksFailed {
            failed,
            total: checks.len(),
        });
    }
    println!("all {} checks passed", checks.len());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Train {
            config,
            mode,
            seed,
            out_dir,
        } => train::cmd_train(config.as_ref(), mode.as_deref(), *seed, out_dir.as_ref()),
        Command::Oracle {
            what,
            config,
            x,
            q,
            z,
            points,
            out,
        } => oracle::cmd_oracle(&oracle::OracleArgs {
            what,
            config: config.as_ref(),
            x,
            q,
            z,
            points: *points,
            out: out.as_ref(),
        }),
        Command::Validate { suite, config } => cmd_validate(suite, config.as_ref()),
        Command::Figures { run_dir, compare, out } => figures::cmd_figures(run_dir, compare.as_ref(), out.as_ref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
