use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use srl_core::trainer::{self, Mode, EPISODE_LOG_HEADER};

use crate::error::CliError;
use crate::load_config;
use crate::run_dir::{self, RunManifest};

pub const SEED_ENV: &str = "SRL_SEED";

fn env_seed() -> Result<Option<u64>, CliError> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Usage(format!("{SEED_ENV} = '{v}' is not a non-negative integer"))),
        Err(_) => Ok(None),
    }
}

pub fn cmd_train(
    config: Option<&PathBuf>,
    mode: Option<&str>,
    seed: Option<u64>,
    out_dir: Option<&PathBuf>,
) -> Result<(), CliError> {
    let mut cfg = load_config(config)?;
    if let Some(m) = mode {
        cfg.train.mode = m.parse::<Mode>().map_err(|e| CliError::Usage(e.to_string()))?;
    }
    if let Some(s) = seed.or(env_seed()?) {
        cfg.train.seed = s;
    }
    cfg.validate().map_err(CliError::Config)?;
    let out_dir = out_dir
        .cloned()
        .unwrap_or_else(|| PathBuf::from("runs").join(format!("{}-seed{}", cfg.train.mode, cfg.train.seed)));
    std::fs::create_dir_all(&out_dir).map_err(CliError::write(&out_dir))?;

    let manifest = RunManifest {
        command: "train".into(),
        config_path: config.cloned(),
        out_dir: out_dir.clone(),
        seed: cfg.train.seed,
        timestamp: chrono::Utc::now().to_rfc3339(),
    };
    let cfg_path = out_dir.join(run_dir::CONFIG);
    std::fs::write(&cfg_path, cfg.to_text()).map_err(CliError::write(&cfg_path))?;
    let man_path = out_dir.join(run_dir::MANIFEST);
    std::fs::write(&man_path, manifest.render(&cfg)).map_err(CliError::write(&man_path))?;

    let log_path = out_dir.join(run_dir::EPISODES);
    let file = File::create(&log_path).map_err(CliError::write(&log_path))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "{EPISODE_LOG_HEADER}").map_err(CliError::write(&log_path))?;

    log::info!(
        "training {} for {} episodes (seed {}) into {}",
        cfg.train.mode,
        cfg.train.episodes,
        cfg.train.seed,
        out_dir.display()
    );
    let mut io_err = None;
    let every = (cfg.train.episodes / 10).max(1);
    let result = trainer::run_with(&cfg.train, &cfg.params, |r| {
        if io_err.is_none() {
            if let Err(e) = trainer::write_episode_row(&mut w, r) {
                io_err = Some(e);
            }
        }
        if r.m % every == 0 || r.m == cfg.train.episodes {
            log::info!(
                "episode {:>5}: theta = ({:.4}, {:.4}, {:.3}), x_bar = {:.4}, linf = {:.4}",
                r.m,
                r.theta.theta1,
                r.theta.theta2,
                r.theta.theta3,
                r.x_bar,
                r.linf_error
            );
        }
    });
    w.flush().map_err(CliError::write(&log_path))?;
    if let Some(e) = io_err {
        return Err(CliError::Write {
            path: log_path,
            source: e,
        });
    }
    let records = result?;
    println!("{}", log_path.display());
    if let Some(last) = records.last() {
        log::info!("final L-infinity error {:.4}, boundary {:.4}", last.linf_error, last.x_bar);
    }
    Ok(())
}
