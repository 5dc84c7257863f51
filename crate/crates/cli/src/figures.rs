use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use srl_core::config::RunConfig;
use srl_core::param_family::Theta;
use srl_core::trainer::{read_episode_log, EpisodeRecord};
use srl_core::ClosedForm;

use crate::error::CliError;
use crate::run_dir;

pub const HEADER: &str = "mode,episode,series,value";

struct Run {
    label: String,
    cfg: RunConfig,
    records: Vec<EpisodeRecord>,
}

fn load(dir: &Path) -> Result<Run, CliError> {
    if !dir.is_dir() {
        return Err(CliError::Usage(format!("{} is not a run directory", dir.display())));
    }
    let cfg = run_dir::read_config(dir)?;
    let path = dir.join(run_dir::EPISODES);
    let text = std::fs::read_to_string(&path).map_err(|source| CliError::Read {
        path: path.clone(),
        source,
    })?;
    let records = read_episode_log(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    Ok(Run {
        label: cfg.train.mode.to_string(),
        cfg,
        records,
    })
}

fn append(out: &mut String, run: &Run) -> Result<(), CliError> {
    let cf = ClosedForm::new(run.cfg.params).map_err(CliError::Config)?;
    let truth = Theta::truth(&cf);
    let x_hat = cf.constants().x_hat;
    let mode = &run.label;
    for r in &run.records {
        let m = r.m;
        let rows = [
            ("theta1", r.theta.theta1),
            ("theta2", r.theta.theta2),
            ("theta3", r.theta.theta3),
            ("x_bar", r.x_bar),
            ("linf_error", r.linf_error),
            ("theta1_true", truth.theta1),
            ("theta2_true", truth.theta2),
            ("theta3_true", truth.theta3),
            ("x_bar_true", x_hat),
        ];
        for (series, v) in rows {
            let _ = writeln!(out, "{mode},{m},{series},{v:?}");
        }
    }
    Ok(())
}

pub fn render(run_dir: &Path, compare: Option<&Path>) -> Result<String, CliError> {
    let mut runs = vec![load(run_dir)?];
    if let Some(dir) = compare {
        runs.push(load(dir)?);
        if runs[0].label == runs[1].label {
            for r in &mut runs {
                r.label = format!("{}-seed{}", r.cfg.train.mode, r.cfg.train.seed);
            }
        }
    }
    let mut out = format!("{HEADER}\n");
    for r in &runs {
        append(&mut out, r)?;
    }
    Ok(out)
}

pub fn cmd_figures(run_dir: &PathBuf, compare: Option<&PathBuf>, out: Option<&PathBuf>) -> Result<(), CliError> {
    let text = render(run_dir, compare.map(|p| p.as_path()))?;
    match out {
        Some(p) => std::fs::write(p, text).map_err(CliError::write(p)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
