//! Offline actor-critic loops: simulate an episode, update the critic, move the
//! boundary, record metrics.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use rayon::prelude::*;

use crate::closed_form::{ClosedForm, ModelParams};
use crate::error::{Error, Result};
use crate::numerics::stats;
use crate::param_family::{phi_theta, Theta};
use crate::policy_eval::{ml_update_phi, ml_update_u_activated, ml_update_u_inactive, PeConfig};
use crate::policy_iter::{iterate_boundary, PiConfig};
use crate::sde_sim::{
    path_cost_nonrandomized, simulate_nonrandomized, simulate_randomized, RngSeed, TimeGrid,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Benchmark,
    Randomized,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Benchmark => "benchmark",
            Mode::Randomized => "randomized",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "benchmark" => Ok(Mode::Benchmark),
            "randomized" => Ok(Mode::Randomized),
            other => Err(Error::Config(format!(
                "unknown mode '{other}' (expected benchmark or randomized)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub x0: f64,
    pub horizon: f64,
    pub steps: usize,
    pub episodes: usize,
    pub theta_init: Theta,
    pub x_bar_init: f64,
    pub pe: PeConfig,
    pub pi: PiConfig,
    pub lambda: f64,
    pub seed: u64,
    pub mode: Mode,
}

impl TrainConfig {
    /// The reference experiment: T=100, Δt=0.02, M=500, θ=(0.15, 0.4, 15),
    /// x̄=−2.5, x0=1, λ=0.5.
    pub fn reference(mode: Mode) -> Self {
        TrainConfig {
            x0: 1.0,
            horizon: 100.0,
            steps: 5000,
            episodes: 500,
            theta_init: Theta::new(0.15, 0.4, 15.0),
            x_bar_init: -2.5,
            pe: PeConfig::default(),
            pi: PiConfig::default(),
            lambda: 0.5,
            seed: 0,
            mode,
        }
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.horizon, self.steps).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self, params: &ModelParams) -> Result<()> {
        self.grid()?;
        if self.episodes == 0 {
            return Err(Error::Config("number of episodes M must be at least 1".into()));
        }
        if !self.x0.is_finite() || !self.x_bar_init.is_finite() {
            return Err(Error::Config("x0 and x_bar_init must be finite".into()));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config(format!("lambda = {} must be positive", self.lambda)));
        }
        self.pe.validate()?;
        self.pi.validate()?;
        params.validate().map_err(|e| Error::Config(e.to_string()))?;
        if !self.theta_init.is_feasible(params.beta) {
            return Err(Error::Config(format!(
                "initial critic parameters {:?} are infeasible",
                self.theta_init
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeRecord {
    /// Episode index, starting at 1.
    pub m: usize,
    pub theta: Theta,
    pub x_bar: f64,
    pub linf_error: f64,
    /// `+∞` when the episode never activated control.
    pub activation_time: f64,
    pub total_cost: f64,
}

/// Sup-distance between `Φ^θ(·; x̄)` and the true `Φ` on a uniform grid.
pub fn linf_error_on(cf: &ClosedForm, theta: &Theta, x_bar: f64, lo: f64, hi: f64, points: usize) -> f64 {
    let c = cf.params().c;
    (0..points)
        .map(|i| {
            let x = lo + (hi - lo) * i as f64 / (points - 1) as f64;
            (phi_theta(x, theta, x_bar, c) - cf.phi(x)).abs()
        })
        .fold(0.0, f64::max)
}

/// L∞ error on 2001 points of `[−100, 100]`.
pub fn linf_error(theta: &Theta, x_bar: f64, params: &ModelParams) -> Result<f64> {
    let cf = ClosedForm::new(*params)?;
    Ok(linf_error_on(&cf, theta, x_bar, -100.0, 100.0, 2001))
}

/// Realized discounted cost of `n_paths` reflected paths under `{x < x̄}`.
/// Path `i` uses stream `i` of `seed`, so different boundaries share noise.
pub fn mc_path_costs(
    x_bar: f64,
    params: &ModelParams,
    x0: f64,
    horizon: f64,
    steps: usize,
    n_paths: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if n_paths == 0 {
        return Err(Error::InvalidParams("n_paths must be at least 1".into()));
    }
    let grid = TimeGrid::new(horizon, steps)?;
    Ok((0..n_paths as u64)
        .into_par_iter()
        .map(|i| path_cost_nonrandomized(&grid, x0, x_bar, params, RngSeed::new(seed, i)))
        .collect())
}

/// Mean and standard error of [`mc_path_costs`].
pub fn mc_value_estimate(
    x_bar: f64,
    params: &ModelParams,
    x0: f64,
    horizon: f64,
    steps: usize,
    n_paths: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let costs = mc_path_costs(x_bar, params, x0, horizon, steps, n_paths, seed)?;
    Ok(stats::mean_stderr(&costs))
}

fn wrap(m: usize) -> impl Fn(Error) -> Error {
    move |e| Error::Episode {
        episode: m,
        source: Box::new(e),
    }
}

/// Runs the configured mode, calling `observe` after every episode.
pub fn run_with<F: FnMut(&EpisodeRecord)>(
    cfg: &TrainConfig,
    params: &ModelParams,
    mut observe: F,
) -> Result<Vec<EpisodeRecord>> {
    cfg.validate(params)?;
    let grid = cfg.grid()?;
    let cf = ClosedForm::new(*params)?;
    let mut theta = cfg.theta_init;
    let mut x_bar = cfg.x_bar_init;
    let mut out = Vec::with_capacity(cfg.episodes);
    for m in 1..=cfg.episodes {
        let seed = RngSeed::new(cfg.seed, m as u64);
        let err = wrap(m);
        let (next, tau, cost) = match cfg.mode {
            Mode::Benchmark => {
                let tr = simulate_nonrandomized(&grid, cfg.x0, 0.0, x_bar, params, seed);
                let th = ml_update_phi(&theta, x_bar, &tr, m, params, &cfg.pe).map_err(&err)?;
                (th, tr.activation_time(), tr.total_cost())
            }
            Mode::Randomized => {
                let tr = simulate_randomized(&grid, cfg.x0, 0.0, 0.0, x_bar, &theta, params, cfg.lambda, seed)
                    .map_err(&err)?;
                let th = if tr.is_activated() {
                    ml_update_u_activated(&theta, x_bar, &tr, m, params, &cfg.pe)
                } else {
                    ml_update_u_inactive(&theta, &tr, m, params, &cfg.pe)
                }
                .map_err(&err)?;
                (th, tr.activation_time(), tr.total_cost())
            }
        };
        theta = next;
        x_bar = iterate_boundary(&theta, x_bar, params.beta, params.c, &cfg.pi).map_err(&err)?;
        let rec = EpisodeRecord {
            m,
            theta,
            x_bar,
            linf_error: linf_error_on(&cf, &theta, x_bar, -100.0, 100.0, 2001),
            activation_time: tau,
            total_cost: cost,
        };
        observe(&rec);
        out.push(rec);
    }
    Ok(out)
}

pub fn run(cfg: &TrainConfig, params: &ModelParams) -> Result<Vec<EpisodeRecord>> {
    run_with(cfg, params, |_| {})
}

/// Non-randomized actor-critic.
pub fn run_benchmark(cfg: &TrainConfig, params: &ModelParams) -> Result<Vec<EpisodeRecord>> {
    if cfg.mode != Mode::Benchmark {
        return Err(Error::Config("run_benchmark needs mode = benchmark".into()));
    }
    run(cfg, params)
}

/// Randomized actor-critic.
pub fn run_randomized(cfg: &TrainConfig, params: &ModelParams) -> Result<Vec<EpisodeRecord>> {
    if cfg.mode != Mode::Randomized {
        return Err(Error::Config("run_randomized needs mode = randomized".into()));
    }
    run(cfg, params)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeedSummary {
    pub seed: u64,
    pub initial_linf: f64,
    pub final_linf: f64,
    pub final_x_bar: f64,
    pub final_theta: Theta,
    pub activated_episodes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub runs: Vec<SeedSummary>,
    pub median_final_linf: f64,
    pub median_boundary_gap: f64,
}

/// Repeats `cfg` over `seeds` in parallel and summarizes final metrics.
pub fn run_seeds(cfg: &TrainConfig, params: &ModelParams, seeds: &[u64]) -> Result<SweepSummary> {
    let cf = ClosedForm::new(*params)?;
    let x_hat = cf.constants().x_hat;
    let initial_linf = linf_error_on(&cf, &cfg.theta_init, cfg.x_bar_init, -100.0, 100.0, 2001);
    let runs = seeds
        .par_iter()
        .map(|&seed| {
            let c = TrainConfig { seed, ..*cfg };
            let recs = run(&c, params)?;
            let last = recs.last().expect("at least one episode");
            Ok(SeedSummary {
                seed,
                initial_linf,
                final_linf: last.linf_error,
                final_x_bar: last.x_bar,
                final_theta: last.theta,
                activated_episodes: recs.iter().filter(|r| r.activation_time.is_finite()).count(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let linf: Vec<f64> = runs.iter().map(|r| r.final_linf).collect();
    let gaps: Vec<f64> = runs.iter().map(|r| (r.final_x_bar - x_hat).abs()).collect();
    Ok(SweepSummary {
        median_final_linf: stats::median(&linf),
        median_boundary_gap: stats::median(&gaps),
        runs,
    })
}

pub const EPISODE_LOG_HEADER: &str = "m,theta1,theta2,theta3,x_bar,linf_error,activation_time,total_cost";

fn fmt_num(v: f64) -> String {
    if v.is_infinite() && v > 0.0 {
        "inf".to_string()
    } else {
        format!("{v:.16e}")
    }
}

pub fn write_episode_row<W: Write>(w: &mut W, r: &EpisodeRecord) -> io::Result<()> {
    writeln!(
        w,
        "{},{},{},{},{},{},{},{}",
        r.m,
        fmt_num(r.theta.theta1),
        fmt_num(r.theta.theta2),
        fmt_num(r.theta.theta3),
        fmt_num(r.x_bar),
        fmt_num(r.linf_error),
        fmt_num(r.activation_time),
        fmt_num(r.total_cost),
    )
}

pub fn write_episode_log<W: Write>(mut w: W, records: &[EpisodeRecord]) -> io::Result<()> {
    writeln!(w, "{EPISODE_LOG_HEADER}")?;
    for r in records {
        write_episode_row(&mut w, r)?;
    }
    Ok(())
}

/// Parses a log written by [`write_episode_log`].
pub fn read_episode_log(text: &str) -> Result<Vec<EpisodeRecord>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == EPISODE_LOG_HEADER => {}
        Some(h) => return Err(Error::Trace(format!("unexpected episode log header '{h}'"))),
        None => return Err(Error::Trace("empty episode log".into())),
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 8 {
            return Err(Error::Trace(format!("row {}: expected 8 fields, got {}", i + 2, f.len())));
        }
        let num = |j: usize| -> Result<f64> {
            f[j].trim()
                .parse::<f64>()
                .map_err(|_| Error::Trace(format!("row {}: bad number '{}'", i + 2, f[j])))
        };
        out.push(EpisodeRecord {
            m: f[0]
                .trim()
                .parse()
                .map_err(|_| Error::Trace(format!("row {}: bad episode index '{}'", i + 2, f[0])))?,
            theta: Theta::new(num(1)?, num(2)?, num(3)?),
            x_bar: num(4)?,
            linf_error: num(5)?,
            activation_time: num(6)?,
            total_cost: num(7)?,
        });
    }
    Ok(out)
}
