//! Flat `key = value` run configuration with `#` comments.
//!
//! Every key is optional; missing keys keep the reference experiment values.
//! Vector-valued keys take three comma-separated numbers.

use std::collections::HashSet;
use std::fmt::Write as _;

use crate::closed_form::ModelParams;
use crate::error::{Error, Result};
use crate::param_family::Theta;
use crate::trainer::{Mode, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub params: ModelParams,
    pub train: TrainConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            params: ModelParams::reference(),
            train: TrainConfig::reference(Mode::Benchmark),
        }
    }
}

pub const KEYS: &[&str] = &[
    "mu",
    "sigma",
    "a",
    "c",
    "beta",
    "lambda",
    "x0",
    "horizon",
    "steps",
    "episodes",
    "theta_init",
    "x_bar_init",
    "alpha",
    "schedule_base",
    "grad_clip",
    "delta_bc",
    "include_control_costs",
    "alpha_pi",
    "root_tol",
    "max_bracket",
    "seed",
    "mode",
];

fn bad(line: usize, key: &str, value: &str, what: &str) -> Error {
    Error::Config(format!("line {line}: {key} = '{value}' is not {what}"))
}

fn num(line: usize, key: &str, v: &str) -> Result<f64> {
    v.parse::<f64>()
        .ok()
        .filter(|x| !x.is_nan())
        .ok_or_else(|| bad(line, key, v, "a number"))
}

fn int<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<T> {
    v.parse::<T>().map_err(|_| bad(line, key, v, "a non-negative integer"))
}

fn triple(line: usize, key: &str, v: &str) -> Result<[f64; 3]> {
    let parts: Vec<&str> = v.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(bad(line, key, v, "three comma-separated numbers"));
    }
    Ok([num(line, key, parts[0])?, num(line, key, parts[1])?, num(line, key, parts[2])?])
}

fn fmt_triple(v: [f64; 3]) -> String {
    format!("{:?}, {:?}, {:?}", v[0], v[1], v[2])
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut seen = HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {line}: expected 'key = value', got '{content}'")))?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(Error::Config(format!("line {line}: unknown key '{key}'")));
            }
            if !seen.insert(key.to_string()) {
                return Err(Error::Config(format!("line {line}: duplicate key '{key}'")));
            }
            cfg.set(line, key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, line: usize, key: &str, v: &str) -> Result<()> {
        let p = &mut self.params;
        let t = &mut self.train;
        match key {
            "mu" => p.mu = num(line, key, v)?,
            "sigma" => p.sigma = num(line, key, v)?,
            "a" => p.a = num(line, key, v)?,
            "c" => p.c = num(line, key, v)?,
            "beta" => p.beta = num(line, key, v)?,
            "lambda" => {
                p.lambda = num(line, key, v)?;
                t.lambda = p.lambda;
            }
            "x0" => t.x0 = num(line, key, v)?,
            "horizon" => t.horizon = num(line, key, v)?,
            "steps" => t.steps = int(line, key, v)?,
            "episodes" => t.episodes = int(line, key, v)?,
            "theta_init" => t.theta_init = Theta::from_array(triple(line, key, v)?),
            "x_bar_init" => t.x_bar_init = num(line, key, v)?,
            "alpha" => t.pe.alpha = triple(line, key, v)?,
            "schedule_base" => t.pe.schedule_base = num(line, key, v)?,
            "grad_clip" => t.pe.grad_clip = triple(line, key, v)?,
            "delta_bc" => t.pe.delta_bc = num(line, key, v)?,
            "include_control_costs" => {
                t.pe.include_control_costs = v.parse().map_err(|_| bad(line, key, v, "true or false"))?
            }
            "alpha_pi" => t.pi.alpha_pi = num(line, key, v)?,
            "root_tol" => t.pi.root_tol = num(line, key, v)?,
            "max_bracket" => t.pi.max_bracket = int(line, key, v)?,
            "seed" => t.seed = int(line, key, v)?,
            "mode" => t.mode = v.parse()?,
            _ => unreachable!("key list and setter out of sync"),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate(&self.params)
    }

    /// Serializes every key; `parse(to_text())` reproduces `self` exactly.
    pub fn to_text(&self) -> String {
        let p = &self.params;
        let t = &self.train;
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("mu", format!("{:?}", p.mu));
        kv("sigma", format!("{:?}", p.sigma));
        kv("a", format!("{:?}", p.a));
        kv("c", format!("{:?}", p.c));
        kv("beta", format!("{:?}", p.beta));
        kv("lambda", format!("{:?}", p.lambda));
        kv("x0", format!("{:?}", t.x0));
        kv("horizon", format!("{:?}", t.horizon));
        kv("steps", t.steps.to_string());
        kv("episodes", t.episodes.to_string());
        kv("theta_init", fmt_triple(t.theta_init.to_array()));
        kv("x_bar_init", format!("{:?}", t.x_bar_init));
        kv("alpha", fmt_triple(t.pe.alpha));
        kv("schedule_base", format!("{:?}", t.pe.schedule_base));
        kv("grad_clip", fmt_triple(t.pe.grad_clip));
        kv("delta_bc", format!("{:?}", t.pe.delta_bc));
        kv("include_control_costs", t.pe.include_control_costs.to_string());
        kv("alpha_pi", format!("{:?}", t.pi.alpha_pi));
        kv("root_tol", format!("{:?}", t.pi.root_tol));
        kv("max_bracket", t.pi.max_bracket.to_string());
        kv("seed", t.seed.to_string());
        kv("mode", t.mode.to_string());
        s
    }
}
