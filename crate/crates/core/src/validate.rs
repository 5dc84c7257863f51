//! Invariant suites run by the `validate` command.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::closed_form::{ClosedForm, ModelParams};
use crate::error::{Error, Result};
use crate::numerics::{normal, stats};
use crate::param_family::{gamma_theta, Theta};
use crate::policy_eval::{clamp_gradient, ml_update_phi, raw_gradient_phi, PeConfig};
use crate::policy_iter::{iterate_boundary, PiConfig};
use crate::sde_sim::{
    conditional_activation_law, simulate_nonrandomized, simulate_randomized, simulate_randomized_with, RngSeed,
    TimeGrid,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    ClosedForm,
    Simulator,
    Pe,
    Pi,
    All,
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "closedform" => Ok(Suite::ClosedForm),
            "simulator" => Ok(Suite::Simulator),
            "pe" => Ok(Suite::Pe),
            "pi" => Ok(Suite::Pi),
            "all" => Ok(Suite::All),
            other => Err(Error::Config(format!(
                "unknown suite '{other}' (expected closedform, simulator, pe, pi or all)"
            ))),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::ClosedForm => "closedform",
            Suite::Simulator => "simulator",
            Suite::Pe => "pe",
            Suite::Pi => "pi",
            Suite::All => "all",
        })
    }
}

/// One measured invariant: passes when `value <= tol`.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub suite: Suite,
    pub name: String,
    pub value: f64,
    pub tol: f64,
}

impl Check {
    fn new(suite: Suite, name: impl Into<String>, value: f64, tol: f64) -> Self {
        Check {
            suite,
            name: name.into(),
            value,
            tol,
        }
    }

    pub fn passed(&self) -> bool {
        self.value <= self.tol
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}/{}: {:.3e} (tol {:.1e})",
            if self.passed() { "PASS" } else { "FAIL" },
            self.suite,
            self.name,
            self.value,
            self.tol
        )
    }
}

pub fn run(suite: Suite, params: &ModelParams) -> Result<Vec<Check>> {
    match suite {
        Suite::ClosedForm => closed_form_suite(params),
        Suite::Simulator => simulator_suite(params),
        Suite::Pe => pe_suite(params),
        Suite::Pi => pi_suite(params),
        Suite::All => {
            let parts = [Suite::ClosedForm, Suite::Simulator, Suite::Pe, Suite::Pi]
                .into_par_iter()
                .map(|s| run(s, params))
                .collect::<Result<Vec<_>>>()?;
            Ok(parts.into_iter().flatten().collect())
        }
    }
}

fn truth(cf: &ClosedForm) -> Theta {
    Theta::truth(cf)
}

fn closed_form_suite(p: &ModelParams) -> Result<Vec<Check>> {
    let s = Suite::ClosedForm;
    let cf = ClosedForm::new(*p)?;
    let k = *cf.constants();
    let s2 = p.sigma * p.sigma;
    let char_eq = |r: f64| (0.5 * s2 * r * r + p.mu * r - p.beta).abs();
    let left = cf.waiting_branch(k.x_hat);
    let mut out = vec![
        Check::new(s, "characteristic root b", char_eq(k.b), 1e-12),
        Check::new(s, "characteristic root l", char_eq(k.l), 1e-12),
        Check::new(s, "particular coefficient", (k.c_a * p.discount_gap() - 1.0).abs(), 1e-12),
        Check::new(s, "smooth fit first order", (left[1] - p.c).abs(), 1e-10),
        Check::new(s, "smooth fit second order", left[2].abs(), 1e-8),
    ];
    let xs: Vec<f64> = (0..200).map(|i| k.x_hat - 10.0 + 20.0 * i as f64 / 199.0).collect();
    let mut vi = 0.0f64;
    let mut sign = 0.0f64;
    for &x in &xs {
        let (pde, grad) = cf.vi_residual(x);
        vi = vi.max(pde.min(grad).abs());
        sign = sign.max((-pde).max(-grad).max(0.0));
    }
    out.push(Check::new(s, "variational inequality min-residual", vi, 1e-8));
    out.push(Check::new(s, "variational inequality brackets nonnegative", sign, 1e-8));
    let mut mono = 0.0f64;
    for w in xs.windows(2) {
        mono = mono.max(cf.gamma(w[1]) - cf.gamma(w[0]));
    }
    out.push(Check::new(s, "activation boundary decreasing", mono, 0.0));
    out.push(Check::new(s, "activation boundary at -inf", (1.0 - cf.gamma(-300.0)).abs(), 1e-6));
    out.push(Check::new(s, "activation boundary at +inf", cf.gamma(300.0), 1e-6));
    let psi0 = xs.iter().map(|&x| (cf.psi(x, 0.0) - cf.phi(x)).abs()).fold(0.0, f64::max);
    out.push(Check::new(s, "delayed value at zero delay", psi0, 1e-10));
    let mut psi_q = 0.0f64;
    for &(x, q) in &[(-2.0, 0.5), (0.5, 1.0), (1.0, 3.0), (3.0, 10.0)] {
        let closed = cf.psi(x, q);
        psi_q = psi_q.max((closed - cf.psi_quadrature(x, q)?).abs() / closed.abs().max(1.0));
    }
    out.push(Check::new(s, "delayed value closed form vs quadrature", psi_q, 1e-8));
    Ok(out)
}

fn simulator_suite(p: &ModelParams) -> Result<Vec<Check>> {
    let s = Suite::Simulator;
    let mut out = Vec::new();
    // uncontrolled terminal law
    let grid = TimeGrid::new(1.0, 50)?;
    let n = 4000;
    let terminal = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            simulate_randomized_with(&grid, 0.5, 0.0, 0.0, 0.0, p, RngSeed::new(101, i), |_, _| 0.0)
                .map(|tr| tr.terminal.x)
        })
        .collect::<Result<Vec<_>>>()?;
    let (m, sd) = (0.5 + p.mu, p.sigma);
    let ks = stats::ks_statistic(&terminal, |x| normal::cdf((x - m) / sd));
    out.push(Check::new(s, "uncontrolled terminal KS distance", ks, stats::ks_critical_1pct(n)));

    // reflection
    let grid = TimeGrid::new(10.0, 500)?;
    let mut above = 0.0f64;
    let mut decrease = 0.0f64;
    for i in 0..200u64 {
        let tr = simulate_nonrandomized(&grid, 2.0, 0.0, 0.5, p, RngSeed::new(202, i));
        for k in 0..tr.len() {
            above = above.max(tr.post_jump[k].x - 0.5).max(tr.pre_state(k + 1).x - 0.5);
            decrease = decrease
                .max(tr.pre_jump[k].xi - tr.post_jump[k].xi)
                .max(tr.post_jump[k].xi - tr.pre_state(k + 1).xi);
        }
    }
    out.push(Check::new(s, "reflected state stays below boundary", above, 0.0));
    out.push(Check::new(s, "cumulative control nondecreasing", decrease, 0.0));

    // activation law
    let grid = TimeGrid::new(10.0, 500)?;
    let th = Theta::new(0.15, 0.4, 15.0);
    let (x_bar, lambda) = (-2.5, p.lambda);
    let episodes = 20_000;
    let times = [50usize, 200, 499];
    let rows = (0..episodes as u64)
        .into_par_iter()
        .map(|i| {
            let seed = RngSeed::new(303, i);
            let tr = simulate_randomized(&grid, 1.0, 0.0, 0.0, x_bar, &th, p, lambda, seed)?;
            let law = conditional_activation_law(&grid, 1.0, 0.0, p, seed, |_, x| {
                gamma_theta(x, &th, x_bar, p.c, p.beta, lambda)
            });
            Ok(times.map(|k| {
                let hit = tr.activation_step.is_some_and(|a| a <= k);
                (if hit { 1.0 } else { 0.0 }, law[k])
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    for (j, &k) in times.iter().enumerate() {
        let diff: Vec<f64> = rows.iter().map(|r| r[j].0 - r[j].1).collect();
        let (md, se) = stats::mean_stderr(&diff);
        out.push(Check::new(
            s,
            format!("activation frequency vs activation law at step {k} (z-score)"),
            md.abs() / se.max(1e-300),
            3.0,
        ));
    }
    Ok(out)
}

fn pe_suite(p: &ModelParams) -> Result<Vec<Check>> {
    let s = Suite::Pe;
    let cf = ClosedForm::new(*p)?;
    let th = truth(&cf);
    let x_hat = cf.constants().x_hat;
    let grid = TimeGrid::new(100.0, 5000)?;
    let cfg = PeConfig::default();
    let episodes = 200;
    let rows = (0..episodes as u64)
        .into_par_iter()
        .map(|i| {
            let tr = simulate_nonrandomized(&grid, 1.0, 0.0, x_hat, p, RngSeed::new(404, i));
            let g = raw_gradient_phi(&th, x_hat, &tr, p, true)?;
            let far = Theta::new(0.15, 0.4, 15.0);
            let next = ml_update_phi(&far, -2.5, &tr, 1, p, &cfg)?;
            Ok((g, next.is_feasible(p.beta)))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::new();
    for j in 0..3 {
        let comp: Vec<f64> = rows.iter().map(|r| r.0[j]).collect();
        let (m, se) = stats::mean_stderr(&comp);
        out_push_z(s, &mut out, j, m, se);
    }
    let clamp_excess = rows
        .iter()
        .flat_map(|r| {
            let c = clamp_gradient(r.0, cfg.grad_clip);
            (0..3).map(move |j| c[j].abs() - cfg.grad_clip[j])
        })
        .fold(f64::NEG_INFINITY, f64::max)
        .max(0.0);
    out.push(Check::new(s, "clamped gradient within bound", clamp_excess, 0.0));
    let infeasible = rows.iter().filter(|r| !r.1).count();
    out.push(Check::new(s, "updated parameters feasible (count of violations)", infeasible as f64, 0.0));
    Ok(out)
}

fn out_push_z(s: Suite, out: &mut Vec<Check>, j: usize, m: f64, se: f64) {
    out.push(Check::new(
        s,
        format!("truth stationarity theta{} (z-score)", j + 1),
        m.abs() / se.max(1e-300),
        3.0,
    ));
}

fn pi_suite(p: &ModelParams) -> Result<Vec<Check>> {
    let s = Suite::Pi;
    let cf = ClosedForm::new(*p)?;
    let th = truth(&cf);
    let x_hat = cf.constants().x_hat;
    let cfg = PiConfig::default();
    let mut out = vec![Check::new(
        s,
        "fixed point",
        (iterate_boundary(&th, x_hat, p.beta, p.c, &cfg)? - x_hat).abs(),
        1e-8,
    )];
    for start in [x_hat - 2.0, x_hat + 2.0] {
        let mut x = start;
        let mut steps = 0;
        while (x - x_hat).abs() >= 1e-4 && steps < 60 {
            x = iterate_boundary(&th, x, p.beta, p.c, &cfg)?;
            steps += 1;
        }
        out.push(Check::new(
            s,
            format!("convergence from {start:+.4} within 60 steps"),
            (x - x_hat).abs(),
            1e-4,
        ));
    }
    Ok(out)
}
