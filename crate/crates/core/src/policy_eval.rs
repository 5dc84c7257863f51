//! Offline martingale-loss updates of the critic parameters.
//!
//! Every rule has the same shape: a raw sum over steps of
//! `[−e^{−βt_n}V^θ(X_{t_n}) + Σ_{k≥n} cost_k]·∇_θV^θ(X_{t_n})`, clamped per
//! component to `[−M_gc, M_gc]`, scaled by `α·l(m)·Δt`, added to `θ`, then
//! projected back onto the feasible set.

use crate::closed_form::ModelParams;
use crate::error::{Error, Result};
use crate::param_family::{
    clip_full, clip_uncontrolled, grad_theta_phi, grad_theta_u, grad_theta_u_inf, phi_theta,
    u_inf_theta, u_theta, Theta,
};
use crate::sde_sim::EpisodeTrace;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeConfig {
    /// Initial learning rate per component.
    pub alpha: [f64; 3],
    /// Base of the schedule `l(m) = base^{−m}`.
    pub schedule_base: f64,
    /// Bound `M_gc` on each summed gradient component.
    pub grad_clip: [f64; 3],
    pub delta_bc: f64,
    /// Add control costs `c_k` to the suffix sums of the reflected-path rule.
    pub include_control_costs: bool,
}

impl Default for PeConfig {
    fn default() -> Self {
        PeConfig {
            alpha: [0.1, 0.1, 1.0],
            schedule_base: 1.01,
            grad_clip: [1.0, 1.0, 10.0],
            delta_bc: 1e-3,
            include_control_costs: true,
        }
    }
}

impl PeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.alpha.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            return Err(Error::Config(format!("learning rates {:?} must be positive", self.alpha)));
        }
        if self.grad_clip.iter().any(|g| !(*g > 0.0)) {
            return Err(Error::Config(format!("gradient clips {:?} must be positive", self.grad_clip)));
        }
        if !(self.schedule_base >= 1.0 && self.schedule_base.is_finite()) {
            return Err(Error::Config(format!(
                "schedule base {} must be at least 1",
                self.schedule_base
            )));
        }
        if !(self.delta_bc > 0.0) {
            return Err(Error::Config(format!("delta_bc = {} must be positive", self.delta_bc)));
        }
        Ok(())
    }

    pub fn lr(&self, m: usize) -> f64 {
        self.schedule_base.powi(-(m as i32))
    }
}

/// `l(m) = 1.01^{−m}`.
pub fn lr_schedule(m: usize) -> f64 {
    1.01f64.powi(-(m as i32))
}

/// Which costs enter the suffix sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostBasis {
    Running,
    RunningAndControl,
}

/// `S_n = Σ_{k≥n} cost_k`. With control costs, an immediate jump at `t_k`
/// counts for every `n < k`: the value at `t_n` is taken at the post-jump state,
/// so it excludes its own jump but not later ones.
fn suffix_sums(trace: &EpisodeTrace, basis: CostBasis) -> Vec<f64> {
    let n = trace.len();
    let mut out = vec![0.0; n];
    let mut acc = 0.0;
    for k in (0..n).rev() {
        acc += trace.running_costs[k];
        if basis == CostBasis::RunningAndControl {
            acc += trace.control_costs[k];
        }
        out[k] = acc;
        if basis == CostBasis::RunningAndControl {
            acc += trace.jump_costs[k];
        }
    }
    out
}

fn check_trace(trace: &EpisodeTrace) -> Result<()> {
    let n = trace.len();
    if trace.pre_jump.len() != n
        || trace.running_costs.len() != n
        || trace.control_costs.len() != n
        || trace.jump_costs.len() != n
        || trace.grid.steps != n
    {
        return Err(Error::Trace(format!(
            "trace has {n} steps but grid has {}",
            trace.grid.steps
        )));
    }
    Ok(())
}

/// Raw summed gradient for a value family `value_grad(n, x, t) -> (V, ∇V)`.
fn raw_sum<F>(trace: &EpisodeTrace, beta: f64, basis: CostBasis, value_grad: F) -> [f64; 3]
where
    F: Fn(usize, f64, f64) -> (f64, [f64; 3]),
{
    let suffix = suffix_sums(trace, basis);
    let mut g = [0.0; 3];
    for (n, s) in suffix.iter().enumerate() {
        let t = trace.grid.time(n);
        let x = trace.post_jump[n].x;
        let (v, dv) = value_grad(n, x, t);
        let w = -(-beta * t).exp() * v + s;
        for i in 0..3 {
            g[i] += w * dv[i];
        }
    }
    g
}

/// Summed gradient of the reflected-path rule before clamping.
pub fn raw_gradient_phi(
    theta: &Theta,
    x_bar: f64,
    trace: &EpisodeTrace,
    params: &ModelParams,
    include_control_costs: bool,
) -> Result<[f64; 3]> {
    check_trace(trace)?;
    let basis = if include_control_costs {
        CostBasis::RunningAndControl
    } else {
        CostBasis::Running
    };
    let c = params.c;
    Ok(raw_sum(trace, params.beta, basis, |_, x, _| {
        (phi_theta(x, theta, x_bar, c), grad_theta_phi(x, theta, x_bar, c))
    }))
}

/// Summed gradient of the activated-episode rule before clamping.
pub fn raw_gradient_u_activated(
    theta: &Theta,
    x_bar: f64,
    trace: &EpisodeTrace,
    params: &ModelParams,
) -> Result<[f64; 3]> {
    check_trace(trace)?;
    let tau = trace.activation_time();
    if !tau.is_finite() {
        return Err(Error::WrongRule("activated-episode update needs a finite activation time"));
    }
    let (c, beta) = (params.c, params.beta);
    Ok(raw_sum(trace, beta, CostBasis::RunningAndControl, |_, x, t| {
        let r = tau.max(t);
        (
            u_theta(x, t, r, theta, x_bar, c, beta),
            grad_theta_u(x, t, r, theta, x_bar, c, beta),
        )
    }))
}

/// Summed gradient of the never-activated rule before clamping.
pub fn raw_gradient_u_inactive(
    theta: &Theta,
    trace: &EpisodeTrace,
    params: &ModelParams,
) -> Result<[f64; 3]> {
    check_trace(trace)?;
    if trace.is_activated() {
        return Err(Error::WrongRule("uncontrolled update applied to an activated episode"));
    }
    Ok(raw_sum(trace, params.beta, CostBasis::Running, |_, x, _| {
        (u_inf_theta(x, theta), grad_theta_u_inf(x, theta))
    }))
}

/// Componentwise clamp to `[−M_gc, M_gc]`.
pub fn clamp_gradient(g: [f64; 3], bound: [f64; 3]) -> [f64; 3] {
    let mut out = g;
    for i in 0..3 {
        out[i] = g[i].clamp(-bound[i], bound[i]);
    }
    out
}

fn step(theta: &Theta, raw: [f64; 3], m: usize, dt: f64, cfg: &PeConfig) -> [f64; 3] {
    let g = clamp_gradient(raw, cfg.grad_clip);
    let scale = cfg.lr(m) * dt;
    let mut t = theta.to_array();
    for i in 0..3 {
        t[i] += cfg.alpha[i] * scale * g[i];
    }
    t
}

pub fn ml_update_phi(
    theta: &Theta,
    x_bar: f64,
    trace: &EpisodeTrace,
    m: usize,
    params: &ModelParams,
    cfg: &PeConfig,
) -> Result<Theta> {
    let raw = raw_gradient_phi(theta, x_bar, trace, params, cfg.include_control_costs)?;
    let t = step(theta, raw, m, trace.grid.dt(), cfg);
    Ok(clip_full(&Theta::from_array(t), params.beta, cfg.delta_bc))
}

pub fn ml_update_u_activated(
    theta: &Theta,
    x_bar: f64,
    trace: &EpisodeTrace,
    m: usize,
    params: &ModelParams,
    cfg: &PeConfig,
) -> Result<Theta> {
    let raw = raw_gradient_u_activated(theta, x_bar, trace, params)?;
    let t = step(theta, raw, m, trace.grid.dt(), cfg);
    Ok(clip_full(&Theta::from_array(t), params.beta, cfg.delta_bc))
}

/// Updates `θ₁, θ₃` only; `θ₂` is reassigned by the midpoint rule.
pub fn ml_update_u_inactive(
    theta: &Theta,
    trace: &EpisodeTrace,
    m: usize,
    params: &ModelParams,
    cfg: &PeConfig,
) -> Result<Theta> {
    let raw = raw_gradient_u_inactive(theta, trace, params)?;
    let t = step(theta, raw, m, trace.grid.dt(), cfg);
    Ok(clip_uncontrolled(&Theta::from_array(t), params.beta, cfg.delta_bc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_form::ClosedForm;
    use crate::param_family::clip_uncontrolled;
    use crate::sde_sim::{simulate_nonrandomized, simulate_randomized_with, RngSeed, StepState, TimeGrid};

    fn setup() -> (ModelParams, Theta, f64) {
        let p = ModelParams::reference();
        let cf = ClosedForm::new(p).unwrap();
        let k = cf.constants();
        (p, Theta::new(p.a, k.b, k.c_a), k.x_hat)
    }

    fn one_step_trace(x: f64, h: f64) -> EpisodeTrace {
        let s = StepState { x, xi: 0.0, eta: 1.0 };
        EpisodeTrace {
            grid: TimeGrid::new(0.02, 1).unwrap(),
            pre_jump: vec![s],
            post_jump: vec![s],
            terminal: s,
            running_costs: vec![h],
            control_costs: vec![0.0],
            jump_costs: vec![0.0],
            activation_step: Some(0),
        }
    }

    #[test]
    fn schedule() {
        assert_eq!(lr_schedule(0), 1.0);
        assert!((lr_schedule(100) - 0.369_711_212_329_119_26).abs() < 1e-15);
        assert!((0..500).all(|m| lr_schedule(m + 1) < lr_schedule(m)));
        assert_eq!(PeConfig::default().lr(100), lr_schedule(100));
    }

    #[test]
    fn config_validation() {
        assert!(PeConfig::default().validate().is_ok());
        let bad = PeConfig {
            alpha: [0.1, 0.0, 1.0],
            ..PeConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = PeConfig {
            grad_clip: [1.0, -1.0, 1.0],
            ..PeConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn empty_sum_leaves_theta() {
        let (p, th, _) = setup();
        let mut tr = one_step_trace(0.0, 0.0);
        tr.pre_jump.clear();
        tr.post_jump.clear();
        tr.running_costs.clear();
        tr.control_costs.clear();
        tr.jump_costs.clear();
        let g = raw_sum(&tr, p.beta, CostBasis::Running, |_, _, _| (1.0, [1.0; 3]));
        assert_eq!(g, [0.0; 3]);
        let t = step(&th, g, 1, 0.02, &PeConfig::default());
        assert_eq!(clip_full(&Theta::from_array(t), p.beta, 1e-3), th);
        let odd = Theta::new(th.theta1, -3.0, th.theta3);
        let u = clip_uncontrolled(&Theta::from_array(step(&odd, g, 1, 0.02, &PeConfig::default())), p.beta, 1e-3);
        assert_eq!((u.theta1, u.theta3), (th.theta1, th.theta3));
        assert_eq!(u, clip_uncontrolled(&th, p.beta, 1e-3));
    }

    #[test]
    fn sign_propagation() {
        let (p, th, xh) = setup();
        let x = -1.0;
        let v = phi_theta(x, &th, xh, p.c);
        let tr = one_step_trace(x, v + 1e-3);
        let g = grad_theta_phi(x, &th, xh, p.c);
        let cfg = PeConfig {
            grad_clip: [1e9; 3],
            ..PeConfig::default()
        };
        let raw = raw_gradient_phi(&th, xh, &tr, &p, true).unwrap();
        for i in 0..3 {
            assert!((raw[i] - 1e-3 * g[i]).abs() < 1e-12);
        }
        let out = ml_update_phi(&th, xh, &tr, 0, &p, &cfg).unwrap();
        let d = [out.theta1 - th.theta1, out.theta2 - th.theta2, out.theta3 - th.theta3];
        for i in 0..3 {
            if g[i] > 0.0 {
                assert!(d[i] > 0.0, "component {i}");
            }
        }
    }

    #[test]
    fn clamp_saturates() {
        let (p, th, xh) = setup();
        let g = TimeGrid::new(10.0, 500).unwrap();
        let tr = simulate_nonrandomized(&g, 40.0, 0.0, 40.0, &p, RngSeed::new(1, 1));
        let raw = raw_gradient_u_activated(&th, xh, &tr, &p).unwrap();
        let cl = clamp_gradient(raw, [1.0, 1.0, 10.0]);
        for i in 0..3 {
            assert!(raw[i].abs() > [1.0, 1.0, 10.0][i]);
            assert_eq!(cl[i].abs(), [1.0, 1.0, 10.0][i]);
        }
    }

    #[test]
    fn rule_guards() {
        let (p, th, xh) = setup();
        let g = TimeGrid::new(1.0, 50).unwrap();
        let active = simulate_nonrandomized(&g, 1.0, 0.0, xh, &p, RngSeed::new(0, 0));
        let idle = simulate_randomized_with(&g, 1.0, 0.0, 0.0, xh, &p, RngSeed::new(0, 0), |_, _| 0.0).unwrap();
        let cfg = PeConfig::default();
        assert!(matches!(
            ml_update_u_activated(&th, xh, &idle, 1, &p, &cfg),
            Err(Error::WrongRule(_))
        ));
        assert!(matches!(ml_update_u_inactive(&th, &active, 1, &p, &cfg), Err(Error::WrongRule(_))));
        let mut broken = active.clone();
        broken.running_costs.pop();
        assert!(matches!(ml_update_phi(&th, xh, &broken, 1, &p, &cfg), Err(Error::Trace(_))));
    }

    #[test]
    fn activation_at_start_collapses_to_phi_rule() {
        let (p, th, xh) = setup();
        let g = TimeGrid::new(5.0, 250).unwrap();
        let tr = simulate_nonrandomized(&g, 2.0, 0.0, xh, &p, RngSeed::new(4, 9));
        let a = raw_gradient_u_activated(&th, xh, &tr, &p).unwrap();
        let b = raw_gradient_phi(&th, xh, &tr, &p, true).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn deterministic_and_feasible() {
        let p = ModelParams::reference();
        let th = Theta::new(0.15, 0.4, 15.0);
        let g = TimeGrid::new(20.0, 1000).unwrap();
        let tr = simulate_nonrandomized(&g, 1.0, 0.0, -2.5, &p, RngSeed::new(3, 3));
        let cfg = PeConfig::default();
        let a = ml_update_phi(&th, -2.5, &tr, 1, &p, &cfg).unwrap();
        let b = ml_update_phi(&th, -2.5, &tr, 1, &p, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.is_feasible(p.beta));
    }
}
