//! Episode generators for the reflected and the randomly activated state process.
//!
//! Each step draws exactly one Gaussian increment from the episode's increment
//! stream, whether or not control is active, so benchmark and randomized
//! episodes with the same [`RngSeed`] see the same Brownian path. The
//! activation uniform `Z` comes from a separate stream and is only drawn by the
//! randomized simulator.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::closed_form::ModelParams;
use crate::error::{Error, Result};
use crate::param_family::{gamma_theta, Theta};

/// Uniform grid `t_n = n·T/N`, `n = 0..=N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub horizon: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidParams(format!("horizon T = {horizon} must be positive")));
        }
        if steps == 0 {
            return Err(Error::InvalidParams("number of steps N must be at least 1".into()));
        }
        Ok(TimeGrid { horizon, steps })
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn time(&self, n: usize) -> f64 {
        self.horizon * n as f64 / self.steps as f64
    }
}

/// Seed plus stream id; identical pairs reproduce identical traces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngSeed {
    pub seed: u64,
    pub stream: u64,
}

const SUB_INCREMENTS: u64 = 0;
const SUB_ACTIVATION: u64 = 1;

impl RngSeed {
    pub fn new(seed: u64, stream: u64) -> Self {
        RngSeed { seed, stream }
    }

    fn rng(&self, sub: u64) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(self.stream.wrapping_shl(1) | sub);
        r
    }

    /// Generator for the Gaussian increments.
    pub fn increments(&self) -> ChaCha8Rng {
        self.rng(SUB_INCREMENTS)
    }

    /// Generator for the activation uniform.
    pub fn activation(&self) -> ChaCha8Rng {
        self.rng(SUB_ACTIVATION)
    }
}

/// `I ~ N(μ·dt, σ²·dt)`.
pub fn step_increment<R: Rng + ?Sized>(rng: &mut R, mu: f64, sigma: f64, dt: f64) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    mu * dt + sigma * dt.sqrt() * z
}

/// State, cumulative control and activated fraction at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepState {
    pub x: f64,
    pub xi: f64,
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeTrace {
    pub grid: TimeGrid,
    /// `(X, ξ, η)` at `t_n−`, `n = 0..N-1`.
    pub pre_jump: Vec<StepState>,
    /// `(X, ξ, η)` at `t_n`, after the immediate jump.
    pub post_jump: Vec<StepState>,
    /// State at `t_N−`.
    pub terminal: StepState,
    /// `H_n = e^{-βt_n} e^{aX_{t_n}} Δt`.
    pub running_costs: Vec<f64>,
    /// `c_n = e^{-βt_n} c (ξ_{t_{n+1}−} − ξ_{t_n})`.
    pub control_costs: Vec<f64>,
    /// `e^{-βt_n} c Δξ_{t_n}`, the immediate jumps (excluded from `c_n`).
    pub jump_costs: Vec<f64>,
    /// Index of the activation step; `None` means `τ = +∞`.
    pub activation_step: Option<usize>,
}

impl EpisodeTrace {
    pub fn len(&self) -> usize {
        self.post_jump.len()
    }

    pub fn is_empty(&self) -> bool {
        self.post_jump.is_empty()
    }

    pub fn activation_time(&self) -> f64 {
        self.activation_step
            .map_or(f64::INFINITY, |n| self.grid.time(n))
    }

    pub fn is_activated(&self) -> bool {
        self.activation_step.is_some()
    }

    /// Realized discounted cost, immediate jumps included.
    pub fn total_cost(&self) -> f64 {
        self.running_costs.iter().sum::<f64>()
            + self.control_costs.iter().sum::<f64>()
            + self.jump_costs.iter().sum::<f64>()
    }

    /// Pre-jump state at `t_{n}−` for `n = 0..=N`.
    pub fn pre_state(&self, n: usize) -> StepState {
        if n == self.pre_jump.len() {
            self.terminal
        } else {
            self.pre_jump[n]
        }
    }

    /// One row per step with a trailing `activation_time` row.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "n,t,x_pre,xi_pre,eta_pre,x_post,xi_post,eta_post,H,c")?;
        for n in 0..self.len() {
            let (p, q) = (self.pre_jump[n], self.post_jump[n]);
            writeln!(
                w,
                "{n},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                self.grid.time(n),
                p.x,
                p.xi,
                p.eta,
                q.x,
                q.xi,
                q.eta,
                self.running_costs[n],
                self.control_costs[n],
            )?;
        }
        match self.activation_step {
            Some(_) => writeln!(w, "activation_time,{:.16e}", self.activation_time()),
            None => writeln!(w, "activation_time,inf"),
        }
    }
}

struct Builder {
    trace: EpisodeTrace,
}

impl Builder {
    fn new(grid: TimeGrid) -> Self {
        let n = grid.steps;
        Builder {
            trace: EpisodeTrace {
                grid,
                pre_jump: Vec::with_capacity(n),
                post_jump: Vec::with_capacity(n),
                terminal: StepState {
                    x: f64::NAN,
                    xi: f64::NAN,
                    eta: f64::NAN,
                },
                running_costs: Vec::with_capacity(n),
                control_costs: Vec::with_capacity(n),
                jump_costs: Vec::with_capacity(n),
                activation_step: None,
            },
        }
    }

    fn push(&mut self, pre: StepState, post: StepState, h: f64, c: f64, jump: f64) {
        self.trace.pre_jump.push(pre);
        self.trace.post_jump.push(post);
        self.trace.running_costs.push(h);
        self.trace.control_costs.push(c);
        self.trace.jump_costs.push(jump);
    }
}

/// One reflected step: immediate jump to `x̄`, then the end-of-interval
/// projection `X_{t_{n+1}−} = min(X_{t_n} + I, x̄)`.
/// Returns `(post, next_pre, H, c, jump_cost)`.
#[inline]
fn reflected_step(
    p: &ModelParams,
    x_bar: f64,
    t: f64,
    dt: f64,
    pre: StepState,
    eta: f64,
    inc: f64,
) -> (StepState, StepState, f64, f64, f64) {
    let disc = (-p.beta * t).exp();
    let jump = (pre.x - x_bar).max(0.0);
    let post = StepState {
        x: pre.x.min(x_bar),
        xi: pre.xi + jump,
        eta,
    };
    let over = (post.x + inc - x_bar).max(0.0);
    let next = StepState {
        x: (post.x + inc).min(x_bar),
        xi: post.xi + over,
        eta,
    };
    let h = disc * (p.a * post.x).exp() * dt;
    (post, next, h, disc * p.c * over, disc * p.c * jump)
}

/// Reflected dynamics under the threshold law `{x < x̄}` from `(x0, ξ0)` at `t_0`.
pub fn simulate_nonrandomized(
    grid: &TimeGrid,
    x0: f64,
    xi0: f64,
    x_bar: f64,
    params: &ModelParams,
    seed: RngSeed,
) -> EpisodeTrace {
    let dt = grid.dt();
    let mut rng = seed.increments();
    let mut b = Builder::new(*grid);
    let mut pre = StepState {
        x: x0,
        xi: xi0,
        eta: 1.0,
    };
    for n in 0..grid.steps {
        let inc = step_increment(&mut rng, params.mu, params.sigma, dt);
        let (post, next, h, c, j) = reflected_step(params, x_bar, grid.time(n), dt, pre, 1.0, inc);
        b.push(pre, post, h, c, j);
        pre = next;
    }
    b.trace.terminal = pre;
    b.trace.activation_step = Some(0);
    b.trace
}

/// Randomly activated dynamics: `η` follows the running maximum of
/// `boundary(t_n, X_{t_n−})`, and control switches on at the first step with `η > Z`.
pub fn simulate_randomized_with<G: Fn(f64, f64) -> f64>(
    grid: &TimeGrid,
    x0: f64,
    xi0: f64,
    eta0: f64,
    x_bar: f64,
    params: &ModelParams,
    seed: RngSeed,
    boundary: G,
) -> Result<EpisodeTrace> {
    if !(0.0..=1.0).contains(&eta0) {
        return Err(Error::OutOfDomain {
            what: "initial activated fraction",
            value: eta0,
        });
    }
    let dt = grid.dt();
    let mut rng = seed.increments();
    let z: f64 = seed.activation().random();
    let mut b = Builder::new(*grid);
    let mut pre = StepState {
        x: x0,
        xi: xi0,
        eta: eta0,
    };
    for n in 0..grid.steps {
        let t = grid.time(n);
        let eta = pre.eta.max(boundary(t, pre.x).min(1.0));
        let inc = step_increment(&mut rng, params.mu, params.sigma, dt);
        if b.trace.activation_step.is_none() && eta > z {
            b.trace.activation_step = Some(n);
        }
        if b.trace.activation_step.is_some() {
            let (post, next, h, c, j) = reflected_step(params, x_bar, t, dt, pre, eta, inc);
            b.push(pre, post, h, c, j);
            pre = next;
        } else {
            let post = StepState { eta, ..pre };
            let h = (-params.beta * t).exp() * (params.a * post.x).exp() * dt;
            b.push(pre, post, h, 0.0, 0.0);
            pre = StepState {
                x: post.x + inc,
                ..post
            };
        }
    }
    b.trace.terminal = pre;
    Ok(b.trace)
}

/// Randomized simulator with the learned boundary `Γ^θ(x) = e^{-(β/λ)Φ^θ(x; x̄)}`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_randomized(
    grid: &TimeGrid,
    x0: f64,
    xi0: f64,
    eta0: f64,
    x_bar: f64,
    theta: &Theta,
    params: &ModelParams,
    lambda: f64,
    seed: RngSeed,
) -> Result<EpisodeTrace> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidParams(format!("temperature {lambda} must be positive")));
    }
    let (c, beta) = (params.c, params.beta);
    simulate_randomized_with(grid, x0, xi0, eta0, x_bar, params, seed, |_, x| {
        gamma_theta(x, theta, x_bar, c, beta, lambda)
    })
}

/// Realized discounted cost of one reflected path, without storing the trace.
pub fn path_cost_nonrandomized(
    grid: &TimeGrid,
    x0: f64,
    x_bar: f64,
    params: &ModelParams,
    seed: RngSeed,
) -> f64 {
    let dt = grid.dt();
    let mut rng = seed.increments();
    let mut pre = StepState {
        x: x0,
        xi: 0.0,
        eta: 1.0,
    };
    let mut total = 0.0;
    for n in 0..grid.steps {
        let inc = step_increment(&mut rng, params.mu, params.sigma, dt);
        let (_, next, h, c, j) = reflected_step(params, x_bar, grid.time(n), dt, pre, 1.0, inc);
        total += h + c + j;
        pre = next;
    }
    total
}

/// `P(τ ≤ t_n | increments)` for `n = 0..N`: the running maximum of the
/// activation boundary along the uncontrolled path driven by the same
/// increments as [`simulate_randomized_with`]. Before activation the two paths
/// coincide, so `τ ≤ t_n` exactly when this value exceeds `Z`.
pub fn conditional_activation_law<G: Fn(f64, f64) -> f64>(
    grid: &TimeGrid,
    x0: f64,
    eta0: f64,
    params: &ModelParams,
    seed: RngSeed,
    boundary: G,
) -> Vec<f64> {
    let dt = grid.dt();
    let mut rng = seed.increments();
    let mut x = x0;
    let mut eta = eta0;
    let mut out = Vec::with_capacity(grid.steps);
    for n in 0..grid.steps {
        eta = eta.max(boundary(grid.time(n), x).min(1.0));
        out.push(eta);
        x += step_increment(&mut rng, params.mu, params.sigma, dt);
    }
    out
}
