//! The learnable critic.
//!
//! `θ = (θ₁, θ₂, θ₃)` stands in for `(a, b, C_a)`; the evaluators below are
//! written once against [`Scalar`] so the same code yields values (`f64`) and
//! θ-gradients ([`Dual3`]).

use crate::closed_form::ClosedForm;
use crate::error::{Error, Result};
use crate::numerics::{Dual3, Scalar};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Theta {
    pub theta1: f64,
    pub theta2: f64,
    pub theta3: f64,
}

impl Theta {
    pub const fn new(theta1: f64, theta2: f64, theta3: f64) -> Self {
        Theta {
            theta1,
            theta2,
            theta3,
        }
    }

    /// The parameters that reproduce the true value function, `(a, b, C_a)`.
    pub fn truth(cf: &ClosedForm) -> Self {
        let k = cf.constants();
        Theta::new(cf.params().a, k.b, k.c_a)
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.theta1, self.theta2, self.theta3]
    }

    pub fn from_array(v: [f64; 3]) -> Self {
        Theta::new(v[0], v[1], v[2])
    }

    /// Open interval admissible for `θ₂` given `(θ₁, θ₃)`.
    pub fn theta2_bounds(&self, beta: f64) -> (f64, f64) {
        let r = ratio(self.theta3, beta);
        (r.sqrt() * self.theta1, r * self.theta1)
    }

    pub fn is_feasible(&self, beta: f64) -> bool {
        if !(self.theta1.is_finite() && self.theta2.is_finite() && self.theta3.is_finite()) {
            return false;
        }
        if self.theta1 <= 0.0 || self.theta3 <= 1.0 / beta {
            return false;
        }
        let (lo, hi) = self.theta2_bounds(beta);
        self.theta2 > lo && self.theta2 < hi
    }

    pub fn check(&self, beta: f64) -> Result<()> {
        if self.is_feasible(beta) {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!("infeasible critic parameters {self:?}")))
        }
    }
}

/// `β / (β - 1/θ₃)`.
fn ratio(theta3: f64, beta: f64) -> f64 {
    beta / (beta - 1.0 / theta3)
}

fn lift(theta: &Theta) -> [Dual3; 3] {
    [
        Dual3::var(theta.theta1, 0),
        Dual3::var(theta.theta2, 1),
        Dual3::var(theta.theta3, 2),
    ]
}

fn plain(theta: &Theta) -> [f64; 3] {
    theta.to_array()
}

fn mu_g<S: Scalar>(t: [S; 3], beta: f64) -> S {
    let [t1, t2, t3] = t;
    ((t2 * t2 - t1 * t1) * beta - t2 * t2 / t3) / (t1 * t2 * (t2 - t1))
}

fn sigma_g<S: Scalar>(t: [S; 3], beta: f64) -> S {
    let [t1, t2, t3] = t;
    ((t2 / t3 - (t2 - t1) * beta) * 2.0 / (t1 * t2 * (t2 - t1))).sqrt()
}

fn coeffs_g<S: Scalar>(t: [S; 3], x_bar: f64, c: f64) -> (S, S) {
    let [t1, t2, t3] = t;
    let e1 = (t1 * x_bar).exp();
    let c_b = (-(t1 * t3 * e1) + c) / (t2 * (t2 * x_bar).exp());
    let c_v = ((t2 - t1) * t3 * e1 + c) / t2;
    (c_b, c_v)
}

fn phi_g<S: Scalar>(x: f64, t: [S; 3], x_bar: f64, c: f64) -> S {
    let (c_b, c_v) = coeffs_g(t, x_bar, c);
    if x <= x_bar {
        t[2] * (t[0] * x).exp() + c_b * (t[1] * x).exp()
    } else {
        c_v + c * (x - x_bar)
    }
}

fn u_g<S: Scalar>(x: f64, q: f64, t: [S; 3], x_bar: f64, c: f64, beta: f64) -> S {
    if q < 1e-12 {
        return phi_g(x, t, x_bar, c);
    }
    let [t1, t2, t3] = t;
    let (c_b, c_v) = coeffs_g(t, x_bar, c);
    let m = mu_g(t, beta) * q + x;
    let s = sigma_g(t, beta) * q.sqrt();
    let s2 = s * s;
    let disc = -beta * q;

    let below = c_b * (t2 * m + t2 * t2 * s2 * 0.5 + disc + ((-m - t2 * s2 + x_bar) / s).ln_ncdf()).exp();
    let d0 = (m - x_bar) / s;
    let above_linear = (((m - x_bar) * d0.ncdf() + s * d0.npdf()) * c + c_v * d0.ncdf()) * disc.exp();
    let above_exp = t3 * (t1 * m + t1 * t1 * s2 * 0.5 + disc + ((m - x_bar + t1 * s2) / s).ln_ncdf()).exp();
    t3 * (t1 * x).exp() + below + above_linear - above_exp
}

fn u_inf_g<S: Scalar>(x: f64, t: [S; 3]) -> S {
    t[2] * (t[0] * x).exp()
}

/// Drift implied by `θ` when `θ₁, θ₂, θ₃` are read as `a, b, C_a`.
pub fn mu_of_theta(theta: &Theta, beta: f64) -> f64 {
    mu_g(plain(theta), beta)
}

/// Volatility implied by `θ`; NaN outside the feasible set.
pub fn sigma_of_theta(theta: &Theta, beta: f64) -> f64 {
    sigma_g(plain(theta), beta)
}

/// `(C_b(θ; x̄), C_v(θ; x̄))`, the coefficients making `Φ^θ` C¹ at `x̄`.
pub fn coeffs_of(theta: &Theta, x_bar: f64, c: f64) -> (f64, f64) {
    coeffs_g(plain(theta), x_bar, c)
}

pub fn phi_theta(x: f64, theta: &Theta, x_bar: f64, c: f64) -> f64 {
    phi_g(x, plain(theta), x_bar, c)
}

/// `∂Φ^θ/∂x`.
pub fn phi_theta_x(x: f64, theta: &Theta, x_bar: f64, c: f64) -> f64 {
    if x <= x_bar {
        let (c_b, _) = coeffs_of(theta, x_bar, c);
        theta.theta1 * theta.theta3 * (theta.theta1 * x).exp()
            + theta.theta2 * c_b * (theta.theta2 * x).exp()
    } else {
        c
    }
}

/// `U^θ(x, t, r; x̄)`: value at `(x, t)` when control is activated at `r ≥ t`.
pub fn u_theta(x: f64, t: f64, r: f64, theta: &Theta, x_bar: f64, c: f64, beta: f64) -> f64 {
    debug_assert!(r >= t, "activation time {r} precedes current time {t}");
    u_g(x, r - t, plain(theta), x_bar, c, beta)
}

/// `U^{∞,θ}(x) = θ₃ e^{θ₁x}`.
pub fn u_inf_theta(x: f64, theta: &Theta) -> f64 {
    u_inf_g(x, plain(theta))
}

/// `e^{-(β/λ)Φ^θ(x; x̄)}`, the learned activation boundary.
pub fn gamma_theta(x: f64, theta: &Theta, x_bar: f64, c: f64, beta: f64, lambda: f64) -> f64 {
    (-beta / lambda * phi_theta(x, theta, x_bar, c)).exp()
}

pub fn grad_theta_phi(x: f64, theta: &Theta, x_bar: f64, c: f64) -> [f64; 3] {
    phi_g(x, lift(theta), x_bar, c).d
}

pub fn grad_theta_u(
    x: f64,
    t: f64,
    r: f64,
    theta: &Theta,
    x_bar: f64,
    c: f64,
    beta: f64,
) -> [f64; 3] {
    u_g(x, r - t, lift(theta), x_bar, c, beta).d
}

pub fn grad_theta_u_inf(x: f64, theta: &Theta) -> [f64; 3] {
    let e = (theta.theta1 * x).exp();
    [theta.theta3 * x * e, 0.0, e]
}

/// Central differences with step `1e-6·max(1, |θᵢ|)` per component.
pub fn grad_fd<F: Fn(&Theta) -> f64>(theta: &Theta, f: F) -> [f64; 3] {
    let base = theta.to_array();
    let mut g = [0.0; 3];
    for i in 0..3 {
        let h = 1e-6 * base[i].abs().max(1.0);
        let mut up = base;
        let mut dn = base;
        up[i] += h;
        dn[i] -= h;
        g[i] = (f(&Theta::from_array(up)) - f(&Theta::from_array(dn))) / (2.0 * h);
    }
    g
}

pub fn grad_theta_phi_fd(x: f64, theta: &Theta, x_bar: f64, c: f64) -> [f64; 3] {
    grad_fd(theta, |th| phi_theta(x, th, x_bar, c))
}

pub fn grad_theta_u_fd(
    x: f64,
    t: f64,
    r: f64,
    theta: &Theta,
    x_bar: f64,
    c: f64,
    beta: f64,
) -> [f64; 3] {
    grad_fd(theta, |th| u_theta(x, t, r, th, x_bar, c, beta))
}

pub fn grad_theta_u_inf_fd(x: f64, theta: &Theta) -> [f64; 3] {
    grad_fd(theta, |th| u_inf_theta(x, th))
}

fn clip_outer(theta: &Theta, beta: f64, delta_bc: f64) -> (f64, f64) {
    let t1 = theta.theta1.max(delta_bc);
    let t3 = theta.theta3.max(1.0 / beta + delta_bc);
    (t1, t3)
}

/// Projection onto the feasible set after a full-parameter update.
///
/// When the `δ_bc`-shrunk interval for `θ₂` is empty (tiny `θ₁`), `θ₂` falls
/// back to the interval midpoint.
pub fn clip_full(theta: &Theta, beta: f64, delta_bc: f64) -> Theta {
    let (t1, t3) = clip_outer(theta, beta, delta_bc);
    let r = ratio(t3, beta);
    let (lo, hi) = (r.sqrt() * t1 + delta_bc, r * t1 - delta_bc);
    let t2 = if lo < hi {
        hi.min(theta.theta2.max(lo))
    } else {
        0.5 * (r.sqrt() + r) * t1
    };
    Theta::new(t1, t2, t3)
}

/// Clipping after an update of `θ₁, θ₃` only; `θ₂` is reset to the midpoint of
/// its admissible interval.
pub fn clip_uncontrolled(theta: &Theta, beta: f64, delta_bc: f64) -> Theta {
    let (t1, t3) = clip_outer(theta, beta, delta_bc);
    let r = ratio(t3, beta);
    Theta::new(t1, 0.5 * (r.sqrt() + r) * t1, t3)
}
