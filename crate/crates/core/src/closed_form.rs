//! Ground-truth analytic solution of the irreversible reinsurance problem.
//!
//! Everything here is evaluated under the true model coefficients: the inner
//! value function `Φ` and its free boundary `x̂`, the delayed-activation value
//! `Ψ(p, q)`, the equilibrium activation boundary `Γ(x) = exp(-(β/λ)Φ(x))`, and
//! the outer equilibrium value functions `V` and `f`.

use crate::error::{Error, Result};
use crate::numerics::normal;
use crate::numerics::quad::{self, QuadOptions};
use crate::numerics::root;

/// True environment coefficients plus the entropy temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub mu: f64,
    pub sigma: f64,
    pub a: f64,
    pub c: f64,
    pub beta: f64,
    pub lambda: f64,
}

impl ModelParams {
    pub fn new(mu: f64, sigma: f64, a: f64, c: f64, beta: f64, lambda: f64) -> Result<Self> {
        let p = ModelParams {
            mu,
            sigma,
            a,
            c,
            beta,
            lambda,
        };
        p.validate()?;
        Ok(p)
    }

    /// Coefficients of the reference experiment: c=1, β=0.1, a=0.1, μ=0.25, σ=1, λ=0.5.
    pub fn reference() -> Self {
        ModelParams {
            mu: 0.25,
            sigma: 1.0,
            a: 0.1,
            c: 1.0,
            beta: 0.1,
            lambda: 0.5,
        }
    }

    /// `β - μa - σ²a²/2`; must be positive for the uncontrolled cost to be finite.
    pub fn discount_gap(&self) -> f64 {
        self.beta - self.mu * self.a - 0.5 * self.sigma * self.sigma * self.a * self.a
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("mu", self.mu),
            ("sigma", self.sigma),
            ("a", self.a),
            ("c", self.c),
            ("beta", self.beta),
            ("lambda", self.lambda),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::InvalidParams(format!("{name} = {v} is not finite")));
            }
            if name != "mu" && v <= 0.0 {
                return Err(Error::InvalidParams(format!("{name} = {v} must be positive")));
            }
        }
        if self.discount_gap() <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "beta = {} must exceed mu*a + sigma^2*a^2/2 = {}",
                self.beta,
                self.beta - self.discount_gap()
            )));
        }
        Ok(())
    }
}

/// Constants of the free-boundary solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedConstants {
    /// Positive root of `σ²r²/2 + μr - β = 0`.
    pub b: f64,
    /// Negative root of the same equation.
    pub l: f64,
    /// Free boundary; the waiting region is `x < x_hat`.
    pub x_hat: f64,
    pub c_a: f64,
    pub c_b: f64,
}

pub fn derive_constants(p: &ModelParams) -> Result<DerivedConstants> {
    p.validate()?;
    let s2 = p.sigma * p.sigma;
    let disc = (p.mu * p.mu + 2.0 * p.beta * s2).sqrt();
    let b = (disc - p.mu) / s2;
    // Vieta: b·l = -2β/σ², avoids cancellation in (-disc - μ) for μ < 0
    let l = -2.0 * p.beta / (s2 * b);
    let gap = p.discount_gap();
    let c_a = 1.0 / gap;
    let x_hat = (b * p.c * gap / (b * p.a - p.a * p.a)).ln() / p.a;
    let c_b = -(p.a * p.a) / (b * b) * c_a * ((p.a - b) * x_hat).exp();
    Ok(DerivedConstants {
        b,
        l,
        x_hat,
        c_a,
        c_b,
    })
}

/// `E(z) = z - z ln z` on `[0, 1]`, with `E(0) = 0`.
pub fn entropy(z: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&z) {
        return Err(Error::OutOfDomain {
            what: "entropy argument",
            value: z,
        });
    }
    Ok(entropy_unchecked(z))
}

#[inline]
fn entropy_unchecked(z: f64) -> f64 {
    if z == 0.0 {
        0.0
    } else {
        z - z * z.ln()
    }
}

/// `∫ G(y, p, q) F(y) dy` with the Gaussian transition kernel of the uncontrolled
/// state, by adaptive quadrature. `kinks` are forwarded as break points in `y`.
pub fn gaussian_kernel_integral<F: Fn(f64) -> f64>(
    p: &ModelParams,
    start: f64,
    q: f64,
    kinks: &[f64],
    f: F,
) -> Result<f64> {
    if q <= 0.0 {
        return Ok(f(start));
    }
    let m = start + p.mu * q;
    let s = p.sigma * q.sqrt();
    let breaks: Vec<f64> = kinks.iter().map(|k| (k - m) / s).collect();
    let opts = QuadOptions {
        abs_tol: 1e-14,
        rel_tol: 1e-14,
        max_intervals: 4000,
    };
    let r = quad::integrate(|u| normal::pdf(u) * f(m + s * u), -40.0, 40.0, &breaks, opts)?;
    Ok(r.value)
}

/// Closed-form solution bound to one parameter set.
#[derive(Debug, Clone, Copy)]
pub struct ClosedForm {
    params: ModelParams,
    consts: DerivedConstants,
    phi_hat: f64,
}

impl ClosedForm {
    pub fn new(params: ModelParams) -> Result<Self> {
        let consts = derive_constants(&params)?;
        let phi_hat = consts.c_a * (params.a * consts.x_hat).exp()
            + consts.c_b * (consts.b * consts.x_hat).exp();
        Ok(ClosedForm {
            params,
            consts,
            phi_hat,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn constants(&self) -> &DerivedConstants {
        &self.consts
    }

    /// `Φ(x̂)`.
    pub fn phi_at_boundary(&self) -> f64 {
        self.phi_hat
    }

    /// `(Φ, Φ', Φ'')` of the exponential (waiting-region) formula, evaluated
    /// at any `x` regardless of which side of `x̂` it lies on.
    pub fn waiting_branch(&self, x: f64) -> [f64; 3] {
        let (a, b) = (self.params.a, self.consts.b);
        let ea = self.consts.c_a * (a * x).exp();
        let eb = self.consts.c_b * (b * x).exp();
        [ea + eb, a * ea + b * eb, a * a * ea + b * b * eb]
    }

    pub fn phi(&self, x: f64) -> f64 {
        if x < self.consts.x_hat {
            self.waiting_branch(x)[0]
        } else {
            self.params.c * (x - self.consts.x_hat) + self.phi_hat
        }
    }

    pub fn phi_x(&self, x: f64) -> f64 {
        if x < self.consts.x_hat {
            self.waiting_branch(x)[1]
        } else {
            self.params.c
        }
    }

    /// Second derivative; at `x̂` the linear branch value (0) is returned, which
    /// coincides with the left limit by smooth fit.
    pub fn phi_xx(&self, x: f64) -> f64 {
        if x < self.consts.x_hat {
            self.waiting_branch(x)[2]
        } else {
            0.0
        }
    }

    /// Both brackets of `min{e^{ax} - βΦ + μΦ' + σ²Φ''/2, c - Φ'} = 0`.
    pub fn vi_residual(&self, x: f64) -> (f64, f64) {
        let p = &self.params;
        let pde = (p.a * x).exp() - p.beta * self.phi(x)
            + p.mu * self.phi_x(x)
            + 0.5 * p.sigma * p.sigma * self.phi_xx(x);
        (pde, p.c - self.phi_x(x))
    }

    /// `Ψ(p, q)`: value at `p` when control is switched on after a delay `q`.
    ///
    /// Closed form through truncated Gaussian moments of `Y ~ N(p + μq, σ²q)`,
    /// split at `x̂`. All exponentials are assembled in log space.
    pub fn psi(&self, p: f64, q: f64) -> f64 {
        debug_assert!(q >= 0.0, "psi needs a nonnegative delay, got {q}");
        if q <= 0.0 {
            return self.phi(p);
        }
        let prm = &self.params;
        let DerivedConstants {
            b, x_hat, c_a, c_b, ..
        } = self.consts;
        let a = prm.a;
        let m = p + prm.mu * q;
        let s = prm.sigma * q.sqrt();
        let s2 = s * s;
        let disc = -prm.beta * q;

        let below = c_b * (b * m + 0.5 * b * b * s2 + disc + normal::ln_cdf((x_hat - m - b * s2) / s)).exp();
        let d0 = (m - x_hat) / s;
        let above_linear = disc.exp()
            * (prm.c * ((m - x_hat) * normal::cdf(d0) + s * normal::pdf(d0))
                + self.phi_hat * normal::cdf(d0));
        let above_exp =
            c_a * (a * m + 0.5 * a * a * s2 + disc + normal::ln_cdf((m - x_hat + a * s2) / s)).exp();
        c_a * (a * p).exp() + below + above_linear - above_exp
    }

    /// `Ψ(p, q)` by direct quadrature of the kernel integral; slow, kept to
    /// cross-check [`ClosedForm::psi`].
    pub fn psi_quadrature(&self, p: f64, q: f64) -> Result<f64> {
        let (a, c_a) = (self.params.a, self.consts.c_a);
        let integral = gaussian_kernel_integral(&self.params, p, q, &[self.consts.x_hat], |y| {
            self.phi(y) - c_a * (a * y).exp()
        })?;
        Ok(c_a * (a * p).exp() + (-self.params.beta * q).exp() * integral)
    }

    /// `∂Ψ/∂q (x, 0) = e^{ax} - βΦ + μΦ' + σ²Φ''/2`.
    pub fn psi_q_at_zero(&self, x: f64) -> f64 {
        self.vi_residual(x).0
    }

    pub fn gamma(&self, x: f64) -> f64 {
        (-self.params.beta / self.params.lambda * self.phi(x)).exp()
    }

    pub fn gamma_x(&self, x: f64) -> f64 {
        -self.params.beta / self.params.lambda * self.phi_x(x) * self.gamma(x)
    }

    /// `Γ⁻¹(z) = Φ⁻¹(-(λ/β) ln z)` for `z ∈ (0, 1)`.
    pub fn gamma_inv(&self, z: f64) -> Result<f64> {
        if !(z > 0.0 && z < 1.0) {
            return Err(Error::OutOfDomain {
                what: "gamma_inv argument",
                value: z,
            });
        }
        let target = -self.params.lambda / self.params.beta * z.ln();
        Ok(self.phi_inv(target))
    }

    /// Inverse of the strictly increasing `Φ` on `(0, ∞)`.
    fn phi_inv(&self, target: f64) -> f64 {
        let x_hat = self.consts.x_hat;
        if target >= self.phi_hat {
            return x_hat + (target - self.phi_hat) / self.params.c;
        }
        let mut lo = -50.0_f64.min(x_hat - 1.0);
        while self.phi(lo) >= target {
            lo *= 2.0;
        }
        root::bisect(|x| self.phi(x) - target, lo, x_hat, 200)
    }

    /// `C^l(p, q, Γ(upper))·e^{l·x}`.
    ///
    /// Substituting `z' = Γ(x')` turns the `z'`-integral into
    /// `∫_{-∞}^{upper} [Ψ(p,q) - e^{-βq}Φ(x')]·(β/λ)Φ'(x')Γ(x')·e^{l(x - x')} dx'`,
    /// which needs no inverse of `Γ` and whose left tail decays like
    /// `e^{(a+|l|)x'}`.
    fn c_l_scaled(&self, psi_pq: f64, q: f64, upper: f64, x: f64) -> Result<f64> {
        let prm = &self.params;
        let DerivedConstants { l, x_hat, .. } = self.consts;
        let disc = (-prm.beta * q).exp();
        let rate = prm.beta / prm.lambda;
        let integrand = |y: f64| {
            let phi = self.phi(y);
            (psi_pq - disc * phi) * rate * self.phi_x(y) * (-rate * phi + l * (x - y)).exp()
        };
        let lo = upper.min(x_hat) - 60.0 / (prm.a - l);
        let r = quad::integrate(integrand, lo, upper, &[x_hat], QuadOptions::default())?;
        Ok(r.value)
    }

    /// `C^l(p, q, z) = ∫_z^1 [(λ/β)e^{-βq} ln z' + Ψ(p,q)]·e^{-lΓ⁻¹(z')} dz'`.
    pub fn c_l(&self, p: f64, q: f64, z: f64) -> Result<f64> {
        if !(z > 0.0 && z <= 1.0) {
            return Err(Error::OutOfDomain {
                what: "C^l level",
                value: z,
            });
        }
        if z == 1.0 {
            return Ok(0.0);
        }
        let upper = self.gamma_inv(z)?;
        let v = self.c_l_scaled(self.psi(p, q), q, upper, 0.0)?;
        if !v.is_finite() {
            return Err(crate::error::NumericError::NonFinite("C^l").into());
        }
        Ok(v)
    }

    /// `∂C^l/∂z (p, q, z)`.
    pub fn c_l_z(&self, p: f64, q: f64, z: f64) -> Result<f64> {
        let x = self.gamma_inv(z)?;
        let prm = &self.params;
        let level = prm.lambda / prm.beta * (-prm.beta * q).exp() * z.ln() + self.psi(p, q);
        Ok(-level * (-self.consts.l * x).exp())
    }

    fn check_level(z: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&z) {
            return Err(Error::OutOfDomain {
                what: "activated fraction",
                value: z,
            });
        }
        Ok(())
    }

    /// Equilibrium outer value `V(x, z)` (stationary in `t`).
    pub fn outer_value_v(&self, x: f64, z: f64) -> Result<f64> {
        self.outer_value_f(x, 0.0, x, z)
    }

    /// `∂V/∂z`, analytic on both sides of `z = Γ(x)`.
    pub fn outer_value_v_z(&self, x: f64, z: f64) -> Result<f64> {
        Self::check_level(z)?;
        let phi = self.phi(x);
        if z > self.gamma(x) {
            let k = self.params.lambda / self.params.beta * z.ln();
            let xz = if z == 1.0 { f64::NEG_INFINITY } else { self.gamma_inv(z)? };
            Ok(k - (k + phi) * (self.consts.l * (x - xz)).exp())
        } else {
            Ok(-phi)
        }
    }

    /// Auxiliary family `f^{p,s}(x, t, z)` with delay `q = t - s`.
    pub fn outer_value_f(&self, p: f64, q: f64, x: f64, z: f64) -> Result<f64> {
        Self::check_level(z)?;
        let g = self.gamma(x);
        let psi_pq = self.psi(p, q);
        if z > g {
            self.f_upper(psi_pq, q, x, z)
        } else {
            self.f_lower(psi_pq, q, x, z)
        }
    }

    /// The `z > Γ(x)` formula of `f`, usable at any `z ∈ (0, 1]`.
    fn f_upper(&self, psi_pq: f64, q: f64, x: f64, z: f64) -> Result<f64> {
        let w = self.params.lambda / self.params.beta * (-self.params.beta * q).exp();
        let tail = if z == 1.0 {
            0.0
        } else {
            self.c_l_scaled(psi_pq, q, self.gamma_inv(z)?, x)?
        };
        Ok(-w * entropy_unchecked(z) + tail)
    }

    /// The `z ≤ Γ(x)` formula of `f`.
    fn f_lower(&self, psi_pq: f64, q: f64, x: f64, z: f64) -> Result<f64> {
        let g = self.gamma(x);
        let w = self.params.lambda / self.params.beta * (-self.params.beta * q).exp();
        let tail = if g >= 1.0 {
            0.0
        } else {
            self.c_l_scaled(psi_pq, q, x, x)?
        };
        Ok(-psi_pq * (z - g) - w * entropy_unchecked(g) + tail)
    }

    /// `F(z) = -λE(z) + λE(Γ(x)) - Ψ_q(x, 0)(z - Γ(x))`, nonnegative for `z ≤ Γ(x)`
    /// at the equilibrium.
    pub fn spike_deviation_gain(&self, x: f64, z: f64) -> Result<f64> {
        Self::check_level(z)?;
        let lam = self.params.lambda;
        let g = self.gamma(x);
        Ok(-lam * entropy_unchecked(z) + lam * entropy_unchecked(g)
            - self.psi_q_at_zero(x) * (z - g))
    }
}
