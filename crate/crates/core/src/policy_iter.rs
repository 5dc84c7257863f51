//! Boundary improvement for the threshold law `{x < x̄}`.
//!
//! The q-functions are evaluated with the critic's implied coefficients
//! `μ(θ), σ(θ)` and `a := θ₁`; the new boundary is the root of the relevant
//! q-function branch, relaxed towards the old one by `α_pi`.

use crate::error::{Error, NumericError, Result};
use crate::param_family::{coeffs_of, mu_of_theta, phi_theta, sigma_of_theta, Theta};
use crate::numerics::root;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiConfig {
    pub alpha_pi: f64,
    pub root_tol: f64,
    /// Bracket expansion stops after this many doublings of a unit step.
    pub max_bracket: u32,
}

impl Default for PiConfig {
    fn default() -> Self {
        PiConfig {
            alpha_pi: 0.5,
            root_tol: 1e-10,
            max_bracket: 10,
        }
    }
}

impl PiConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_pi > 0.0 && self.alpha_pi <= 1.0) {
            return Err(Error::Config(format!("alpha_pi = {} must lie in (0, 1]", self.alpha_pi)));
        }
        if !(self.root_tol > 0.0) {
            return Err(Error::Config(format!("root_tol = {} must be positive", self.root_tol)));
        }
        Ok(())
    }
}

/// `(q₀, q₁) = (c − Φ^θ′, e^{θ₁x} − βΦ^θ + μ(θ)Φ^θ′ + ½σ(θ)²Φ^θ″)`.
///
/// At `x = x̄` the waiting-branch (left) derivatives are used.
pub fn q_functions(x: f64, theta: &Theta, x_bar: f64, beta: f64, c: f64) -> (f64, f64) {
    let (t1, t2, t3) = (theta.theta1, theta.theta2, theta.theta3);
    let mu = mu_of_theta(theta, beta);
    let sg = sigma_of_theta(theta, beta);
    let phi = phi_theta(x, theta, x_bar, c);
    let (d1, d2) = if x <= x_bar {
        let (c_b, _) = coeffs_of(theta, x_bar, c);
        let (e1, e2) = (t3 * (t1 * x).exp(), c_b * (t2 * x).exp());
        (t1 * e1 + t2 * e2, t1 * t1 * e1 + t2 * t2 * e2)
    } else {
        (c, 0.0)
    };
    let q0 = if x <= x_bar { c - d1 } else { 0.0 };
    let q1 = (t1 * x).exp() - beta * phi + mu * d1 + 0.5 * sg * sg * d2;
    (q0, q1)
}

/// `(θ₂ − θ₁)θ₁θ₃e^{θ₁x̄} − cθ₂`; non-positive selects the extension branch.
pub fn case_selector(theta: &Theta, x_bar: f64, c: f64) -> f64 {
    let (t1, t2, t3) = (theta.theta1, theta.theta2, theta.theta3);
    (t2 - t1) * t1 * t3 * (t1 * x_bar).exp() - c * t2
}

/// Which branch produced the raw boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryCase {
    /// Root of the linear-branch residual on `[x̄, ∞)`.
    Extend,
    /// Case 1 without a root; `x̄` kept.
    KeepNoRoot,
    /// Root of `c − Φ^θ′` on `(−∞, x̄)`.
    Shrink,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryStep {
    pub case: BoundaryCase,
    /// Unrelaxed root.
    pub raw: f64,
    /// `x̄ + α_pi(raw − x̄)`.
    pub next: f64,
}

fn extend_root(theta: &Theta, x_bar: f64, beta: f64, c: f64, cfg: &PiConfig) -> Result<(BoundaryCase, f64)> {
    let t1 = theta.theta1;
    let (_, c_v) = coeffs_of(theta, x_bar, c);
    let mu = mu_of_theta(theta, beta);
    let g = |x: f64| (t1 * x).exp() - beta * c * (x - x_bar) - beta * c_v + mu * c;
    let dg = |x: f64| t1 * (t1 * x).exp() - beta * c;
    let at_bar = g(x_bar);
    let mut from = x_bar;
    if at_bar > 0.0 {
        if dg(x_bar) >= 0.0 {
            log::warn!("boundary iteration: no root right of x_bar = {x_bar} (residual {at_bar:e} increasing); boundary kept");
            return Ok((BoundaryCase::KeepNoRoot, x_bar));
        }
        // convex with a negative slope at x̄: look right of the minimizer
        let x_min = (beta * c / t1).ln() / t1;
        if g(x_min) > 0.0 {
            log::warn!("boundary iteration: residual stays positive right of x_bar = {x_bar}; boundary kept");
            return Ok((BoundaryCase::KeepNoRoot, x_bar));
        }
        from = x_min;
    }
    let (lo, hi) = root::expand_until(g, from, 1.0, 1.0, cfg.max_bracket, |v| v > 0.0)
        .map_err(|e| Error::BoundaryRoot {
            case: "extend",
            source: e,
        })?;
    let lo = lo.max(from);
    let r = root::bisect(g, lo, hi, 200);
    let r = root::newton_polish(g, dg, r, lo, hi, 20);
    check_residual("extend", g(r), cfg)?;
    Ok((BoundaryCase::Extend, r))
}

fn shrink_root(theta: &Theta, x_bar: f64, c: f64, cfg: &PiConfig) -> Result<(BoundaryCase, f64)> {
    let (t1, t2, t3) = (theta.theta1, theta.theta2, theta.theta3);
    let k = t1 * t3 * (t1 * x_bar).exp();
    // c − Φ^θ′(x̄ + u) with its trivial root at u = 0 divided out
    let deflated = |u: f64| {
        let r = ((t1 * u).exp_m1() - (t2 * u).exp_m1()) / -(t2 * u).exp_m1();
        c - k * r
    };
    let h = |u: f64| c * -(t2 * u).exp_m1() - k * ((t1 * u).exp_m1() - (t2 * u).exp_m1());
    let dh = |u: f64| -c * t2 * (t2 * u).exp() - k * (t1 * (t1 * u).exp() - t2 * (t2 * u).exp());
    let (near, far) = root::expand_until(deflated, 0.0, -1.0, 1.0, cfg.max_bracket, |v| v > 0.0)
        .map_err(|e| Error::BoundaryRoot {
            case: "shrink",
            source: e,
        })?;
    let near = if near == 0.0 { -f64::MIN_POSITIVE } else { near };
    let u = root::bisect(deflated, far, near, 200);
    let u = root::newton_polish(h, dh, u, far, near, 20);
    check_residual("shrink", h(u), cfg)?;
    Ok((BoundaryCase::Shrink, x_bar + u))
}

fn check_residual(case: &'static str, value: f64, cfg: &PiConfig) -> Result<()> {
    if value.abs() < cfg.root_tol {
        Ok(())
    } else {
        Err(Error::BoundaryRoot {
            case,
            source: NumericError::Residual { value },
        })
    }
}

/// One policy-iteration step with its diagnostics.
pub fn iterate_boundary_detailed(
    theta: &Theta,
    x_bar: f64,
    beta: f64,
    c: f64,
    cfg: &PiConfig,
) -> Result<BoundaryStep> {
    if !x_bar.is_finite() {
        return Err(Error::OutOfDomain {
            what: "boundary",
            value: x_bar,
        });
    }
    theta.check(beta)?;
    let (case, raw) = if case_selector(theta, x_bar, c) <= 0.0 {
        extend_root(theta, x_bar, beta, c, cfg)?
    } else {
        shrink_root(theta, x_bar, c, cfg)?
    };
    Ok(BoundaryStep {
        case,
        raw,
        next: x_bar + cfg.alpha_pi * (raw - x_bar),
    })
}

/// `x̄ ↦ x̄ + α_pi(x̄′ − x̄)`.
pub fn iterate_boundary(theta: &Theta, x_bar: f64, beta: f64, c: f64, cfg: &PiConfig) -> Result<f64> {
    iterate_boundary_detailed(theta, x_bar, beta, c, cfg).map(|s| s.next)
}

/// `x̄` with `(θ₂ − θ₁)θ₁θ₃e^{θ₁x̄} = cθ₂`, where both branches meet.
pub fn selector_root(theta: &Theta, c: f64) -> f64 {
    let (t1, t2, t3) = (theta.theta1, theta.theta2, theta.theta3);
    (c * t2 / ((t2 - t1) * t1 * t3)).ln() / t1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_form::{ClosedForm, ModelParams};
    use proptest::prelude::*;

    fn truth() -> (ClosedForm, Theta) {
        let cf = ClosedForm::new(ModelParams::reference()).unwrap();
        let k = cf.constants();
        (cf, Theta::new(cf.params().a, k.b, k.c_a))
    }

    const BETA: f64 = 0.1;
    const C: f64 = 1.0;

    #[test]
    fn q_functions_at_truth() {
        let (cf, th) = truth();
        let xh = cf.constants().x_hat;
        for &x in &[-5.0, -1.0, 0.0, 1.0] {
            let (q0, q1) = q_functions(x, &th, xh, BETA, C);
            assert!(q1.abs() < 1e-10, "x={x}: {q1}");
            assert!(q0 > 0.0);
            assert!((q1 - cf.psi_q_at_zero(x)).abs() < 1e-10);
        }
        for &x in &[xh + 1e-6, xh + 0.5, xh + 3.0] {
            let (q0, q1) = q_functions(x, &th, xh, BETA, C);
            assert_eq!(q0, 0.0);
            assert!(q1 >= 0.0);
        }
        let any = Theta::new(0.15, 0.4, 15.0);
        assert_eq!(q_functions(3.0, &any, -2.5, BETA, C).0, 0.0);
    }

    #[test]
    fn waiting_branch_pde_vanishes_for_any_theta() {
        let th = Theta::new(0.15, 0.4, 15.0);
        for &x in &[-8.0, -4.0, -2.6] {
            assert!(q_functions(x, &th, -2.5, BETA, C).1.abs() < 1e-10);
        }
    }

    #[test]
    fn fixed_point() {
        let (cf, th) = truth();
        let xh = cf.constants().x_hat;
        let cfg = PiConfig::default();
        let next = iterate_boundary(&th, xh, BETA, C, &cfg).unwrap();
        assert!((next - xh).abs() < 1e-8, "{next} vs {xh}");
    }

    #[test]
    fn below_truth_selects_extension() {
        let (cf, th) = truth();
        let xh = cf.constants().x_hat;
        let s = case_selector(&th, xh - 1.0, C);
        assert!((s - C * th.theta2 * ((-th.theta1).exp() - 1.0)).abs() < 1e-12);
        let step = iterate_boundary_detailed(&th, xh - 1.0, BETA, C, &PiConfig::default()).unwrap();
        assert_eq!(step.case, BoundaryCase::Extend);
        assert!(step.raw > xh - 1.0);
    }

    #[test]
    fn relaxation() {
        let (cf, th) = truth();
        let x0 = cf.constants().x_hat + 2.0;
        let full = PiConfig {
            alpha_pi: 1.0,
            ..PiConfig::default()
        };
        let half = PiConfig::default();
        let raw = iterate_boundary_detailed(&th, x0, BETA, C, &full).unwrap();
        assert_eq!(raw.next, raw.raw);
        let rel = iterate_boundary(&th, x0, BETA, C, &half).unwrap();
        assert!((rel - 0.5 * (x0 + raw.raw)).abs() < 1e-15);
    }

    #[test]
    fn converges_from_both_sides() {
        let (cf, th) = truth();
        let xh = cf.constants().x_hat;
        let cfg = PiConfig::default();
        for start in [xh - 2.0, xh + 2.0] {
            let mut x = start;
            let mut steps = 0;
            while (x - xh).abs() >= 1e-4 {
                x = iterate_boundary(&th, x, BETA, C, &cfg).unwrap();
                steps += 1;
                assert!(steps <= 60, "start {start}: stuck at {x}");
            }
        }
    }

    #[test]
    fn reference_initial_guess() {
        let th = Theta::new(0.15, 0.4, 15.0);
        let step = iterate_boundary_detailed(&th, -2.5, BETA, C, &PiConfig::default()).unwrap();
        let fixed = selector_root(&th, C);
        assert!((fixed + 2.271_848).abs() < 1e-3);
        assert!(step.raw > -2.5 && step.raw.is_finite());
    }

    #[test]
    fn config_validation() {
        assert!(PiConfig::default().validate().is_ok());
        for a in [0.0, -0.5, 1.5] {
            let cfg = PiConfig {
                alpha_pi: a,
                ..PiConfig::default()
            };
            assert!(cfg.validate().is_err());
        }
    }

    #[test]
    fn infeasible_theta_rejected() {
        let bad = Theta::new(0.1, 0.05, 14.0);
        assert!(iterate_boundary(&bad, 0.0, BETA, C, &PiConfig::default()).is_err());
    }

    fn feasible_theta() -> impl Strategy<Value = Theta> {
        (0.03f64..0.5, 0.05f64..0.95, 10.5f64..60.0).prop_map(|(t1, w, t3)| {
            let r = BETA / (BETA - 1.0 / t3);
            Theta::new(t1, (r.sqrt() + w * (r - r.sqrt())) * t1, t3)
        })
    }

    proptest! {
        #[test]
        fn branches_meet_at_selector_root(th in feasible_theta()) {
            let xb = selector_root(&th, C);
            prop_assume!(xb.is_finite() && xb.abs() < 200.0);
            // both branch equations vanish at x = x̄ on the selector boundary
            let (q0, _) = q_functions(xb, &th, xb, BETA, C);
            prop_assert!(q0.abs() < 1e-12);
            let (_, c_v) = coeffs_of(&th, xb, C);
            let g = (th.theta1 * xb).exp() - BETA * c_v + mu_of_theta(&th, BETA) * C;
            let (_, q1) = q_functions(xb, &th, xb, BETA, C);
            prop_assert!((g - q1).abs() < 1e-9 * (1.0 + g.abs()));
            let cfg = PiConfig { alpha_pi: 1.0, ..PiConfig::default() };
            for side in [-1e-7, 1e-7] {
                let step = iterate_boundary_detailed(&th, xb + side, BETA, C, &cfg).unwrap();
                prop_assert!((step.raw - xb).abs() < 1e-3, "{:?}", step);
            }
        }

        #[test]
        fn iteration_is_total_on_feasible_set(th in feasible_theta(), xb in -10.0f64..5.0) {
            let s = iterate_boundary_detailed(&th, xb, BETA, C, &PiConfig::default()).unwrap();
            prop_assert!(s.next.is_finite());
            match s.case {
                BoundaryCase::Shrink => prop_assert!(s.raw < xb),
                _ => prop_assert!(s.raw >= xb),
            }
        }
    }
}
