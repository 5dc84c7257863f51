//! Bracketing root finders for monotone or sign-changing scalar functions.

use crate::error::NumericError;

/// Bisection on `[lo, hi]` given `f(lo)` and `f(hi)` of opposite sign (or zero).
///
/// Runs `iters` halvings or stops once the bracket collapses in floating point.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, iters: usize) -> f64 {
    let mut flo = f(lo);
    if flo == 0.0 {
        return lo;
    }
    for _ in 0..iters {
        let mid = 0.5 * (lo + hi);
        if mid <= lo.min(hi) || mid >= lo.max(hi) {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Newton steps from `x`, each accepted only if it stays inside `[lo, hi]`
/// and does not increase `|f|`.
pub fn newton_polish<F, D>(f: F, df: D, mut x: f64, lo: f64, hi: f64, steps: usize) -> f64
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let (lo, hi) = (lo.min(hi), lo.max(hi));
    let mut fx = f(x);
    for _ in 0..steps {
        let d = df(x);
        if fx == 0.0 || d == 0.0 || !d.is_finite() {
            break;
        }
        let next = x - fx / d;
        if !(next >= lo && next <= hi) {
            break;
        }
        let fn_ = f(next);
        if fn_.abs() > fx.abs() {
            break;
        }
        if next == x {
            break;
        }
        x = next;
        fx = fn_;
    }
    x
}

/// Expands `[start, start + dir·step·2^k]` until `pred(f(x))` holds at the far end.
///
/// Returns the last point where it failed and the first point where it held.
pub fn expand_until<F, P>(
    f: F,
    start: f64,
    dir: f64,
    step: f64,
    max_doublings: u32,
    pred: P,
) -> Result<(f64, f64), NumericError>
where
    F: Fn(f64) -> f64,
    P: Fn(f64) -> bool,
{
    let mut inner = start;
    let mut width = step;
    for _ in 0..=max_doublings {
        let outer = start + dir * width;
        if pred(f(outer)) {
            return Ok((inner, outer));
        }
        inner = outer;
        width *= 2.0;
    }
    Err(NumericError::NoBracket {
        from: start,
        to: inner,
    })
}
