//! Globally adaptive Gauss–Kronrod (7/15) quadrature on finite intervals.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::NumericError;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728,
];
// Gauss weights for the 7-point rule (nodes are XGK[1], XGK[3], XGK[5], XGK[7])
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            abs_tol: 1e-10,
            rel_tol: 1e-12,
            max_intervals: 2000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    Segment {
        a,
        b,
        value: kronrod * h,
        error: ((kronrod - gauss) * h).abs(),
    }
}

/// Integrates `f` over `[a, b]`, optionally pre-split at interior `breaks`.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    opts: QuadOptions,
) -> Result<QuadResult, NumericError> {
    if a == b {
        return Ok(QuadResult { value: 0.0, error: 0.0 });
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut points = vec![lo];
    points.extend(breaks.iter().copied().filter(|&p| p > lo && p < hi));
    points.push(hi);
    points.sort_by(f64::total_cmp);

    let mut heap = BinaryHeap::new();
    for w in points.windows(2) {
        heap.push(gk15(&f, w[0], w[1]));
    }
    loop {
        let (value, error) = heap
            .iter()
            .fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error));
        if !value.is_finite() || !error.is_finite() {
            return Err(NumericError::NonFinite("quadrature integrand"));
        }
        if error <= opts.abs_tol.max(opts.rel_tol * value.abs()) {
            return Ok(QuadResult {
                value: sign * value,
                error,
            });
        }
        if heap.len() >= opts.max_intervals {
            return Err(NumericError::QuadratureNotConverged {
                value: sign * value,
                error,
            });
        }
        let worst = heap.pop().expect("heap is non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval cannot be split further in floating point
            return Err(NumericError::QuadratureNotConverged {
                value: sign * value,
                error,
            });
        }
        heap.push(gk15(&f, worst.a, mid));
        heap.push(gk15(&f, mid, worst.b));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| x.powi(5) - 3.0 * x * x, -1.0, 2.0, &[], QuadOptions::default())
            .unwrap();
        // ∫ x^5 - 3x^2 = [x^6/6 - x^3] = (64/6 - 8) - (1/6 + 1)
        assert!((r.value - (64.0 / 6.0 - 8.0 - 1.0 / 6.0 - 1.0)).abs() < 1e-13);
    }

    #[test]
    fn kinked_integrand_with_break() {
        let r = integrate(|x: f64| x.abs(), -1.0, 3.0, &[0.0], QuadOptions::default()).unwrap();
        assert!((r.value - 5.0).abs() < 1e-13);
        let back = integrate(|x: f64| x.abs(), 3.0, -1.0, &[0.0], QuadOptions::default()).unwrap();
        assert!((back.value + 5.0).abs() < 1e-13);
    }

    #[test]
    fn sharp_peak_converges() {
        let r = integrate(
            |x: f64| (-1e4 * (x - 0.3).powi(2)).exp(),
            0.0,
            1.0,
            &[],
            QuadOptions::default(),
        )
        .unwrap();
        let exact = (std::f64::consts::PI / 1e4).sqrt();
        assert!((r.value - exact).abs() < 1e-10);
    }

    #[test]
    fn non_convergence_reports_estimate() {
        let opts = QuadOptions {
            max_intervals: 3,
            ..QuadOptions::default()
        };
        match integrate(|x: f64| (1.0 / x).sin(), 1e-6, 1.0, &[], opts) {
            Err(NumericError::QuadratureNotConverged { error, .. }) => assert!(error > 0.0),
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }
}
