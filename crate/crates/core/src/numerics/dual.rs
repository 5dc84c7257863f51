//! Forward-mode differentiation over three seed directions.
//!
//! The critic's closed-form evaluators are written once against [`Scalar`]
//! and instantiated with `f64` for values and [`Dual3`] for θ-gradients.

use std::ops::{Add, Div, Mul, Neg, Sub};

use super::normal;

pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn cst(v: f64) -> Self;
    fn value(&self) -> f64;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn ncdf(self) -> Self;
    fn npdf(self) -> Self;
    fn ln_ncdf(self) -> Self;
}

impl Scalar for f64 {
    #[inline]
    fn cst(v: f64) -> Self {
        v
    }
    #[inline]
    fn value(&self) -> f64 {
        *self
    }
    #[inline]
    fn exp(self) -> Self {
        f64::exp(self)
    }
    #[inline]
    fn ln(self) -> Self {
        f64::ln(self)
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn ncdf(self) -> Self {
        normal::cdf(self)
    }
    #[inline]
    fn npdf(self) -> Self {
        normal::pdf(self)
    }
    #[inline]
    fn ln_ncdf(self) -> Self {
        normal::ln_cdf(self)
    }
}

/// Value plus gradient with respect to three independent variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual3 {
    pub v: f64,
    pub d: [f64; 3],
}

impl Dual3 {
    /// The `i`-th independent variable at value `v`.
    pub fn var(v: f64, i: usize) -> Self {
        let mut d = [0.0; 3];
        d[i] = 1.0;
        Dual3 { v, d }
    }

    #[inline]
    fn chain(self, v: f64, dv: f64) -> Self {
        Dual3 {
            v,
            d: [self.d[0] * dv, self.d[1] * dv, self.d[2] * dv],
        }
    }
}

impl Add for Dual3 {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Dual3 {
            v: self.v + o.v,
            d: [self.d[0] + o.d[0], self.d[1] + o.d[1], self.d[2] + o.d[2]],
        }
    }
}

impl Sub for Dual3 {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Dual3 {
            v: self.v - o.v,
            d: [self.d[0] - o.d[0], self.d[1] - o.d[1], self.d[2] - o.d[2]],
        }
    }
}

impl Mul for Dual3 {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        Dual3 {
            v: self.v * o.v,
            d: [
                self.d[0] * o.v + self.v * o.d[0],
                self.d[1] * o.v + self.v * o.d[1],
                self.d[2] * o.v + self.v * o.d[2],
            ],
        }
    }
}

impl Div for Dual3 {
    type Output = Self;
    #[inline]
    fn div(self, o: Self) -> Self {
        let inv = 1.0 / o.v;
        let q = self.v * inv;
        Dual3 {
            v: q,
            d: [
                (self.d[0] - q * o.d[0]) * inv,
                (self.d[1] - q * o.d[1]) * inv,
                (self.d[2] - q * o.d[2]) * inv,
            ],
        }
    }
}

impl Neg for Dual3 {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Dual3 {
            v: -self.v,
            d: [-self.d[0], -self.d[1], -self.d[2]],
        }
    }
}

impl Add<f64> for Dual3 {
    type Output = Self;
    #[inline]
    fn add(self, o: f64) -> Self {
        Dual3 { v: self.v + o, d: self.d }
    }
}

impl Sub<f64> for Dual3 {
    type Output = Self;
    #[inline]
    fn sub(self, o: f64) -> Self {
        Dual3 { v: self.v - o, d: self.d }
    }
}

impl Mul<f64> for Dual3 {
    type Output = Self;
    #[inline]
    fn mul(self, o: f64) -> Self {
        self.chain(self.v * o, o)
    }
}

impl Div<f64> for Dual3 {
    type Output = Self;
    #[inline]
    fn div(self, o: f64) -> Self {
        self.chain(self.v / o, 1.0 / o)
    }
}

impl Scalar for Dual3 {
    #[inline]
    fn cst(v: f64) -> Self {
        Dual3 { v, d: [0.0; 3] }
    }
    #[inline]
    fn value(&self) -> f64 {
        self.v
    }
    #[inline]
    fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e)
    }
    #[inline]
    fn ln(self) -> Self {
        self.chain(self.v.ln(), 1.0 / self.v)
    }
    #[inline]
    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, 0.5 / s)
    }
    #[inline]
    fn ncdf(self) -> Self {
        self.chain(normal::cdf(self.v), normal::pdf(self.v))
    }
    #[inline]
    fn npdf(self) -> Self {
        let p = normal::pdf(self.v);
        self.chain(p, -self.v * p)
    }
    #[inline]
    fn ln_ncdf(self) -> Self {
        self.chain(normal::ln_cdf(self.v), normal::inv_mills(self.v))
    }
}
