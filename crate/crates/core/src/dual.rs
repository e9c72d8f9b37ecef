//! Minimal scalar abstraction with forward-mode dual numbers.
//!
//! The constraint pipeline is written once over [`Real`] and evaluated with
//! `f64` for values or [`Dual4`] for values plus the exact gradient with
//! respect to the four intrinsic parameters.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

pub trait Real:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
{
    fn constant(v: f64) -> Self;
    fn value(&self) -> f64;
    fn sqrt(self) -> Self;

    fn zero() -> Self {
        Self::constant(0.0)
    }
    fn scale(self, s: f64) -> Self {
        self * Self::constant(s)
    }
}

impl Real for f64 {
    fn constant(v: f64) -> Self {
        v
    }
    fn value(&self) -> f64 {
        *self
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
}

/// Value and gradient with respect to four independent variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual4 {
    pub v: f64,
    pub d: [f64; 4],
}

impl Dual4 {
    pub fn variable(v: f64, index: usize) -> Self {
        let mut d = [0.0; 4];
        d[index] = 1.0;
        Self { v, d }
    }

    fn map_d(self, f: impl Fn(f64) -> f64) -> [f64; 4] {
        self.d.map(f)
    }
}

impl Add for Dual4 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self { v: self.v + o.v, d: std::array::from_fn(|i| self.d[i] + o.d[i]) }
    }
}

impl AddAssign for Dual4 {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl Sub for Dual4 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self { v: self.v - o.v, d: std::array::from_fn(|i| self.d[i] - o.d[i]) }
    }
}

#[allow(clippy::suspicious_arithmetic_impl)]
impl Mul for Dual4 {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self { v: self.v * o.v, d: std::array::from_fn(|i| self.d[i] * o.v + self.v * o.d[i]) }
    }
}

impl Div for Dual4 {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let inv = 1.0 / o.v;
        let q = self.v * inv;
        Self { v: q, d: std::array::from_fn(|i| (self.d[i] - q * o.d[i]) * inv) }
    }
}

impl Neg for Dual4 {
    type Output = Self;
    fn neg(self) -> Self {
        Self { v: -self.v, d: self.map_d(|x| -x) }
    }
}

impl Real for Dual4 {
    fn constant(v: f64) -> Self {
        Self { v, d: [0.0; 4] }
    }
    fn value(&self) -> f64 {
        self.v
    }
    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        let k = 0.5 / s;
        Self { v: s, d: self.map_d(|x| x * k) }
    }
    fn scale(self, s: f64) -> Self {
        Self { v: self.v * s, d: self.map_d(|x| x * s) }
    }
}

/// Dense 3×3 matrix over any [`Real`].
pub(crate) type M3<S> = [[S; 3]; 3];

pub(crate) fn m3_from<S: Real>(m: &nalgebra::Matrix3<f64>) -> M3<S> {
    std::array::from_fn(|r| std::array::from_fn(|c| S::constant(m[(r, c)])))
}

pub(crate) fn m3_mul<S: Real>(a: &M3<S>, b: &M3<S>) -> M3<S> {
    std::array::from_fn(|r| std::array::from_fn(|c| a[r][0] * b[0][c] + a[r][1] * b[1][c] + a[r][2] * b[2][c]))
}

/// `a bᵀ`
pub(crate) fn m3_mul_t<S: Real>(a: &M3<S>, b: &M3<S>) -> M3<S> {
    std::array::from_fn(|r| std::array::from_fn(|c| a[r][0] * b[c][0] + a[r][1] * b[c][1] + a[r][2] * b[c][2]))
}

pub(crate) fn m3_add<S: Real>(a: &M3<S>, b: &M3<S>) -> M3<S> {
    std::array::from_fn(|r| std::array::from_fn(|c| a[r][c] + b[r][c]))
}

pub(crate) fn m3_sub<S: Real>(a: &M3<S>, b: &M3<S>) -> M3<S> {
    std::array::from_fn(|r| std::array::from_fn(|c| a[r][c] - b[r][c]))
}

pub(crate) fn m3_scale<S: Real>(a: &M3<S>, s: S) -> M3<S> {
    std::array::from_fn(|r| std::array::from_fn(|c| a[r][c] * s))
}

pub(crate) fn m3_trace<S: Real>(a: &M3<S>) -> S {
    a[0][0] + a[1][1] + a[2][2]
}

/// `tr(a b)` without forming the product.
pub(crate) fn m3_trace_mul<S: Real>(a: &M3<S>, b: &M3<S>) -> S {
    let mut acc = S::zero();
    for r in 0..3 {
        for m in 0..3 {
            acc += a[r][m] * b[m][r];
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dual_arithmetic_matches_calculus() {
        let x = Dual4::variable(2.0, 0);
        let y = Dual4::variable(3.0, 1);
        let f = (x * x * y - x / y).sqrt();
        let inner = 4.0 * 3.0 - 2.0 / 3.0;
        let s = inner.sqrt();
        assert!((f.v - s).abs() < 1e-15);
        let dfx = (2.0 * 2.0 * 3.0 - 1.0 / 3.0) / (2.0 * s);
        let dfy = (4.0 + 2.0 / 9.0) / (2.0 * s);
        assert!((f.d[0] - dfx).abs() < 1e-14);
        assert!((f.d[1] - dfy).abs() < 1e-14);
        assert_eq!(f.d[2], 0.0);
        assert_eq!((-x).d[0], -1.0);
    }
}
