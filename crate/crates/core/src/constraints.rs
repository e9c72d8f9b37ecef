//! The 15 quartic identities satisfied by calibrated trifocal tensors.
//!
//! Residual order is fixed as
//! `[A1(s=0,1,2), A2(s=0,1,2), A3(s=0,1,2), B1(s=0,1,2), B2(s=0,1,2)]`
//! where `s` is a simultaneous cyclic shift `k → k+s (mod 3)` of every
//! slice index in the template:
//!
//! ```text
//! A1: ψ(U3−U1, U3−U1) − ψ(V3, V3)
//! A2: ψ(U3−U1, V1) + ψ(V2, V3)
//! A3: ψ(U1−U2, V1)
//! B1: tr(U2)² − tr(V3)² − tr(U2² − V3² + (U3−U1)²)
//! B2: tr(V2) tr(U1 − 2U2 − U3) − tr(V1) tr(V3) + 2 tr(V2 U2)
//! ```
//!
//! with `U_k = T_k T_kᵀ`, `V_k = T_k T_{k+1}ᵀ + T_{k+1} T_kᵀ` and
//! `ψ(X, Y) = tr(X) tr(Y) − 2 tr(XY)`.

use nalgebra::Matrix3;

use crate::dual::{m3_add, m3_from, m3_mul, m3_mul_t, m3_scale, m3_sub, m3_trace, m3_trace_mul, Real, M3};
use crate::error::{Error, Result};
use crate::geometry::TrifocalTensor;

pub const NUM_CONSTRAINTS: usize = 15;
const UNIT_NORM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetricProducts {
    pub u: [Matrix3<f64>; 3],
    pub v: [Matrix3<f64>; 3],
}

/// The 15 constraint values in the documented order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintResiduals {
    pub values: [f64; NUM_CONSTRAINTS],
}

impl ConstraintResiduals {
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn sum_squares(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Residuals of one template (`0..5`) in shift order.
    pub fn template(&self, template: usize) -> [f64; 3] {
        std::array::from_fn(|s| self.values[3 * template + s])
    }
}

pub fn sym_products(t: &TrifocalTensor) -> SymmetricProducts {
    let s = &t.slices;
    let u = [0, 1, 2].map(|k| s[k] * s[k].transpose());
    let v = [0, 1, 2].map(|k| {
        let n = (k + 1) % 3;
        s[k] * s[n].transpose() + s[n] * s[k].transpose()
    });
    SymmetricProducts { u, v }
}

pub fn psi(x: &Matrix3<f64>, y: &Matrix3<f64>) -> f64 {
    x.trace() * y.trace() - 2.0 * (x * y).trace()
}

/// Evaluates the constraints on a unit-norm tensor.
pub fn quartic_residuals(t: &TrifocalTensor) -> Result<ConstraintResiduals> {
    let norm = t.frobenius_norm();
    if !((1.0 - UNIT_NORM_TOL)..=(1.0 + UNIT_NORM_TOL)).contains(&norm) {
        return Err(Error::NotNormalized { norm });
    }
    Ok(quartic_residuals_unchecked(t))
}

/// Same as [`quartic_residuals`] without the unit-norm precondition.
pub fn quartic_residuals_unchecked(t: &TrifocalTensor) -> ConstraintResiduals {
    let slices = t.slices.map(|s| m3_from::<f64>(&s));
    ConstraintResiduals { values: residuals_generic(&slices) }
}

fn psi_generic<S: Real>(x: &M3<S>, y: &M3<S>) -> S {
    m3_trace(x) * m3_trace(y) - m3_trace_mul(x, y).scale(2.0)
}

pub(crate) fn residuals_generic<S: Real>(t: &[M3<S>; 3]) -> [S; NUM_CONSTRAINTS] {
    let u: [M3<S>; 3] = std::array::from_fn(|k| m3_mul_t(&t[k], &t[k]));
    let v: [M3<S>; 3] = std::array::from_fn(|k| {
        let n = (k + 1) % 3;
        m3_add(&m3_mul_t(&t[k], &t[n]), &m3_mul_t(&t[n], &t[k]))
    });

    let mut out = [S::zero(); NUM_CONSTRAINTS];
    for s in 0..3 {
        // 1-based template index k maps to (k - 1 + s) mod 3.
        let u_ = |k: usize| &u[(k - 1 + s) % 3];
        let v_ = |k: usize| &v[(k - 1 + s) % 3];
        let d31 = m3_sub(u_(3), u_(1));

        out[s] = psi_generic(&d31, &d31) - psi_generic(v_(3), v_(3));
        out[3 + s] = psi_generic(&d31, v_(1)) + psi_generic(v_(2), v_(3));
        out[6 + s] = psi_generic(&m3_sub(u_(1), u_(2)), v_(1));

        let tr_u2 = m3_trace(u_(2));
        let tr_v3 = m3_trace(v_(3));
        let inner = m3_add(&m3_sub(&m3_mul(u_(2), u_(2)), &m3_mul(v_(3), v_(3))), &m3_mul(&d31, &d31));
        out[9 + s] = tr_u2 * tr_u2 - tr_v3 * tr_v3 - m3_trace(&inner);

        let mix = m3_sub(&m3_sub(u_(1), &m3_scale(u_(2), S::constant(2.0))), u_(3));
        out[12 + s] = m3_trace(v_(2)) * m3_trace(&mix) - m3_trace(v_(1)) * m3_trace(v_(3))
            + m3_trace_mul(v_(2), u_(2)).scale(2.0);
    }
    out
}
