//! Fundamental-matrix baseline: normalized eight-point estimation and
//! calibration from the equal singular values of `E = Kᵀ F K`.

use nalgebra::{DMatrix, DVector, Matrix3, Vector2};

use crate::calibration::{report_from_outcome, CalibrationConfig, CalibrationReport};
use crate::error::{Error, Result};
use crate::estimation::{null_vector, similarity_for, EstimationOptions};
use crate::geometry::{Intrinsics, PointTriple};
use crate::solver::{minimize, LeastSquaresProblem, Termination};

pub const MIN_PAIRS: usize = 8;

/// Rank-2, unit Frobenius norm, largest-magnitude entry positive.
/// Maps view-1 points to view-2 epipolar lines: `x₂ᵀ F x₁ = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FundamentalMatrix(pub Matrix3<f64>);

impl FundamentalMatrix {
    /// Normalizes scale and sign; rank is left as given.
    pub fn from_matrix(m: Matrix3<f64>) -> Result<Self> {
        let n = m.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidConfig("fundamental matrix is zero or non-finite".into()));
        }
        let lead = m.iter().fold(0.0_f64, |b, &v| if v.abs() > b.abs() { v } else { b });
        Ok(Self(m * (lead.signum() / n)))
    }

    pub fn epipolar_residual(&self, x1: &Vector2<f64>, x2: &Vector2<f64>) -> f64 {
        (x2.push(1.0).transpose() * self.0 * x1.push(1.0))[(0, 0)]
    }
}

pub fn estimate_fundamental(pairs: &[(Vector2<f64>, Vector2<f64>)]) -> Result<FundamentalMatrix> {
    estimate_fundamental_with(pairs, &EstimationOptions::default())
}

pub fn estimate_fundamental_with(
    pairs: &[(Vector2<f64>, Vector2<f64>)],
    options: &EstimationOptions,
) -> Result<FundamentalMatrix> {
    if pairs.len() < MIN_PAIRS {
        return Err(Error::TooFewPairs { needed: MIN_PAIRS, got: pairs.len() });
    }
    let n1 = similarity_for(pairs.iter().map(|p| p.0)).ok_or(Error::DegenerateCloud { view: 0 })?;
    let n2 = similarity_for(pairs.iter().map(|p| p.1)).ok_or(Error::DegenerateCloud { view: 1 })?;

    let mut a = DMatrix::zeros(pairs.len(), 9);
    for (row, (p1, p2)) in pairs.iter().enumerate() {
        let x = n1 * p1.push(1.0);
        let y = n2 * p2.push(1.0);
        for r in 0..3 {
            for c in 0..3 {
                a[(row, 3 * r + c)] = y[r] * x[c];
            }
        }
    }
    let (v, ratio) = null_vector(a);
    if ratio < options.min_condition_ratio {
        return Err(Error::IllConditioned { ratio, threshold: options.min_condition_ratio });
    }
    let f_norm = Matrix3::from_row_slice(&v);
    let svd = f_norm.svd(true, true);
    let (u, v_t) = (svd.u.expect("U"), svd.v_t.expect("V"));
    let mut s = svd.singular_values;
    let smallest = s.imin();
    s[smallest] = 0.0;
    let rank2 = u * Matrix3::from_diagonal(&s) * v_t;
    FundamentalMatrix::from_matrix(n2.transpose() * rank2 * n1)
}

/// Fundamental matrices of the view pairs (1,2), (1,3), (2,3) of a triplet.
pub fn fundamentals_from_triples(triples: &[PointTriple]) -> Result<Vec<FundamentalMatrix>> {
    [(0, 1), (0, 2), (1, 2)]
        .iter()
        .map(|&(a, b)| {
            let pairs: Vec<_> = triples.iter().map(|t| (t.view(a), t.view(b))).collect();
            estimate_fundamental(&pairs)
        })
        .collect()
}

/// `(σ1 − σ2) / σ2` of `E = Kᵀ F K`.
pub fn essential_ratio_residual(k: &Intrinsics, f: &FundamentalMatrix) -> Result<f64> {
    k.validate()?;
    let km = k.matrix();
    let e = km.transpose() * f.0 * km;
    let e = e / e.norm();
    let mut s: Vec<f64> = e.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    if !(s[1] >= 1e-12) {
        return Err(Error::DegenerateEssential { sigma2: s[1] });
    }
    Ok((s[0] - s[1]) / s[1])
}

/// `Σ ((σ1 − σ2) / σ2)²` over all fundamental matrices.
pub fn essential_singular_cost(k: &Intrinsics, fs: &[FundamentalMatrix]) -> Result<f64> {
    if fs.is_empty() {
        return Err(Error::TooFewInputs { needed: 1, got: 0 });
    }
    fs.iter().map(|f| essential_ratio_residual(k, f).map(|r| r * r)).sum()
}

/// Vector form of [`essential_ratio_residual`]: its Euclidean norm equals
/// `(σ1 − σ2) / σ2`, but unlike the scalar it is smooth where `σ1 = σ2`.
///
/// With `M = E Eᵀ` and `n` the left null vector of `E`, the deviator
/// `D = M − ½ tr(M) (I − n nᵀ)` has norm `(σ1² − σ2²) / √2`, so scaling it by
/// `√2 / (σ2 (σ1 + σ2))` recovers the ratio exactly.
pub fn essential_deviator_residual(k: &Intrinsics, f: &FundamentalMatrix) -> Result<[f64; 9]> {
    k.validate()?;
    let km = k.matrix();
    let e = km.transpose() * f.0 * km;
    let e = e / e.norm();
    let svd = e.svd(true, false);
    let u = svd.u.expect("requested U");
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let (s1, s2) = (svd.singular_values[order[0]], svd.singular_values[order[1]]);
    if !(s2 >= 1e-12) {
        return Err(Error::DegenerateEssential { sigma2: s2 });
    }
    let n = u.column(order[2]);
    let m = e * e.transpose();
    let d = m - (Matrix3::identity() - n * n.transpose()) * (0.5 * m.trace());
    let d = d * (std::f64::consts::SQRT_2 / (s2 * (s1 + s2)));
    Ok(std::array::from_fn(|i| d[(i / 3, i % 3)]))
}

struct EssentialProblem<'a> {
    fs: &'a [FundamentalMatrix],
}

impl LeastSquaresProblem for EssentialProblem<'_> {
    fn residuals(&self, p: &DVector<f64>) -> Option<DVector<f64>> {
        let k = Intrinsics::new(p[0], p[1], p[2], p[3]).ok()?;
        let mut r = Vec::with_capacity(9 * self.fs.len());
        for f in self.fs {
            r.extend(essential_deviator_residual(&k, f).ok()?);
        }
        Some(DVector::from_vec(r))
    }
}

pub fn calibrate_fundamental(
    fs: &[FundamentalMatrix],
    k0: &Intrinsics,
    cfg: &CalibrationConfig,
) -> Result<CalibrationReport> {
    if fs.len() < 2 {
        return Err(Error::TooFewInputs { needed: 2, got: fs.len() });
    }
    k0.validate()?;
    cfg.validate()?;
    let start = DVector::from_row_slice(&k0.to_array());
    let outcome = minimize(&EssentialProblem { fs }, &start, &cfg.bounds_around(k0), &cfg.solver);
    if outcome.termination == Termination::EvaluationFailed {
        return Err(Error::DegenerateEssential { sigma2: 0.0 });
    }
    let k = Intrinsics::new(outcome.params[0], outcome.params[1], outcome.params[2], outcome.params[3])?;
    let residuals = fs.iter().map(|f| essential_ratio_residual(&k, f)).collect::<Result<Vec<_>>>()?;
    report_from_outcome(outcome, residuals, cfg.tau)
}
