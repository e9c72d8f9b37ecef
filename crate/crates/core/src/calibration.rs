//! Intrinsic calibration by minimizing the quartic constraint violation of
//! one or more pixel-space trifocal tensors.
//!
//! Three strategies share the same residual model:
//!
//! * [`calibrate_direct`] runs bounded Levenberg–Marquardt over all tensors.
//! * [`calibrate_msac`] calibrates on each tensor alone and keeps the
//!   candidate with the best MSAC score over every tensor.
//! * [`calibrate_msac_opt`] refines the MSAC pick by maximizing the score.
//!
//! The MSAC residual of tensor `j` at `K` is the Euclidean norm of its 15
//! constraint residuals after transforming by `K` and unit-normalizing.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::constraints::{quartic_residuals, residuals_generic, ConstraintResiduals, NUM_CONSTRAINTS};
use crate::dual::{m3_add, m3_from, m3_mul, m3_mul_t, m3_scale, Dual4, Real, M3};
use crate::error::{Error, Result};
use crate::estimation::transfer_error;
use crate::geometry::{apply_intrinsics_transform, normalize_tensor, Intrinsics, PointTriple, TrifocalTensor};
use crate::solver::{minimize, Bounds, LeastSquaresProblem, SolverOptions, SolverOutcome, Termination};

/// How `calibrate_msac` scores a candidate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MsacScoring {
    /// Per-tensor constraint residual norms against `tau`.
    Constraint,
    /// Pixel transfer errors of the candidate tensor's own correspondences
    /// against `tau_px`. Needs [`calibrate_msac_with_support`].
    TransferError { tau_px: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationConfig {
    /// MSAC inlier threshold on unit-norm constraint residuals.
    pub tau: f64,
    pub solver: SolverOptions,
    /// Each parameter is confined to `[lo·p0, hi·p0]` around the start.
    pub bound_factors: (f64, f64),
    pub scoring: MsacScoring,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self { tau: 1e-2, solver: SolverOptions::default(), bound_factors: (0.5, 2.0), scoring: MsacScoring::Constraint }
    }
}

impl CalibrationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) {
            return Err(Error::InvalidThreshold(self.tau));
        }
        let (lo, hi) = self.bound_factors;
        if !(lo > 0.0 && lo <= 1.0 && hi >= 1.0) {
            return Err(Error::InvalidConfig(format!("bound factors ({lo}, {hi}) must enclose 1")));
        }
        if let MsacScoring::TransferError { tau_px } = self.scoring {
            if !(tau_px > 0.0) {
                return Err(Error::InvalidThreshold(tau_px));
            }
        }
        Ok(())
    }

    /// Parameter box around `k0`. Parameters that are zero get a symmetric
    /// box of half the larger focal length.
    pub fn bounds_around(&self, k0: &Intrinsics) -> Bounds {
        let (lo, hi) = self.bound_factors;
        let focal = k0.fx.max(k0.fy);
        let (lower, upper): (Vec<f64>, Vec<f64>) = k0
            .to_array()
            .iter()
            .map(|&p| {
                if p.abs() <= 1e-9 * focal {
                    (p - 0.5 * focal, p + 0.5 * focal)
                } else {
                    let (a, b) = (lo * p, hi * p);
                    (a.min(b), a.max(b))
                }
            })
            .unzip();
        Bounds { lower: DVector::from_vec(lower), upper: DVector::from_vec(upper) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationReport {
    pub intrinsics: Intrinsics,
    /// Solver cost after every accepted step of the final optimization.
    pub cost_trajectory: Vec<f64>,
    /// Per-input residual at `intrinsics` (constraint norm per tensor, or
    /// the singular-value ratio per fundamental matrix).
    pub residuals: Vec<f64>,
    pub msac_score: f64,
    pub iterations: usize,
    pub converged: bool,
    pub termination: Termination,
    /// Index of the tensor whose candidate was selected, for MSAC variants.
    pub selected_candidate: Option<usize>,
    /// MSAC score per candidate; `None` where the candidate failed.
    pub candidate_scores: Vec<Option<f64>>,
}

impl CalibrationReport {
    pub fn final_cost(&self) -> f64 {
        self.cost_trajectory.last().copied().unwrap_or(f64::NAN)
    }
}

/// `1 − (1/N) Σ min(rᵢ/τ, 1)`.
pub fn msac_score(residuals: &[f64], tau: f64) -> Result<f64> {
    if residuals.is_empty() {
        return Err(Error::EmptyResiduals);
    }
    if !(tau > 0.0) {
        return Err(Error::InvalidThreshold(tau));
    }
    let capped: f64 = residuals.iter().map(|r| (r / tau).min(1.0)).sum();
    Ok(1.0 - capped / residuals.len() as f64)
}

/// Sum over tensors of the squared constraint residuals at `k`, with the
/// per-tensor residual vectors.
pub fn constraint_cost(k: &Intrinsics, tensors: &[TrifocalTensor]) -> Result<(f64, Vec<ConstraintResiduals>)> {
    if tensors.is_empty() {
        return Err(Error::TooFewInputs { needed: 1, got: 0 });
    }
    k.validate()?;
    let residuals = tensors
        .iter()
        .map(|t| quartic_residuals(&normalize_tensor(&apply_intrinsics_transform(t, k)?)?))
        .collect::<Result<Vec<_>>>()?;
    Ok((residuals.iter().map(|r| r.sum_squares()).sum(), residuals))
}

/// Per-tensor MSAC residuals `‖φ(T̂_j(K))‖₂`.
pub fn tensor_residuals(k: &Intrinsics, tensors: &[TrifocalTensor]) -> Result<Vec<f64>> {
    Ok(constraint_cost(k, tensors)?.1.iter().map(|r| r.norm()).collect())
}

/// Stacked constraint residuals of every tensor as a function of
/// `(fx, fy, cx, cy)`, with an exact forward-mode Jacobian.
#[derive(Debug, Clone)]
pub struct ConstraintProblem {
    tensors: Vec<TrifocalTensor>,
}

impl ConstraintProblem {
    /// Input tensors are rescaled to unit norm; residuals are scale-free.
    pub fn new(tensors: &[TrifocalTensor]) -> Result<Self> {
        let tensors = tensors.iter().map(normalize_tensor).collect::<Result<Vec<_>>>()?;
        Ok(Self { tensors })
    }

    pub fn num_residuals(&self) -> usize {
        NUM_CONSTRAINTS * self.tensors.len()
    }

    fn evaluate<S: Real>(&self, k: [S; 4], out: &mut Vec<S>) -> bool {
        if !(k[0].value() > 0.0 && k[1].value() > 0.0) {
            return false;
        }
        for t in &self.tensors {
            let slices = transform_generic(t, k);
            let norm_sq = slices.iter().flatten().flatten().fold(S::zero(), |acc, &v| acc + v * v);
            if !(norm_sq.value() > 0.0) {
                return false;
            }
            let inv = S::constant(1.0) / norm_sq.sqrt();
            let unit = slices.map(|s| m3_scale(&s, inv));
            out.extend(residuals_generic(&unit));
        }
        true
    }

    pub fn jacobian_exact(&self, params: &DVector<f64>) -> Option<DMatrix<f64>> {
        let k: [Dual4; 4] = std::array::from_fn(|i| Dual4::variable(params[i], i));
        let mut out = Vec::with_capacity(self.num_residuals());
        if !self.evaluate(k, &mut out) {
            return None;
        }
        Some(DMatrix::from_fn(out.len(), 4, |r, c| out[r].d[c]))
    }
}

impl LeastSquaresProblem for ConstraintProblem {
    fn residuals(&self, params: &DVector<f64>) -> Option<DVector<f64>> {
        let k = [params[0], params[1], params[2], params[3]];
        let mut out = Vec::with_capacity(self.num_residuals());
        self.evaluate(k, &mut out).then(|| DVector::from_vec(out))
    }

    fn jacobian(&self, params: &DVector<f64>) -> Option<DMatrix<f64>> {
        self.jacobian_exact(params)
    }
}

/// `T̂_i = Σ_r K[r][i] K⁻¹ T_r K⁻ᵀ` for zero-skew `K`, over any scalar.
fn transform_generic<S: Real>(t: &TrifocalTensor, k: [S; 4]) -> [M3<S>; 3] {
    let [fx, fy, cx, cy] = k;
    let one = S::constant(1.0);
    let zero = S::zero();
    let kinv: M3<S> = [[one / fx, zero, -cx / fx], [zero, one / fy, -cy / fy], [zero, zero, one]];
    let inner: [M3<S>; 3] = std::array::from_fn(|r| m3_mul_t(&m3_mul(&kinv, &m3_from(&t.slices[r])), &kinv));
    [
        m3_scale(&inner[0], fx),
        m3_scale(&inner[1], fy),
        m3_add(&m3_add(&m3_scale(&inner[0], cx), &m3_scale(&inner[1], cy)), &inner[2]),
    ]
}

fn params_of(k: &Intrinsics) -> DVector<f64> {
    DVector::from_row_slice(&k.to_array())
}

fn intrinsics_of(p: &DVector<f64>) -> Result<Intrinsics> {
    Intrinsics::new(p[0], p[1], p[2], p[3])
}

pub(crate) fn report_from_outcome(
    outcome: SolverOutcome,
    residuals: Vec<f64>,
    tau: f64,
) -> Result<CalibrationReport> {
    let intrinsics = intrinsics_of(&outcome.params)?;
    let msac_score = msac_score(&residuals, tau)?;
    let converged = outcome.converged();
    Ok(CalibrationReport {
        intrinsics,
        cost_trajectory: outcome.cost_trajectory,
        residuals,
        msac_score,
        iterations: outcome.iterations,
        converged,
        termination: outcome.termination,
        selected_candidate: None,
        candidate_scores: vec![],
    })
}

/// Minimizes the summed squared constraint residuals of all tensors,
/// starting from `k0`, without any outlier handling.
pub fn calibrate_direct(tensors: &[TrifocalTensor], k0: &Intrinsics, cfg: &CalibrationConfig) -> Result<CalibrationReport> {
    if tensors.is_empty() {
        return Err(Error::TooFewInputs { needed: 1, got: 0 });
    }
    k0.validate()?;
    cfg.validate()?;
    let problem = ConstraintProblem::new(tensors)?;
    let outcome = minimize(&problem, &params_of(k0), &cfg.bounds_around(k0), &cfg.solver);
    if outcome.termination == Termination::EvaluationFailed {
        return Err(Error::InvalidConfig("constraint residuals could not be evaluated at the start point".into()));
    }
    let k = intrinsics_of(&outcome.params)?;
    let residuals = tensor_residuals(&k, tensors)?;
    report_from_outcome(outcome, residuals, cfg.tau)
}

pub fn calibrate_msac(tensors: &[TrifocalTensor], k0: &Intrinsics, cfg: &CalibrationConfig) -> Result<CalibrationReport> {
    if let MsacScoring::TransferError { .. } = cfg.scoring {
        return Err(Error::InvalidConfig("transfer-error scoring needs correspondences; use calibrate_msac_with_support".into()));
    }
    select_candidate(tensors, None, k0, cfg)
}

/// MSAC selection where each tensor comes with the correspondences it was
/// estimated from, enabling [`MsacScoring::TransferError`].
pub fn calibrate_msac_with_support(
    tensors: &[TrifocalTensor],
    support: &[Vec<PointTriple>],
    k0: &Intrinsics,
    cfg: &CalibrationConfig,
) -> Result<CalibrationReport> {
    if support.len() != tensors.len() {
        return Err(Error::InvalidConfig(format!("{} tensors but {} correspondence sets", tensors.len(), support.len())));
    }
    select_candidate(tensors, Some(support), k0, cfg)
}

struct Candidate {
    report: CalibrationReport,
    score: f64,
    total_cost: f64,
}

fn select_candidate(
    tensors: &[TrifocalTensor],
    support: Option<&[Vec<PointTriple>]>,
    k0: &Intrinsics,
    cfg: &CalibrationConfig,
) -> Result<CalibrationReport> {
    if tensors.len() < 2 {
        return Err(Error::TooFewInputs { needed: 2, got: tensors.len() });
    }
    k0.validate()?;
    cfg.validate()?;

    let candidates: Vec<Option<Candidate>> = tensors
        .par_iter()
        .enumerate()
        .map(|(idx, t)| {
            let report = calibrate_direct(std::slice::from_ref(t), k0, cfg).ok()?;
            if !report.converged {
                return None;
            }
            let (total_cost, per_tensor) = constraint_cost(&report.intrinsics, tensors).ok()?;
            let residuals: Vec<f64> = per_tensor.iter().map(|r| r.norm()).collect();
            let score = match (cfg.scoring, support) {
                (MsacScoring::TransferError { tau_px }, Some(sets)) => {
                    let errors: Vec<f64> = sets[idx].iter().map(|p| transfer_error(t, p)).collect();
                    msac_score(&errors, tau_px).ok()?
                }
                _ => msac_score(&residuals, cfg.tau).ok()?,
            };
            let report = CalibrationReport { residuals, msac_score: score, ..report };
            Some(Candidate { report, score, total_cost })
        })
        .collect();

    let candidate_scores: Vec<Option<f64>> = candidates.iter().map(|c| c.as_ref().map(|c| c.score)).collect();
    let mut best: Option<(usize, &Candidate)> = None;
    for (idx, c) in candidates.iter().enumerate() {
        let Some(c) = c else { continue };
        let better = match best {
            None => true,
            Some((_, b)) => c.score > b.score || (c.score == b.score && c.total_cost < b.total_cost),
        };
        if better {
            best = Some((idx, c));
        }
    }
    let (idx, chosen) = best.ok_or(Error::AllCandidatesFailed)?;
    Ok(CalibrationReport { selected_candidate: Some(idx), candidate_scores, ..chosen.report.clone() })
}

/// MSAC selection followed by a derivative-free search that maximizes the
/// constraint-residual MSAC score over all tensors. Only improving moves are
/// accepted, so the final score is never below the selected candidate's.
pub fn calibrate_msac_opt(tensors: &[TrifocalTensor], k0: &Intrinsics, cfg: &CalibrationConfig) -> Result<CalibrationReport> {
    let init_cfg = CalibrationConfig { scoring: MsacScoring::Constraint, ..*cfg };
    let init = calibrate_msac(tensors, k0, &init_cfg)?;
    refine_msac(tensors, init, k0, cfg)
}

pub(crate) fn refine_msac(
    tensors: &[TrifocalTensor],
    init: CalibrationReport,
    k0: &Intrinsics,
    cfg: &CalibrationConfig,
) -> Result<CalibrationReport> {
    let score_at = |p: &[f64; 4]| -> f64 {
        Intrinsics::from_array(*p)
            .and_then(|k| tensor_residuals(&k, tensors))
            .and_then(|r| msac_score(&r, cfg.tau))
            .unwrap_or(f64::NEG_INFINITY)
    };
    let start = init.intrinsics.to_array();
    let init_score = score_at(&start);
    // Residuals at rounding level leave nothing to improve.
    if init_score >= 1.0 - 1e-12 {
        return Ok(CalibrationReport { msac_score: init_score, ..init });
    }

    let bounds = cfg.bounds_around(k0);
    let clamp = |p: [f64; 4]| -> [f64; 4] { std::array::from_fn(|i| p[i].clamp(bounds.lower[i], bounds.upper[i])) };
    let step: [f64; 4] = std::array::from_fn(|i| 0.005 * start[i].abs().max(0.1 * start[0]));
    let (best, best_score, evaluations) = nelder_mead_max(&score_at, start, step, clamp, 2000);

    if best_score > init_score {
        let k = Intrinsics::from_array(best)?;
        let residuals = tensor_residuals(&k, tensors)?;
        let mut trajectory = init.cost_trajectory.clone();
        trajectory.push(constraint_cost(&k, tensors)?.0);
        Ok(CalibrationReport {
            intrinsics: k,
            cost_trajectory: trajectory,
            msac_score: msac_score(&residuals, cfg.tau)?,
            residuals,
            iterations: init.iterations + evaluations,
            ..init
        })
    } else {
        Ok(CalibrationReport { msac_score: init_score, ..init })
    }
}

/// Nelder–Mead maximization; returns the best vertex, its value and the
/// number of objective evaluations.
fn nelder_mead_max(
    f: &dyn Fn(&[f64; 4]) -> f64,
    start: [f64; 4],
    step: [f64; 4],
    clamp: impl Fn([f64; 4]) -> [f64; 4],
    max_evals: usize,
) -> ([f64; 4], f64, usize) {
    let mut simplex: Vec<([f64; 4], f64)> = Vec::with_capacity(5);
    simplex.push((start, f(&start)));
    for i in 0..4 {
        let mut p = start;
        p[i] += step[i];
        let p = clamp(p);
        simplex.push((p, f(&p)));
    }
    let mut evals = 5;
    let lerp = |a: &[f64; 4], b: &[f64; 4], t: f64| -> [f64; 4] { std::array::from_fn(|i| a[i] + t * (b[i] - a[i])) };

    while evals < max_evals {
        simplex.sort_by(|a, b| b.1.total_cmp(&a.1));
        let (best, worst) = (simplex[0].1, simplex[4].1);
        let size = simplex[1..]
            .iter()
            .map(|(p, _)| (0..4).map(|i| ((p[i] - simplex[0].0[i]) / step[i]).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if (best - worst).abs() <= 1e-13 && size < 1e-6 || size < 1e-9 {
            break;
        }
        let centroid: [f64; 4] = std::array::from_fn(|i| simplex[..4].iter().map(|(p, _)| p[i]).sum::<f64>() / 4.0);
        let reflected = clamp(lerp(&centroid, &simplex[4].0, -1.0));
        let fr = f(&reflected);
        evals += 1;
        if fr > simplex[0].1 {
            let expanded = clamp(lerp(&centroid, &simplex[4].0, -2.0));
            let fe = f(&expanded);
            evals += 1;
            simplex[4] = if fe > fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr > simplex[3].1 {
            simplex[4] = (reflected, fr);
        } else {
            let contracted = clamp(lerp(&centroid, &simplex[4].0, 0.5));
            let fc = f(&contracted);
            evals += 1;
            if fc > simplex[4].1 {
                simplex[4] = (contracted, fc);
            } else {
                let anchor = simplex[0].0;
                for v in simplex[1..].iter_mut() {
                    let p = clamp(lerp(&anchor, &v.0, 0.5));
                    *v = (p, f(&p));
                }
                evals += 4;
            }
        }
    }
    simplex.sort_by(|a, b| b.1.total_cmp(&a.1));
    (simplex[0].0, simplex[0].1, evals)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn msac_score_examples() {
        assert_eq!(msac_score(&[0.0, 0.0, 0.0], 0.1).unwrap(), 1.0);
        assert_eq!(msac_score(&[0.1, 5.0, 0.2], 0.1).unwrap(), 0.0);
        for tau in [1e-3, 0.5, 7.0] {
            assert_eq!(msac_score(&[0.5 * tau, 2.0 * tau], tau).unwrap(), 0.25);
        }
        assert_eq!(msac_score(&[], 1.0), Err(Error::EmptyResiduals));
        assert_eq!(msac_score(&[1.0], 0.0), Err(Error::InvalidThreshold(0.0)));
    }

    #[test]
    fn config_validation() {
        assert!(CalibrationConfig::default().validate().is_ok());
        assert!(CalibrationConfig { tau: -1.0, ..Default::default() }.validate().is_err());
        assert!(CalibrationConfig { bound_factors: (1.2, 2.0), ..Default::default() }.validate().is_err());
    }

    #[test]
    fn bounds_enclose_start() {
        let k0 = Intrinsics::new(1000.0, 900.0, 640.0, 0.0).unwrap();
        let b = CalibrationConfig::default().bounds_around(&k0);
        assert!(b.contains(&params_of(&k0)));
        assert_eq!(b.lower[0], 500.0);
        assert_eq!(b.upper[1], 1800.0);
        assert_eq!((b.lower[3], b.upper[3]), (-500.0, 500.0));
    }

    #[test]
    fn empty_inputs_are_rejected() {
        let k = Intrinsics::new(1.0, 1.0, 0.0, 0.0).unwrap();
        let cfg = CalibrationConfig::default();
        assert!(matches!(calibrate_direct(&[], &k, &cfg), Err(Error::TooFewInputs { .. })));
        assert!(matches!(calibrate_msac(&[TrifocalTensor::zeros()], &k, &cfg), Err(Error::TooFewInputs { .. })));
        assert!(matches!(constraint_cost(&k, &[]), Err(Error::TooFewInputs { .. })));
    }
}
