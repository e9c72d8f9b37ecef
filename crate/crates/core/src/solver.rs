//! Box-constrained Levenberg–Marquardt for small dense problems.

use nalgebra::{DMatrix, DVector};

/// A residual function `r(p)` with an optional analytic Jacobian.
pub trait LeastSquaresProblem {
    fn residuals(&self, params: &DVector<f64>) -> Option<DVector<f64>>;

    /// Defaults to central differences with a relative step of `1e-6`.
    fn jacobian(&self, params: &DVector<f64>) -> Option<DMatrix<f64>> {
        central_difference_jacobian(|p| self.residuals(p), params, 1e-6)
    }
}

pub fn central_difference_jacobian<F>(f: F, params: &DVector<f64>, rel_step: f64) -> Option<DMatrix<f64>>
where
    F: Fn(&DVector<f64>) -> Option<DVector<f64>>,
{
    let mut columns = Vec::with_capacity(params.len());
    for i in 0..params.len() {
        let h = rel_step * params[i].abs().max(1.0);
        let mut plus = params.clone();
        let mut minus = params.clone();
        plus[i] += h;
        minus[i] -= h;
        columns.push((f(&plus)? - f(&minus)?) / (2.0 * h));
    }
    Some(DMatrix::from_columns(&columns))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub gradient_tol: f64,
    pub step_tol: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { gradient_tol: 1e-10, step_tol: 1e-12, max_iterations: 200 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    pub lower: DVector<f64>,
    pub upper: DVector<f64>,
}

impl Bounds {
    pub fn unbounded(n: usize) -> Self {
        Self { lower: DVector::from_element(n, f64::NEG_INFINITY), upper: DVector::from_element(n, f64::INFINITY) }
    }

    pub fn clamp(&self, p: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(p.len(), p.iter().enumerate().map(|(i, v)| v.clamp(self.lower[i], self.upper[i])))
    }

    pub fn contains(&self, p: &DVector<f64>) -> bool {
        p.iter().enumerate().all(|(i, v)| *v >= self.lower[i] && *v <= self.upper[i])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Residuals vanished to machine precision.
    ZeroResidual,
    GradientTolerance,
    StepTolerance,
    /// No damped step reduces the cost any further.
    Stagnated,
    MaxIterations,
    /// The residual or Jacobian could not be evaluated at the start point.
    EvaluationFailed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOutcome {
    pub params: DVector<f64>,
    /// Sum of squared residuals at `params`.
    pub cost: f64,
    /// Cost at the start and after every accepted step.
    pub cost_trajectory: Vec<f64>,
    pub iterations: usize,
    pub termination: Termination,
}

impl SolverOutcome {
    pub fn converged(&self) -> bool {
        !matches!(self.termination, Termination::MaxIterations | Termination::EvaluationFailed)
    }
}

const MAX_DAMPING: f64 = 1e16;
const ZERO_COST: f64 = 1e-30;

pub fn minimize<P: LeastSquaresProblem + ?Sized>(
    problem: &P,
    start: &DVector<f64>,
    bounds: &Bounds,
    options: &SolverOptions,
) -> SolverOutcome {
    let mut x = bounds.clamp(start);
    let fail = |x: DVector<f64>| SolverOutcome {
        params: x,
        cost: f64::INFINITY,
        cost_trajectory: vec![],
        iterations: 0,
        termination: Termination::EvaluationFailed,
    };
    let Some(mut r) = problem.residuals(&x) else { return fail(x) };
    let mut cost = r.norm_squared();
    if !cost.is_finite() {
        return fail(x);
    }
    let mut trajectory = vec![cost];
    let mut damping = 1e-3;
    let n = x.len();

    for iteration in 0..options.max_iterations {
        if cost <= ZERO_COST {
            return done(x, cost, trajectory, iteration, Termination::ZeroResidual);
        }
        let Some(jac) = problem.jacobian(&x) else {
            return done(x, cost, trajectory, iteration, Termination::Stagnated);
        };
        let gradient = jac.transpose() * &r;
        if projected_gradient_small(&jac, &gradient, &x, bounds, r.norm(), options.gradient_tol) {
            return done(x, cost, trajectory, iteration, Termination::GradientTolerance);
        }

        let jtj = jac.transpose() * &jac;
        let diag: Vec<f64> = (0..n).map(|i| jtj[(i, i)].max(1e-300)).collect();
        // Variables pressed against a bound are frozen so the others take a
        // full step instead of a clamped share of a coupled one.
        let active: Vec<bool> = (0..n).map(|i| pushes_out(x[i], gradient[i], bounds, i)).collect();
        loop {
            let mut lhs = jtj.clone();
            let mut rhs = -&gradient;
            for i in 0..n {
                lhs[(i, i)] += damping * diag[i];
                if active[i] {
                    lhs.row_mut(i).fill(0.0);
                    lhs.column_mut(i).fill(0.0);
                    lhs[(i, i)] = 1.0;
                    rhs[i] = 0.0;
                }
            }
            let step = lhs.cholesky().map(|c| c.solve(&rhs));
            if let Some(step) = step.filter(|s| s.iter().all(|v| v.is_finite())) {
                let candidate = bounds.clamp(&(&x + &step));
                let moved = (&candidate - &x).norm();
                if let Some(r_new) = problem.residuals(&candidate) {
                    let cost_new = r_new.norm_squared();
                    if cost_new.is_finite() && cost_new < cost {
                        x = candidate;
                        r = r_new;
                        cost = cost_new;
                        trajectory.push(cost);
                        damping = (damping / 3.0).max(1e-12);
                        if moved <= options.step_tol * (x.norm() + options.step_tol) {
                            return done(x, cost, trajectory, iteration + 1, Termination::StepTolerance);
                        }
                        break;
                    }
                }
                if moved <= options.step_tol * (x.norm() + options.step_tol) && damping > 1.0 {
                    return done(x, cost, trajectory, iteration + 1, Termination::Stagnated);
                }
            }
            damping *= 4.0;
            if damping > MAX_DAMPING {
                return done(x, cost, trajectory, iteration + 1, Termination::Stagnated);
            }
        }
    }
    let iterations = options.max_iterations;
    done(x, cost, trajectory, iterations, Termination::MaxIterations)
}

fn done(
    params: DVector<f64>,
    cost: f64,
    cost_trajectory: Vec<f64>,
    iterations: usize,
    termination: Termination,
) -> SolverOutcome {
    SolverOutcome { params, cost, cost_trajectory, iterations, termination }
}

/// Descent along `−g` would leave the box through bound `i`.
fn pushes_out(x: f64, g: f64, bounds: &Bounds, i: usize) -> bool {
    (x <= bounds.lower[i] && g > 0.0) || (x >= bounds.upper[i] && g < 0.0)
}

/// Cosine between each Jacobian column and the residual, ignoring
/// components that point out of an active bound.
fn projected_gradient_small(
    jac: &DMatrix<f64>,
    gradient: &DVector<f64>,
    x: &DVector<f64>,
    bounds: &Bounds,
    r_norm: f64,
    tol: f64,
) -> bool {
    (0..x.len()).all(|i| {
        let g = gradient[i];
        if pushes_out(x[i], g, bounds, i) {
            return true;
        }
        let col = jac.column(i).norm();
        col == 0.0 || (g / (col * r_norm)).abs() <= tol
    })
}
