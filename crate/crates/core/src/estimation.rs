//! Linear trifocal tensor estimation from point triples.

use nalgebra::{DMatrix, Matrix3, Vector2, Vector3};

use crate::error::{Error, Result};
use crate::geometry::{normalize_tensor, transform_tensor, PointTriple, TrifocalTensor};

pub const MIN_TRIPLES: usize = 7;

/// Per-view similarity transforms: centroid to origin, mean distance √2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizationTransform {
    pub views: [Matrix3<f64>; 3],
}

impl NormalizationTransform {
    pub fn apply(&self, view: usize, p: &Vector2<f64>) -> Vector2<f64> {
        let h = self.views[view] * p.push(1.0);
        Vector2::new(h.x / h.z, h.y / h.z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimationDiagnostics {
    /// Second-smallest over smallest singular value of the design matrix.
    pub condition_ratio: f64,
    pub num_triples: usize,
    pub mean_transfer_error: f64,
    pub max_transfer_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimationOptions {
    pub min_condition_ratio: f64,
}

impl Default for EstimationOptions {
    fn default() -> Self {
        Self { min_condition_ratio: 10.0 }
    }
}

/// Hartley normalization of each view independently.
pub fn normalize_points(triples: &[PointTriple]) -> Result<(NormalizationTransform, Vec<PointTriple>)> {
    let mut views = [Matrix3::identity(); 3];
    for (v, m) in views.iter_mut().enumerate() {
        *m = similarity_for(triples.iter().map(|t| t.view(v))).ok_or(Error::DegenerateCloud { view: v })?;
    }
    let transform = NormalizationTransform { views };
    let normalized = triples
        .iter()
        .map(|t| PointTriple::new(transform.apply(0, &t.x1), transform.apply(1, &t.x2), transform.apply(2, &t.x3)))
        .collect();
    Ok((transform, normalized))
}

/// Similarity that centers the points and scales their mean radius to √2,
/// or `None` when every point coincides.
pub(crate) fn similarity_for(points: impl Iterator<Item = Vector2<f64>> + Clone) -> Option<Matrix3<f64>> {
    let n = points.clone().count();
    if n == 0 {
        return None;
    }
    let centroid = points.clone().fold(Vector2::zeros(), |a, p| a + p) / n as f64;
    let mean_dist = points.map(|p| (p - centroid).norm()).sum::<f64>() / n as f64;
    if !(mean_dist > 1e-12 * (1.0 + centroid.norm())) {
        return None;
    }
    let s = std::f64::consts::SQRT_2 / mean_dist;
    Some(Matrix3::new(s, 0.0, -s * centroid.x, 0.0, s, -s * centroid.y, 0.0, 0.0, 1.0))
}

pub fn linear_estimate(triples: &[PointTriple]) -> Result<(TrifocalTensor, EstimationDiagnostics)> {
    linear_estimate_with(triples, &EstimationOptions::default())
}

/// Least-squares solution of the stacked incidence equations (all nine rows
/// per triple), computed in normalized coordinates and mapped back to pixels.
pub fn linear_estimate_with(
    triples: &[PointTriple],
    options: &EstimationOptions,
) -> Result<(TrifocalTensor, EstimationDiagnostics)> {
    if triples.len() < MIN_TRIPLES {
        return Err(Error::TooFewTriples { needed: MIN_TRIPLES, got: triples.len() });
    }
    let (norm, normalized) = normalize_points(triples)?;
    let design = design_matrix(&normalized);
    let (solution, condition_ratio) = null_vector(design);
    if condition_ratio < options.min_condition_ratio {
        return Err(Error::IllConditioned { ratio: condition_ratio, threshold: options.min_condition_ratio });
    }

    let mut entries = [0.0; 27];
    entries.copy_from_slice(&solution);
    let t_norm = TrifocalTensor::from_entries(&entries);
    let n2_inv = norm.views[1].try_inverse().ok_or(Error::DegenerateCloud { view: 1 })?;
    let n3_inv = norm.views[2].try_inverse().ok_or(Error::DegenerateCloud { view: 2 })?;
    let tensor = normalize_tensor(&transform_tensor(&t_norm, &norm.views[0], &n2_inv, &n3_inv))?;

    let errors: Vec<f64> = triples.iter().map(|t| transfer_error(&tensor, t)).collect();
    let finite: Vec<f64> = errors.iter().copied().filter(|e| e.is_finite()).collect();
    let diagnostics = EstimationDiagnostics {
        condition_ratio,
        num_triples: triples.len(),
        mean_transfer_error: if finite.len() == errors.len() {
            finite.iter().sum::<f64>() / finite.len() as f64
        } else {
            f64::INFINITY
        },
        max_transfer_error: errors.iter().copied().fold(0.0, f64::max),
    };
    Ok((tensor, diagnostics))
}

/// Nine rows per triple; column `9 i + 3 j + k` multiplies `T_i[j][k]`.
fn design_matrix(triples: &[PointTriple]) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(9 * triples.len(), 27);
    for (n, t) in triples.iter().enumerate() {
        let [x, xp, xpp] = t.homogeneous();
        let cp = xp.cross_matrix();
        let cpp = xpp.cross_matrix();
        for r in 0..3 {
            for s in 0..3 {
                let row = 9 * n + 3 * r + s;
                for i in 0..3 {
                    for j in 0..3 {
                        let left = x[i] * cp[(r, j)];
                        if left == 0.0 {
                            continue;
                        }
                        for k in 0..3 {
                            a[(row, 9 * i + 3 * j + k)] = left * cpp[(k, s)];
                        }
                    }
                }
            }
        }
    }
    a
}

/// Right singular vector of the smallest singular value, and the ratio of
/// the two smallest singular values.
pub(crate) fn null_vector(a: DMatrix<f64>) -> (Vec<f64>, f64) {
    let cols = a.ncols();
    // Reduce tall systems to a square factor first: A = QR, null(A) = null(R).
    let r = if a.nrows() > cols { a.qr().r() } else { a };
    let svd = r.svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
    let smallest = if svd.singular_values.len() < cols { 0.0 } else { svd.singular_values[order[0]] };
    let second = if svd.singular_values.len() < cols { 0.0 } else { svd.singular_values[order[1]] };
    let ratio = if smallest > 0.0 { second / smallest } else if second > 0.0 { f64::INFINITY } else { 1.0 };
    let row = v_t.row(order[0]);
    (row.iter().copied().collect(), ratio)
}

/// Predicts the view-3 point of a triple from its view-1 and view-2 points.
pub fn transfer_point(t: &TrifocalTensor, x: &Vector2<f64>, xp: &Vector2<f64>) -> Result<Vector2<f64>> {
    let m = t.contract_first(&x.push(1.0));
    // Every row of [x′]× M is a multiple of x″ᵀ; take the dominant direction.
    let w = xp.push(1.0).cross_matrix() * m;
    let svd = w.svd(false, true);
    let v_t = svd.v_t.ok_or(Error::TransferSingular)?;
    let (best, sigma) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, 0.0), |acc, (i, &s)| if s > acc.1 { (i, s) } else { acc });
    let scale = t.frobenius_norm() * (1.0 + x.norm()) * (1.0 + xp.norm());
    if !(sigma > 1e-14 * scale) {
        return Err(Error::TransferSingular);
    }
    let h: Vector3<f64> = v_t.row(best).transpose();
    if h.z.abs() <= 1e-12 * h.norm() {
        return Err(Error::TransferSingular);
    }
    let p = Vector2::new(h.x / h.z, h.y / h.z);
    if p.iter().all(|v| v.is_finite()) {
        Ok(p)
    } else {
        Err(Error::TransferSingular)
    }
}

/// Pixel distance between the transferred and observed view-3 points;
/// `f64::INFINITY` when the transfer is singular.
pub fn transfer_error(t: &TrifocalTensor, triple: &PointTriple) -> f64 {
    match transfer_point(t, &triple.x1, &triple.x2) {
        Ok(p) => (p - triple.x3).norm(),
        Err(_) => f64::INFINITY,
    }
}
