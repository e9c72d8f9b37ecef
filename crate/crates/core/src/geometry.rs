//! Camera model, poses and the exact trifocal tensor constructions.
//!
//! Tensors follow the convention `T_i = a_i b_4ᵀ − a_4 b_iᵀ` for cameras
//! `P1 = [I | 0]`, `P2 = [A | a_4]`, `P3 = [B | b_4]`. Slice `i` is a 3×3
//! matrix whose row index belongs to view 2 and column index to view 3, and
//! a point triple satisfies `[x′]× (Σ xⁱ T_i) [x″]× = 0`.

use nalgebra::{Matrix3, Matrix3x4, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ORTHONORMAL_TOL: f64 = 1e-12;
const DEPTH_EPS: f64 = 1e-12;

/// Pinhole intrinsics with zero skew, all values in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl Intrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self> {
        let k = Self { fx, fy, cx, cy };
        k.validate()?;
        Ok(k)
    }

    pub fn from_array(p: [f64; 4]) -> Result<Self> {
        Self::new(p[0], p[1], p[2], p[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.fx, self.fy, self.cx, self.cy]
    }

    pub fn validate(&self) -> Result<()> {
        if !self.to_array().iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidIntrinsics(format!("non-finite value in {self:?}")));
        }
        if self.fx <= 0.0 || self.fy <= 0.0 {
            return Err(Error::SingularIntrinsics { fx: self.fx, fy: self.fy });
        }
        Ok(())
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::new(self.fx, 0.0, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0)
    }

    /// Closed-form inverse of [`Intrinsics::matrix`].
    pub fn inverse_matrix(&self) -> Result<Matrix3<f64>> {
        if self.fx <= 0.0 || self.fy <= 0.0 {
            return Err(Error::SingularIntrinsics { fx: self.fx, fy: self.fy });
        }
        Ok(Matrix3::new(
            1.0 / self.fx,
            0.0,
            -self.cx / self.fx,
            0.0,
            1.0 / self.fy,
            -self.cy / self.fy,
            0.0,
            0.0,
            1.0,
        ))
    }
}

/// Rigid transform from world to camera coordinates: `x_cam = R x_world + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraPose {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl CameraPose {
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        let ortho = (rotation.transpose() * rotation - Matrix3::identity()).abs().max();
        if ortho > ORTHONORMAL_TOL {
            return Err(Error::InvalidPose(format!("RᵀR deviates from I by {ortho:e}")));
        }
        let det = rotation.determinant();
        if (det - 1.0).abs() > ORTHONORMAL_TOL {
            return Err(Error::InvalidPose(format!("det(R) = {det}")));
        }
        if !translation.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidPose("non-finite translation".into()));
        }
        Ok(Self { rotation, translation })
    }

    pub fn identity() -> Self {
        Self { rotation: Matrix3::identity(), translation: Vector3::zeros() }
    }

    pub fn center(&self) -> Vector3<f64> {
        -(self.rotation.transpose() * self.translation)
    }

    /// Pose of `self` relative to `reference`, i.e. the pose this camera
    /// has once `reference` is moved to `[I | 0]`.
    pub fn relative_to(&self, reference: &CameraPose) -> CameraPose {
        let rotation = self.rotation * reference.rotation.transpose();
        CameraPose { rotation, translation: self.translation - rotation * reference.translation }
    }

    pub fn matrix(&self) -> Matrix3x4<f64> {
        let mut m = Matrix3x4::zeros();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.set_column(3, &self.translation);
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionMatrix(pub Matrix3x4<f64>);

impl ProjectionMatrix {
    pub fn canonical() -> Self {
        Self(CameraPose::identity().matrix())
    }

    /// `K [R | t]`.
    pub fn from_camera(k: &Intrinsics, pose: &CameraPose) -> Self {
        Self(k.matrix() * pose.matrix())
    }

    pub fn left(&self) -> Matrix3<f64> {
        self.0.fixed_view::<3, 3>(0, 0).into_owned()
    }

    pub fn last_column(&self) -> Vector3<f64> {
        self.0.column(3).into_owned()
    }
}

/// Three 3×3 correlation slices, defined up to a nonzero scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrifocalTensor {
    pub slices: [Matrix3<f64>; 3],
}

impl TrifocalTensor {
    pub fn new(slices: [Matrix3<f64>; 3]) -> Self {
        Self { slices }
    }

    pub fn zeros() -> Self {
        Self { slices: [Matrix3::zeros(); 3] }
    }

    /// Entry `(i, j, k)` lives at `9 i + 3 j + k`.
    pub fn from_entries(v: &[f64; 27]) -> Self {
        let mut slices = [Matrix3::zeros(); 3];
        for (i, s) in slices.iter_mut().enumerate() {
            for j in 0..3 {
                for k in 0..3 {
                    s[(j, k)] = v[9 * i + 3 * j + k];
                }
            }
        }
        Self { slices }
    }

    pub fn entries(&self) -> [f64; 27] {
        let mut v = [0.0; 27];
        for (i, s) in self.slices.iter().enumerate() {
            for j in 0..3 {
                for k in 0..3 {
                    v[9 * i + 3 * j + k] = s[(j, k)];
                }
            }
        }
        v
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.slices.iter().map(|s| s.norm_squared()).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self { slices: self.slices.map(|s| s * alpha) }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.entries()
            .iter()
            .zip(other.entries().iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// The 3×3 matrix `Σ xⁱ T_i`.
    pub fn contract_first(&self, x: &Vector3<f64>) -> Matrix3<f64> {
        self.slices[0] * x[0] + self.slices[1] * x[1] + self.slices[2] * x[2]
    }

    /// The incidence matrix `[x′]× (Σ xⁱ T_i) [x″]×` of a homogeneous triple.
    pub fn incidence(&self, x: &Vector3<f64>, xp: &Vector3<f64>, xpp: &Vector3<f64>) -> Matrix3<f64> {
        xp.cross_matrix() * self.contract_first(x) * xpp.cross_matrix()
    }
}

/// Matched pixel positions of one scene point in views 1, 2 and 3.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointTriple {
    pub x1: Vector2<f64>,
    pub x2: Vector2<f64>,
    pub x3: Vector2<f64>,
}

impl PointTriple {
    pub fn new(x1: Vector2<f64>, x2: Vector2<f64>, x3: Vector2<f64>) -> Self {
        Self { x1, x2, x3 }
    }

    pub fn from_array(v: [f64; 6]) -> Self {
        Self::new(Vector2::new(v[0], v[1]), Vector2::new(v[2], v[3]), Vector2::new(v[4], v[5]))
    }

    pub fn to_array(&self) -> [f64; 6] {
        [self.x1.x, self.x1.y, self.x2.x, self.x2.y, self.x3.x, self.x3.y]
    }

    pub fn view(&self, v: usize) -> Vector2<f64> {
        match v {
            0 => self.x1,
            1 => self.x2,
            2 => self.x3,
            _ => panic!("view index {v} out of range"),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    pub fn homogeneous(&self) -> [Vector3<f64>; 3] {
        [self.x1.push(1.0), self.x2.push(1.0), self.x3.push(1.0)]
    }
}

pub fn project(k: &Intrinsics, pose: &CameraPose, point: &Vector3<f64>) -> Result<Vector2<f64>> {
    let cam = pose.rotation * point + pose.translation;
    if cam.z.abs() < DEPTH_EPS {
        return Err(Error::DepthZero { depth: cam.z });
    }
    let h = k.matrix() * cam;
    Ok(Vector2::new(h.x / h.z, h.y / h.z))
}

/// Tensor of `[I|0]`, `[R2|t2]`, `[R3|t3]` in normalized coordinates.
pub fn calibrated_trifocal_from_poses(pose2: &CameraPose, pose3: &CameraPose) -> TrifocalTensor {
    let (r2, t2) = (&pose2.rotation, &pose2.translation);
    let (r3, t3) = (&pose3.rotation, &pose3.translation);
    let slices = [0, 1, 2].map(|k| {
        let e = Vector3::ith(k, 1.0);
        r2 * e * t3.transpose() - t2 * e.transpose() * r3.transpose()
    });
    TrifocalTensor { slices }
}

/// Tensor of `[I|0]`, `p2`, `p3`; the first camera is assumed canonical.
pub fn trifocal_from_projections(p2: &ProjectionMatrix, p3: &ProjectionMatrix) -> TrifocalTensor {
    let (a, a4) = (p2.left(), p2.last_column());
    let (b, b4) = (p3.left(), p3.last_column());
    let slices = [0, 1, 2].map(|i| a.column(i) * b4.transpose() - a4 * b.column(i).transpose());
    TrifocalTensor { slices }
}

/// Pixel-coordinate tensor of three cameras sharing `k`, with poses given
/// relative to the first camera (`P1 = K [I | 0]`).
pub fn trifocal_from_cameras(
    k: &Intrinsics,
    pose2: &CameraPose,
    pose3: &CameraPose,
) -> Result<TrifocalTensor> {
    // Move the world by diag(K⁻¹, 1) so the first camera becomes [I | 0].
    let km = k.matrix();
    let kinv = k.inverse_matrix()?;
    let canon = |pose: &CameraPose| {
        let mut m = Matrix3x4::zeros();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&(km * pose.rotation * kinv));
        m.set_column(3, &(km * pose.translation));
        ProjectionMatrix(m)
    };
    Ok(trifocal_from_projections(&canon(pose2), &canon(pose3)))
}

/// Re-expresses a tensor after a change of image coordinates.
///
/// If old coordinates relate to new ones by `x = A x̃`, `x′ = B x̃′`,
/// `x″ = C x̃″`, the tensor in new coordinates is
/// `T̃_i = Σ_r A[r][i] · B⁻¹ T_r C⁻ᵀ`.
pub fn transform_tensor(
    t: &TrifocalTensor,
    a: &Matrix3<f64>,
    b_inv: &Matrix3<f64>,
    c_inv: &Matrix3<f64>,
) -> TrifocalTensor {
    let inner = t.slices.map(|s| b_inv * s * c_inv.transpose());
    let slices = [0, 1, 2].map(|i| inner[0] * a[(0, i)] + inner[1] * a[(1, i)] + inner[2] * a[(2, i)]);
    TrifocalTensor { slices }
}

/// Expresses a pixel-coordinate tensor in normalized coordinates `K⁻¹ x`.
pub fn apply_intrinsics_transform(t: &TrifocalTensor, k: &Intrinsics) -> Result<TrifocalTensor> {
    let kinv = k.inverse_matrix()?;
    Ok(transform_tensor(t, &k.matrix(), &kinv, &kinv))
}

/// Unit Frobenius norm, sign chosen so the largest-magnitude entry is positive.
pub fn normalize_tensor(t: &TrifocalTensor) -> Result<TrifocalTensor> {
    let norm = t.frobenius_norm();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::ZeroTensor);
    }
    let lead = t
        .entries()
        .into_iter()
        .fold(0.0_f64, |best, v| if v.abs() > best.abs() { v } else { best });
    let sign = if lead < 0.0 { -1.0 } else { 1.0 };
    Ok(t.scaled(sign / norm))
}
