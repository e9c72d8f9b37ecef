//! Procedural three-view scenes: points in a cube seen by three cameras
//! that look at the origin from general positions.

use nalgebra::{Matrix3, Vector2, Vector3};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{project, trifocal_from_cameras, CameraPose, Intrinsics, PointTriple, TrifocalTensor};

pub const MAX_REJECTIONS: usize = 100_000;

/// Portable seeded generator used throughout the benchmark.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives an independent seed from a master seed and a stream path, so
/// that results never depend on execution order.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    let mut h = splitmix(master);
    for &p in path {
        h = splitmix(h ^ splitmix(p.wrapping_add(0x9e37_79b9_7f4a_7c15)));
    }
    h
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Multiplicative perturbation of intrinsics: `p ← p (1 + δ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Perturbation {
    /// `δ ~ U(−max, max)`.
    Uniform { max: f64 },
    /// `|δ| ~ U(min, max)` with a uniformly random sign.
    Annulus { min: f64, max: f64 },
}

impl Perturbation {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Perturbation::Uniform { max } => (0.0..1.0).contains(&max),
            Perturbation::Annulus { min, max } => min >= 0.0 && min <= max && max < 1.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("perturbation {self:?} must lie within (-1, 1)")))
        }
    }

    fn sample(&self, rng: &mut impl Rng) -> f64 {
        match *self {
            Perturbation::Uniform { max } => rng.random_range(-max..=max),
            Perturbation::Annulus { min, max } => {
                let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                let mag = if min == max { min } else { rng.random_range(min..=max) };
                sign * mag
            }
        }
    }
}

impl std::str::FromStr for Perturbation {
    type Err = Error;

    /// `"0.05"` for ±5 %, `"0.05:0.10"` for the annulus 5–10 %.
    fn from_str(s: &str) -> Result<Self> {
        let parse = |v: &str| {
            v.trim().parse::<f64>().map_err(|_| Error::InvalidConfig(format!("bad perturbation value {v:?}")))
        };
        let p = match s.split_once(':') {
            Some((lo, hi)) => Perturbation::Annulus { min: parse(lo)?, max: parse(hi)? },
            None => Perturbation::Uniform { max: parse(s)? },
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneConfig {
    pub num_points: usize,
    pub half_extent: f64,
    pub distance_range: (f64, f64),
    pub image_size: (u32, u32),
    pub k_true: Intrinsics,
    /// Pixel noise amplitude `n`: each coordinate gets `U(−n, n)`.
    pub noise: f64,
    pub perturbation: Perturbation,
    pub min_separation_deg: f64,
    /// Fraction of triples whose third point is replaced by a random pixel.
    pub outlier_fraction: f64,
    pub seed: u64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            num_points: 500,
            half_extent: 1.0,
            distance_range: (3.0, 5.0),
            image_size: (1280, 720),
            k_true: Intrinsics { fx: 1000.0, fy: 1000.0, cx: 640.0, cy: 360.0 },
            noise: 0.0,
            perturbation: Perturbation::Uniform { max: 0.05 },
            min_separation_deg: 15.0,
            outlier_fraction: 0.0,
            seed: 0,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.num_points < 7 {
            return bad("num_points must be at least 7");
        }
        if !(self.noise >= 0.0) {
            return bad("noise must be non-negative");
        }
        if !(self.half_extent > 0.0) {
            return bad("half_extent must be positive");
        }
        let (d0, d1) = self.distance_range;
        if !(d0 > 0.0 && d1 >= d0) {
            return bad("distance_range must be positive and ordered");
        }
        if self.image_size.0 == 0 || self.image_size.1 == 0 {
            return bad("image_size must be nonzero");
        }
        if !(0.0..=1.0).contains(&self.outlier_fraction) {
            return bad("outlier_fraction must lie in [0, 1]");
        }
        self.k_true.validate()?;
        self.perturbation.validate()
    }
}

/// Ground-truth geometry of one view triplet. Poses are world-to-camera.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub k_true: Intrinsics,
    pub points: Vec<Vector3<f64>>,
    pub poses: [CameraPose; 3],
    pub image_size: (u32, u32),
}

impl Scene {
    /// Poses of cameras 2 and 3 with camera 1 moved to `[I | 0]`.
    pub fn relative_poses(&self) -> (CameraPose, CameraPose) {
        (self.poses[1].relative_to(&self.poses[0]), self.poses[2].relative_to(&self.poses[0]))
    }

    pub fn pixel_tensor(&self) -> Result<TrifocalTensor> {
        let (p2, p3) = self.relative_poses();
        trifocal_from_cameras(&self.k_true, &p2, &p3)
    }

    pub fn triples(&self) -> Result<Vec<PointTriple>> {
        self.points
            .iter()
            .map(|x| {
                let p = |v: usize| project(&self.k_true, &self.poses[v], x);
                Ok(PointTriple::new(p(0)?, p(1)?, p(2)?))
            })
            .collect()
    }
}

/// Look-at rotation: the camera's +z axis points from `center` to the
/// origin; `roll` spins the image axes about it.
pub fn look_at_origin(center: &Vector3<f64>, roll: f64) -> Matrix3<f64> {
    let z = (-center).normalize();
    let helper = if z.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let x0 = helper.cross(&z).normalize();
    let y0 = z.cross(&x0);
    let (s, c) = roll.sin_cos();
    let x = x0 * c + y0 * s;
    let y = z.cross(&x);
    Matrix3::from_rows(&[x.transpose(), y.transpose(), z.transpose()])
}

pub fn generate_scene(cfg: &SceneConfig) -> Result<Scene> {
    cfg.validate()?;
    let mut rng = rng_from_seed(cfg.seed);
    let mut rejections = 0usize;
    let min_sep = cfg.min_separation_deg.to_radians();

    let mut centers: Vec<Vector3<f64>> = Vec::with_capacity(3);
    while centers.len() < 3 {
        let dir = loop {
            let v = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let n = v.norm();
            if n > 1e-3 && n <= 1.0 {
                break v / n;
            }
        };
        let (d0, d1) = cfg.distance_range;
        let dist = if d0 == d1 { d0 } else { rng.random_range(d0..d1) };
        let c = dir * dist;
        if centers.iter().all(|o| o.angle(&c) >= min_sep) {
            centers.push(c);
        } else {
            rejections += 1;
            if rejections > MAX_REJECTIONS {
                return Err(Error::SamplingExhausted { rejections });
            }
        }
    }
    let poses = centers
        .iter()
        .map(|c| {
            let r = look_at_origin(c, rng.random_range(-std::f64::consts::PI..std::f64::consts::PI));
            CameraPose::new(r, -(r * c))
        })
        .collect::<Result<Vec<_>>>()?;
    let poses = [poses[0], poses[1], poses[2]];

    let (w, h) = (cfg.image_size.0 as f64, cfg.image_size.1 as f64);
    let a = cfg.half_extent;
    let mut points = Vec::with_capacity(cfg.num_points);
    while points.len() < cfg.num_points {
        let x = Vector3::new(rng.random_range(-a..a), rng.random_range(-a..a), rng.random_range(-a..a));
        let visible = poses.iter().all(|pose| {
            let depth = (pose.rotation * x + pose.translation).z;
            depth > 0.0
                && project(&cfg.k_true, pose, &x)
                    .map(|p| p.x >= 0.0 && p.x < w && p.y >= 0.0 && p.y < h)
                    .unwrap_or(false)
        });
        if visible {
            points.push(x);
        } else {
            rejections += 1;
            if rejections > MAX_REJECTIONS {
                return Err(Error::SamplingExhausted { rejections });
            }
        }
    }
    Ok(Scene { k_true: cfg.k_true, points, poses, image_size: cfg.image_size })
}

/// Adds `U(−n, n)` independently to every coordinate.
pub fn add_pixel_noise(points: &[Vector2<f64>], n: f64, seed: u64) -> Vec<Vector2<f64>> {
    if n == 0.0 {
        return points.to_vec();
    }
    let mut rng = rng_from_seed(seed);
    points
        .iter()
        .map(|p| p + Vector2::new(rng.random_range(-n..=n), rng.random_range(-n..=n)))
        .collect()
}

/// Applies independent pixel noise to each view of every triple.
pub fn add_triple_noise(triples: &[PointTriple], n: f64, seed: u64) -> Vec<PointTriple> {
    let views: Vec<Vec<Vector2<f64>>> = (0..3)
        .map(|v| {
            let pts: Vec<_> = triples.iter().map(|t| t.view(v)).collect();
            add_pixel_noise(&pts, n, derive_seed(seed, &[v as u64]))
        })
        .collect();
    (0..triples.len()).map(|i| PointTriple::new(views[0][i], views[1][i], views[2][i])).collect()
}

/// Replaces the third point of a random `fraction` of triples with a
/// uniformly random pixel.
pub fn inject_outliers(triples: &mut [PointTriple], fraction: f64, image_size: (u32, u32), seed: u64) {
    let count = (fraction * triples.len() as f64).round() as usize;
    if count == 0 {
        return;
    }
    let mut rng = rng_from_seed(seed);
    let mut idx: Vec<usize> = (0..triples.len()).collect();
    idx.shuffle(&mut rng);
    for &i in idx.iter().take(count) {
        triples[i].x3 = Vector2::new(
            rng.random_range(0.0..image_size.0 as f64),
            rng.random_range(0.0..image_size.1 as f64),
        );
    }
}

pub fn perturb_intrinsics(k_true: &Intrinsics, range: &Perturbation, seed: u64) -> Intrinsics {
    let mut rng = rng_from_seed(seed);
    let p = k_true.to_array().map(|v| v * (1.0 + range.sample(&mut rng)));
    Intrinsics { fx: p[0], fy: p[1], cx: p[2], cy: p[3] }
}

/// Per-parameter relative distances and their mean, in percent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativeError {
    pub per_param: [f64; 4],
    pub mean: f64,
}

pub fn mean_relative_error(k_est: &Intrinsics, k_true: &Intrinsics) -> RelativeError {
    let est = k_est.to_array();
    let gt = k_true.to_array();
    let per_param: [f64; 4] = std::array::from_fn(|i| 100.0 * ((gt[i] - est[i]) / gt[i]).abs());
    RelativeError { per_param, mean: per_param.iter().sum::<f64>() / 4.0 }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perturbation_parsing() {
        assert_eq!("0.05".parse::<Perturbation>().unwrap(), Perturbation::Uniform { max: 0.05 });
        assert_eq!("0.05:0.1".parse::<Perturbation>().unwrap(), Perturbation::Annulus { min: 0.05, max: 0.1 });
        assert!("1.5".parse::<Perturbation>().is_err());
        assert!("abc".parse::<Perturbation>().is_err());
    }

    #[test]
    fn zero_perturbation_is_identity() {
        let k = SceneConfig::default().k_true;
        assert_eq!(perturb_intrinsics(&k, &Perturbation::Uniform { max: 0.0 }, 3), k);
    }

    #[test]
    fn relative_error_arithmetic() {
        let k = Intrinsics::new(1000.0, 900.0, 640.0, 360.0).unwrap();
        assert_eq!(mean_relative_error(&k, &k).mean, 0.0);
        let one = Intrinsics { fx: 1050.0, ..k };
        assert!((mean_relative_error(&one, &k).mean - 1.25).abs() < 1e-12);
        let all = Intrinsics { fx: 1050.0, fy: 945.0, cx: 672.0, cy: 378.0 };
        assert!((mean_relative_error(&all, &k).mean - 5.0).abs() < 1e-12);
    }

    #[test]
    fn zero_noise_is_identity() {
        let pts = vec![Vector2::new(1.0, 2.0), Vector2::new(3.0, 4.0)];
        assert_eq!(add_pixel_noise(&pts, 0.0, 9), pts);
    }

    #[test]
    fn config_validation() {
        assert!(SceneConfig::default().validate().is_ok());
        assert!(SceneConfig { num_points: 6, ..Default::default() }.validate().is_err());
        assert!(SceneConfig { noise: -1.0, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn impossible_scene_exhausts_sampling() {
        // Cameras inside the cube never see all points in front of them.
        let cfg = SceneConfig { distance_range: (0.1, 0.2), half_extent: 10.0, image_size: (2, 2), ..Default::default() };
        assert!(matches!(generate_scene(&cfg), Err(Error::SamplingExhausted { .. })));
    }

    #[test]
    fn seeds_differ_per_stream() {
        assert_ne!(derive_seed(1, &[0]), derive_seed(1, &[1]));
        assert_ne!(derive_seed(1, &[0, 1]), derive_seed(1, &[1, 0]));
        assert_eq!(derive_seed(7, &[3, 4]), derive_seed(7, &[3, 4]));
    }
}
