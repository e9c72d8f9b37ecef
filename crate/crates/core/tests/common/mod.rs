#![allow(dead_code)]

use nalgebra::{Quaternion, UnitQuaternion, Vector3};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use trifocal_calib::geometry::{CameraPose, Intrinsics, TrifocalTensor};
use trifocal_calib::synth::rng_from_seed;

pub fn rng(seed: u64) -> ChaCha8Rng {
    rng_from_seed(seed)
}

pub fn random_rotation(rng: &mut impl Rng) -> nalgebra::Matrix3<f64> {
    loop {
        let q = Quaternion::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = q.norm();
        if n > 0.1 && n <= 1.0 {
            return *UnitQuaternion::from_quaternion(q).to_rotation_matrix().matrix();
        }
    }
}

pub fn random_vec(rng: &mut impl Rng, scale: f64) -> Vector3<f64> {
    Vector3::new(rng.random_range(-scale..scale), rng.random_range(-scale..scale), rng.random_range(-scale..scale))
}

pub fn random_pose(rng: &mut impl Rng) -> CameraPose {
    CameraPose::new(random_rotation(rng), random_vec(rng, 2.0)).unwrap()
}

pub fn random_intrinsics(rng: &mut impl Rng) -> Intrinsics {
    Intrinsics::new(
        rng.random_range(300.0..3000.0),
        rng.random_range(300.0..3000.0),
        rng.random_range(100.0..1000.0),
        rng.random_range(100.0..800.0),
    )
    .unwrap()
}

pub fn random_tensor(rng: &mut impl Rng) -> TrifocalTensor {
    TrifocalTensor::from_entries(&std::array::from_fn(|_| rng.random_range(-1.0..1.0)))
}
