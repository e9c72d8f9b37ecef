//! Builds the trifocal tensor of three cameras, checks the incidence
//! relation on projected points and strips the intrinsics back off.

use nalgebra::{Rotation3, Unit, Vector3};
use trifocal_calib::prelude::*;

fn main() -> trifocal_calib::Result<()> {
    let k = Intrinsics::new(1000.0, 1000.0, 640.0, 360.0)?;
    let rot = |axis: Vector3<f64>, deg: f64| *Rotation3::from_axis_angle(&Unit::new_normalize(axis), deg.to_radians()).matrix();
    let pose2 = CameraPose::new(rot(Vector3::y(), 20.0), Vector3::new(-1.0, 0.1, 0.3))?;
    let pose3 = CameraPose::new(rot(Vector3::new(1.0, 1.0, 0.0), -15.0), Vector3::new(0.8, -0.5, 0.2))?;

    let pixel = normalize_tensor(&trifocal_from_cameras(&k, &pose2, &pose3)?)?;
    println!("pixel tensor slices:");
    for (i, s) in pixel.slices.iter().enumerate() {
        println!("T{} = {s:.5}", i + 1);
    }

    let x = Vector3::new(0.3, -0.2, 5.0);
    let pts = [project(&k, &CameraPose::identity(), &x)?, project(&k, &pose2, &x)?, project(&k, &pose3, &x)?];
    let triple = PointTriple::new(pts[0], pts[1], pts[2]);
    let [h1, h2, h3] = triple.homogeneous();
    println!("point {x:?} projects to {:?}", triple.to_array());
    println!("incidence residual: {:.2e}", pixel.incidence(&h1, &h2, &h3).abs().max());

    let calibrated = normalize_tensor(&apply_intrinsics_transform(&pixel, &k)?)?;
    let reference = normalize_tensor(&calibrated_trifocal_from_poses(&pose2, &pose3))?;
    let diff = calibrated.max_abs_diff(&reference).min(calibrated.max_abs_diff(&reference.scaled(-1.0)));
    println!("transformed pixel tensor vs calibrated tensor from poses: {diff:.2e}");
    Ok(())
}
