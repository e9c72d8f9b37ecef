//! The 15 quartic constraints on three kinds of tensor: calibrated,
//! pixel-space, and random.

use rand::Rng;
use trifocal_calib::prelude::*;
use trifocal_calib::synth::rng_from_seed;

fn report(label: &str, t: &TrifocalTensor) -> trifocal_calib::Result<()> {
    let r = quartic_residuals(&normalize_tensor(t)?)?;
    println!("{label:<12} norm {:.3e}  max {:.3e}", r.norm(), r.max_abs());
    Ok(())
}

fn main() -> trifocal_calib::Result<()> {
    let scene = generate_scene(&SceneConfig { seed: 3, ..Default::default() })?;
    let (p2, p3) = scene.relative_poses();

    report("calibrated", &calibrated_trifocal_from_poses(&p2, &p3))?;
    report("pixel", &scene.pixel_tensor()?)?;
    let mut rng = rng_from_seed(3);
    report("random", &TrifocalTensor::from_entries(&std::array::from_fn(|_| rng.random_range(-1.0..1.0))))?;

    // Removing the right intrinsics restores the constraints; a wrong guess
    // does not.
    let k = scene.k_true;
    for (label, guess) in [("K_true", k), ("fx +5%", Intrinsics { fx: 1.05 * k.fx, ..k })] {
        let (cost, _) = constraint_cost(&guess, &[scene.pixel_tensor()?])?;
        println!("cost at {label:<7} {cost:.3e}");
    }
    Ok(())
}
