//! Recovers intrinsics from a single noisy view triplet by minimizing the
//! quartic constraint residuals.

use trifocal_calib::prelude::*;
use trifocal_calib::synth::add_triple_noise;

fn main() -> trifocal_calib::Result<()> {
    let scene = generate_scene(&SceneConfig { seed: 21, ..Default::default() })?;
    let triples = add_triple_noise(&scene.triples()?, 0.5, 2);
    let (tensor, _) = linear_estimate(&triples)?;

    let k0 = perturb_intrinsics(&scene.k_true, &Perturbation::Uniform { max: 0.05 }, 4);
    let report = calibrate_direct(&[tensor], &k0, &CalibrationConfig::default())?;

    println!("true     {:?}", scene.k_true.to_array());
    println!("start    {:?}  ({:.3}% off)", k0.to_array(), mean_relative_error(&k0, &scene.k_true).mean);
    println!(
        "estimate {:?}  ({:.3}% off)",
        report.intrinsics.to_array(),
        mean_relative_error(&report.intrinsics, &scene.k_true).mean
    );
    println!(
        "{:?} after {} iterations, cost {:.3e} -> {:.3e}",
        report.termination,
        report.iterations,
        report.cost_trajectory[0],
        report.final_cost()
    );
    Ok(())
}
