//! The fundamental-matrix baseline next to the trifocal method on the
//! same noisy triplet.

use trifocal_calib::prelude::*;
use trifocal_calib::synth::add_triple_noise;

fn main() -> trifocal_calib::Result<()> {
    let cfg = CalibrationConfig::default();
    for seed in 0..5 {
        let scene = generate_scene(&SceneConfig { seed, ..Default::default() })?;
        let triples = add_triple_noise(&scene.triples()?, 1.0, seed);
        let k0 = perturb_intrinsics(&scene.k_true, &Perturbation::Uniform { max: 0.05 }, seed);

        let fs = fundamentals_from_triples(&triples)?;
        let fund = calibrate_fundamental(&fs, &k0, &cfg)?;
        let (tensor, _) = linear_estimate(&triples)?;
        let direct = calibrate_direct(&[tensor], &k0, &cfg)?;

        let err = |k: &Intrinsics| mean_relative_error(k, &scene.k_true).mean;
        println!(
            "scene {seed}: start {:.3}%  fundamental {:.3}%  trifocal {:.3}%",
            err(&k0),
            err(&fund.intrinsics),
            err(&direct.intrinsics)
        );
    }
    Ok(())
}
