//! Several triplets, one of them corrupted: plain minimization is dragged
//! off, MSAC selection and MSAC-Opt refinement are not.

use trifocal_calib::bench::{prepare_run, ExperimentConfig};
use trifocal_calib::prelude::*;

fn main() -> trifocal_calib::Result<()> {
    let cfg = ExperimentConfig { num_triplets: 5, corrupted_fraction: 0.2, ..Default::default() };
    let data = prepare_run(&cfg, 99, 0, 0.5)?;
    let tensors = data.tensors?;
    let k_true = cfg.scene.k_true;
    let calib = CalibrationConfig::default();

    let direct = calibrate_direct(&tensors, &data.k0, &calib)?;
    let msac = calibrate_msac(&tensors, &data.k0, &calib)?;
    let opt = calibrate_msac_opt(&tensors, &data.k0, &calib)?;

    println!("start      {:.3}%", mean_relative_error(&data.k0, &k_true).mean);
    for (name, r) in [("direct", &direct), ("msac", &msac), ("msac-opt", &opt)] {
        println!("{name:<10} {:.3}%  score {:.4}", mean_relative_error(&r.intrinsics, &k_true).mean, r.msac_score);
    }
    let scores: Vec<String> =
        msac.candidate_scores.iter().map(|s| s.map_or("failed".into(), |s| format!("{s:.3}"))).collect();
    println!("candidate scores {scores:?}, selected {:?}", msac.selected_candidate);
    Ok(())
}
