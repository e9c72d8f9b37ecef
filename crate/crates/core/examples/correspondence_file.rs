//! Writes a correspondence file, reads it back and calibrates from it,
//! the same path the command-line tool takes.

use trifocal_calib::cli::sample_file;
use trifocal_calib::io::CorrespondenceFile;
use trifocal_calib::prelude::*;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::temp_dir().join("trifocal_calib_example.json");
    let scene = SceneConfig { noise: 0.5, num_points: 300, ..Default::default() };
    sample_file(&scene, 4, 0, 8)?.write(&path)?;

    let file = CorrespondenceFile::read(&path)?;
    println!("{}: schema {}, {} triplet blocks", path.display(), file.schema_version, file.triplets.len());
    let tensors = file
        .triplets
        .iter()
        .map(|b| linear_estimate(&b.point_triples()).map(|(t, _)| t))
        .collect::<Result<Vec<_>, _>>()?;
    let k0 = file.initial_intrinsics.ok_or("file has no initial intrinsics")?;
    let report = calibrate_msac_opt(&tensors, &k0, &CalibrationConfig::default())?;
    let gt = file.ground_truth.ok_or("file has no ground truth")?;
    println!("estimate {:?}", report.intrinsics.to_array());
    println!("error {:.4}% (start {:.4}%)", mean_relative_error(&report.intrinsics, &gt).mean, mean_relative_error(&k0, &gt).mean);
    Ok(())
}
