//! Noise sweep comparing trifocal and fundamental-matrix calibration.
//!
//! ```text
//! cargo run --release --example synthetic_benchmark -- [runs] [triplets]
//! ```

use trifocal_calib::bench::{run_experiment, ExperimentConfig, Method};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let runs = args.next().map(|a| a.parse()).transpose()?.unwrap_or(20);
    let num_triplets = args.next().map(|a| a.parse()).transpose()?.unwrap_or(1);
    let methods = if num_triplets > 1 {
        vec![Method::Initial, Method::Direct, Method::Msac, Method::MsacOpt, Method::Fundamental]
    } else {
        vec![Method::Initial, Method::Direct, Method::Fundamental]
    };
    let cfg = ExperimentConfig { runs, num_triplets, methods, ..Default::default() };

    let start = std::time::Instant::now();
    let results = run_experiment(&cfg)?;
    println!("{runs} runs, {num_triplets} triplet(s) per run, {:.1?}", start.elapsed());
    println!("{:>6} {:>12} {:>9} {:>9} {:>9} {:>9} {:>5}", "noise", "method", "median%", "iqr%", "mean%", "whisker%", "fail");
    for row in &results.summary {
        match &row.stats {
            Some(s) => println!(
                "{:>6} {:>12} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>5}",
                row.noise, row.method.name(), s.median, s.iqr, s.mean, s.whisker_high, row.failures
            ),
            None => println!("{:>6} {:>12} {:>9} {:>9} {:>9} {:>9} {:>5}", row.noise, row.method.name(), "-", "-", "-", "-", row.failures),
        }
    }
    Ok(())
}
