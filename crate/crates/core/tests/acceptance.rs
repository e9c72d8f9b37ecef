//! Acceptance gate. Runs every headline criterion at its stated tolerance
//! and prints one PASS/FAIL line each; exits non-zero if any fails.

mod common;

use std::time::Instant;

use common::*;
use nalgebra::{DVector, Matrix3, Vector3};
use rand::Rng;
use trifocal_calib::bench::{prepare_run, run_experiment, ExperimentConfig, Method};
use trifocal_calib::calibration::*;
use trifocal_calib::constraints::quartic_residuals;
use trifocal_calib::fundamental::*;
use trifocal_calib::geometry::*;
use trifocal_calib::solver::{central_difference_jacobian, LeastSquaresProblem};
use trifocal_calib::synth::*;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    trifocal_calib::bench::quantile(&v, 0.5)
}

fn constraint_vanishing() -> Outcome {
    let mut rng = rng(1001);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let t = calibrated_trifocal_from_poses(&random_pose(&mut rng), &random_pose(&mut rng));
        let r = quartic_residuals(&normalize_tensor(&t).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        worst = worst.max(r.max_abs());
    }
    check(worst < 1e-10, format!("max |residual| over 1000 calibrated tensors = {worst:.2e} (< 1e-10)"))
}

fn transform_consistency() -> Outcome {
    let mut rng = rng(1002);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let k = random_intrinsics(&mut rng);
        let (p2, p3) = (random_pose(&mut rng), random_pose(&mut rng));
        let pixel = trifocal_from_cameras(&k, &p2, &p3).map_err(|e| e.to_string())?;
        let a = normalize_tensor(&apply_intrinsics_transform(&pixel, &k).map_err(|e| e.to_string())?).unwrap();
        let b = normalize_tensor(&calibrated_trifocal_from_poses(&p2, &p3)).unwrap();
        worst = worst.max(a.max_abs_diff(&b).min(a.max_abs_diff(&b.scaled(-1.0))));
    }
    check(worst < 1e-8, format!("max entry difference over 1000 (K, poses) = {worst:.2e} (< 1e-8)"))
}

fn noiseless_end_to_end() -> Outcome {
    let cfg = ExperimentConfig { noise_levels: vec![0.0], methods: vec![Method::Direct], ..Default::default() };
    let res = run_experiment(&cfg).map_err(|e| e.to_string())?;
    let errors = res.errors(0.0, Method::Direct);
    let good = errors.iter().filter(|e| **e < 0.1).count();
    let worst = errors.iter().copied().fold(0.0, f64::max);
    check(good >= 99, format!("{good}/100 runs below 0.1% (need >= 99), worst {worst:.2e}%"))
}

fn ordering() -> Outcome {
    let cfg = ExperimentConfig {
        methods: vec![Method::Initial, Method::Direct, Method::Fundamental],
        ..Default::default()
    };
    let res = run_experiment(&cfg).map_err(|e| e.to_string())?;
    let mut ok = true;
    let mut lines = Vec::new();
    for &n in &cfg.noise_levels {
        let d = res.stats(n, Method::Direct).ok_or("no direct results")?;
        let f = res.stats(n, Method::Fundamental).ok_or("no fundamental results")?;
        let i = res.stats(n, Method::Initial).ok_or("no initial results")?;
        let pass = d.median < f.median && d.median < i.median && d.iqr < f.iqr;
        ok &= pass;
        lines.push(format!(
            "n={n}: median direct {:.4}% / fundamental {:.4}% / initial {:.4}%, IQR direct {:.4}% / fundamental {:.4}%",
            d.median, f.median, i.median, d.iqr, f.iqr
        ));
    }
    check(ok, lines.join("\n      "))
}

fn msac_formula() -> Outcome {
    let mut ok = true;
    for tau in [1e-3, 1e-2, 0.3, 7.0] {
        ok &= msac_score(&[0.0; 5], tau) == Ok(1.0);
        ok &= msac_score(&[tau, 3.0 * tau, 1e6], tau) == Ok(0.0);
        ok &= msac_score(&[0.5 * tau, 2.0 * tau], tau).map(|s| (s - 0.25).abs() < 1e-15) == Ok(true);
    }
    let mut rng = rng(1005);
    let mut violations = 0;
    for _ in 0..10_000 {
        let n = rng.random_range(1..30);
        let r: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..0.05)).collect();
        let tau = rng.random_range(1e-4..0.05);
        let base = msac_score(&r, tau).unwrap();
        let mut worse = r.clone();
        let i = rng.random_range(0..n);
        worse[i] += rng.random_range(0.0..0.05);
        let alpha = 10f64.powf(rng.random_range(-3.0..3.0));
        let scaled: Vec<f64> = r.iter().map(|x| alpha * x).collect();
        if msac_score(&worse, tau).unwrap() > base
            || msac_score(&r, tau * rng.random_range(1.0..3.0)).unwrap() < base
            || (msac_score(&scaled, alpha * tau).unwrap() - base).abs() > 1e-12
        {
            violations += 1;
        }
    }
    check(ok && violations == 0, format!("worked examples exact: {ok}; property violations over 1e4 vectors: {violations}"))
}

fn outlier_robustness() -> Outcome {
    let cfg = ExperimentConfig {
        noise_levels: vec![0.5],
        methods: vec![Method::Direct, Method::Msac],
        num_triplets: 5,
        corrupted_fraction: 0.2,
        ..Default::default()
    };
    let res = run_experiment(&cfg).map_err(|e| e.to_string())?;
    let (m, d) = (median(res.errors(0.5, Method::Msac)), median(res.errors(0.5, Method::Direct)));
    check(m < d, format!("5 triplets, 1 corrupted, n=0.5, 100 runs: median msac {m:.4}% < direct {d:.4}%"))
}

fn gradient_check() -> Outcome {
    let mut rng = rng(1007);
    let mut worst: f64 = 0.0;
    let cfg = ExperimentConfig::default();
    for i in 0..100 {
        let data = prepare_run(&cfg, rng.random(), 0, 0.5).map_err(|e| e.to_string())?;
        let problem = ConstraintProblem::new(&data.tensors.map_err(|e| e.to_string())?).unwrap();
        let k = perturb_intrinsics(&cfg.scene.k_true, &Perturbation::Uniform { max: 0.2 }, i);
        let p = DVector::from_row_slice(&k.to_array());
        let exact = problem.jacobian_exact(&p).ok_or("exact jacobian failed")?;
        let numeric = central_difference_jacobian(|q| problem.residuals(q), &p, 1e-6).ok_or("numeric jacobian failed")?;
        for c in 0..4 {
            let rel = (exact.column(c) - numeric.column(c)).amax() / exact.column(c).amax();
            worst = worst.max(rel);
        }
    }
    check(worst < 1e-5, format!("worst column-relative difference over 100 points = {worst:.2e} (< 1e-5)"))
}

fn fundamental_sanity() -> Outcome {
    let mut rng = rng(1008);
    let identity = Intrinsics::new(1.0, 1.0, 0.0, 0.0).unwrap();
    let mut worst_ratio: f64 = 0.0;
    for _ in 0..1000 {
        let t: Vector3<f64> = random_vec(&mut rng, 1.0).normalize();
        let tx = Matrix3::new(0.0, -t.z, t.y, t.z, 0.0, -t.x, -t.y, t.x, 0.0);
        let f = FundamentalMatrix::from_matrix(tx * random_rotation(&mut rng)).unwrap();
        worst_ratio = worst_ratio.max(essential_ratio_residual(&identity, &f).unwrap());
    }
    let mut worst_err: f64 = 0.0;
    let calib = CalibrationConfig::default();
    for seed in 0..100 {
        let s = generate_scene(&SceneConfig { seed: 5000 + seed, ..Default::default() }).unwrap();
        let fs = fundamentals_from_triples(&s.triples().unwrap()).map_err(|e| e.to_string())?;
        let k0 = perturb_intrinsics(&s.k_true, &Perturbation::Uniform { max: 0.05 }, seed);
        let r = calibrate_fundamental(&fs, &k0, &calib).map_err(|e| e.to_string())?;
        worst_err = worst_err.max(mean_relative_error(&r.intrinsics, &s.k_true).mean);
    }
    check(
        worst_ratio < 1e-12 && worst_err < 0.5,
        format!("max sigma1/sigma2 - 1 over 1000 E = {worst_ratio:.2e}; worst noiseless error over 100 scenes = {worst_err:.2e}%"),
    )
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 8] = [
        ("constraint vanishing", constraint_vanishing),
        ("transform consistency", transform_consistency),
        ("noiseless end-to-end", noiseless_end_to_end),
        ("direct vs fundamental ordering", ordering),
        ("msac score formula", msac_formula),
        ("outlier robustness", outlier_robustness),
        ("gradient check", gradient_check),
        ("fundamental baseline sanity", fundamental_sanity),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name} ({secs:.2}s)\n      {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name} ({secs:.2}s)\n      {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
