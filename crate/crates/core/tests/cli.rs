use std::path::Path;
use std::process::Command;
use std::time::Instant;

use trifocal_calib::cli::{run_with, sample_file, EXIT_INVALID, EXIT_OK};
use trifocal_calib::io::CorrespondenceFile;
use trifocal_calib::synth::{derive_seed, inject_outliers, SceneConfig};

const BIN: &str = env!("CARGO_BIN_EXE_trifocal-calib");

fn run(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let mut full = vec!["trifocal-calib"];
    full.extend_from_slice(args);
    let code = run_with(full, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn exported_noiseless_sample_calibrates_accurately() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("sample.json");
    let (code, _, err) = run(&["export-sample", "--out", path_str(&file), "--noise", "0", "--triplets", "3"]);
    assert_eq!(code, EXIT_OK, "{err}");
    for method in ["direct", "msac", "msac-opt", "fundamental"] {
        let (code, out, err) = run(&["calibrate", path_str(&file), "--method", method, "--json"]);
        assert_eq!(code, EXIT_OK, "{method}: {err}");
        let report: serde_json::Value = serde_json::from_str(&out).unwrap();
        let e = report["mean_error_percent"].as_f64().unwrap();
        let limit = if method == "fundamental" { 0.5 } else { 0.1 };
        assert!(e < limit, "{method}: {e}%");
    }
}

#[test]
fn missing_initial_intrinsics_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("s.json");
    let mut sample = sample_file(&SceneConfig { num_points: 50, ..Default::default() }, 1, 0, 1).unwrap();
    sample.initial_intrinsics = None;
    sample.write(&file).unwrap();
    let (code, _, err) = run(&["calibrate", path_str(&file), "--method", "direct"]);
    assert_eq!(code, EXIT_INVALID);
    assert!(err.contains("initial_intrinsics"), "{err}");
    let (code, _, err) = run(&["calibrate", path_str(&file), "--method", "direct", "--initial", "1010,990,650,350"]);
    assert_eq!(code, EXIT_OK, "{err}");
}

#[test]
fn parse_errors_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.json");
    std::fs::write(&file, "{\n  \"schema_version\": \"1\",\n  \"image_size\": [1280, 720],\n  \"triplets\": [oops]\n}\n").unwrap();
    let (code, _, err) = run(&["calibrate", path_str(&file)]);
    assert_eq!(code, EXIT_INVALID);
    assert!(err.contains("line 4"), "{err}");
    let (code, _, err) = run(&["calibrate", path_str(&file), "--method", "nope"]);
    assert_eq!(code, EXIT_INVALID, "{err}");
}

#[test]
fn msac_avoids_a_corrupted_block() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("c.json");
    let scene = SceneConfig { noise: 0.5, ..Default::default() };
    let mut sample = sample_file(&scene, 4, 0, 11).unwrap();
    // Half the third-view points of block 2 become random pixels; the block
    // still estimates a well-conditioned but wrong tensor.
    let mut triples = sample.triplets[2].point_triples();
    inject_outliers(&mut triples, 0.5, (1280, 720), derive_seed(11, &[9]));
    sample.triplets[2].triples = triples.iter().map(|t| t.to_array()).collect();
    sample.write(&file).unwrap();

    let (code, out, err) = run(&["calibrate", path_str(&file), "--method", "msac", "--json"]);
    assert_eq!(code, EXIT_OK, "{err}");
    let report: serde_json::Value = serde_json::from_str(&out).unwrap();
    let used: Vec<u64> = report["blocks_used"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).collect();
    let selected = used[report["selected_candidate"].as_u64().unwrap() as usize];
    assert_ne!(selected, 2);
    assert!(report["mean_error_percent"].as_f64().unwrap() < 0.5);
}

#[test]
fn synth_bench_smoke_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let start = Instant::now();
    let status = Command::new(BIN)
        .args(["synth-bench", "--runs", "1", "--noise", "0", "--out", path_str(&a)])
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    assert!(start.elapsed().as_secs_f64() < 5.0);

    let args = |out: &Path| {
        vec![
            "synth-bench".to_string(),
            "--runs".into(),
            "4".into(),
            "--noise".into(),
            "0.1,1.0".into(),
            "--method".into(),
            "initial,direct,msac,msac-opt,fundamental".into(),
            "--triplets".into(),
            "3".into(),
            "--seed".into(),
            "77".into(),
            "--out".into(),
            out.to_str().unwrap().into(),
        ]
    };
    for out in [&a, &b] {
        let s = Command::new(BIN).args(args(out)).output().unwrap();
        assert!(s.status.success());
    }
    let ra = std::fs::read(a.join("runs.csv")).unwrap();
    assert_eq!(ra, std::fs::read(b.join("runs.csv")).unwrap());
    assert_eq!(std::fs::read(a.join("summary.toml")).unwrap(), std::fs::read(b.join("summary.toml")).unwrap());
    assert_eq!(String::from_utf8(ra).unwrap().lines().count(), 1 + 4 * 2 * 5);
}

#[test]
fn malformed_bench_config_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "runs = \"many\"\n").unwrap();
    let (code, _, err) = run(&["synth-bench", "--config", path_str(&cfg), "--out", path_str(dir.path())]);
    assert_eq!(code, EXIT_INVALID, "{err}");
    let (code, _, _) = run(&["synth-bench", "--runs", "0", "--out", path_str(dir.path())]);
    assert_eq!(code, EXIT_INVALID);
    let (code, _, _) = run(&["synth-bench", "--noise", "a,b", "--out", path_str(dir.path())]);
    assert_eq!(code, EXIT_INVALID);
}

#[test]
fn bench_config_file_is_honoured() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("grid.toml");
    std::fs::write(&cfg, "runs = 2\nnoise_levels = [0.25]\nmethods = [\"direct\"]\n[scene]\nnum_points = 80\n").unwrap();
    let out = dir.path().join("out");
    let (code, stdout, err) = run(&["synth-bench", "--config", path_str(&cfg), "--out", path_str(&out), "--json"]);
    assert_eq!(code, EXIT_OK, "{err}");
    let summary: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(summary.as_array().unwrap().len(), 1);
    assert_eq!(summary[0]["stats"]["count"].as_u64(), Some(2));
}

#[test]
fn export_round_trip_is_lossless() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("r.json");
    let scene = SceneConfig { noise: 0.37, num_points: 60, ..Default::default() };
    let original = sample_file(&scene, 2, 0, 5).unwrap();
    original.write(&file).unwrap();
    let back = CorrespondenceFile::read(&file).unwrap();
    assert_eq!(back, original);
    let (code, _, _) = run(&["export-sample", "--out", path_str(&file), "--seed", "5", "--triplets", "2", "--points", "60", "--noise", "0.37"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(CorrespondenceFile::read(&file).unwrap(), original);
}

#[test]
fn binary_reports_text_by_default_and_writes_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("s.json");
    let report = dir.path().join("report.txt");
    assert!(Command::new(BIN).args(["export-sample", "--out", path_str(&file), "--triplets", "2"]).status().unwrap().success());
    let o = Command::new(BIN)
        .args(["calibrate", path_str(&file), "--method", "direct", "--tau", "0.05", "--out", path_str(&report)])
        .output()
        .unwrap();
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("mean_error_percent"));
    assert_eq!(std::fs::read_to_string(&report).unwrap(), text);
    let bad = Command::new(BIN).args(["calibrate", path_str(&file), "--tau", "-1"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(EXIT_INVALID));
}
