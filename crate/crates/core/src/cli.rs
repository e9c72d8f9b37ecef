//! The `trifocal-calib` command-line tool.
//!
//! Exit codes: `0` success (possibly with convergence warnings), `1` I/O or
//! internal failure, `2` invalid input, `3` every MSAC candidate failed.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::bench::{run_experiment, summary_toml, write_runs_csv, ExperimentConfig, ExperimentResults, Method, DEFAULT_SEED};
use crate::calibration::{CalibrationConfig, CalibrationReport};
use crate::error::Error;
use crate::estimation::linear_estimate;
use crate::geometry::{Intrinsics, PointTriple};
use crate::io::{CorrespondenceFile, TripletBlock};
use crate::synth::{
    add_triple_noise, derive_seed, generate_scene, inject_outliers, mean_relative_error, perturb_intrinsics, Perturbation,
    SceneConfig,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_ALL_FAILED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "trifocal-calib", version, about = "Camera self-calibration from trifocal tensor constraints")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate intrinsics from a correspondence file.
    Calibrate(CalibrateArgs),
    /// Run the synthetic noise benchmark and write per-run and summary files.
    SynthBench(BenchArgs),
    /// Write a synthetic correspondence file with ground truth.
    ExportSample(ExportArgs),
}

#[derive(Debug, Args)]
struct CalibrateArgs {
    file: PathBuf,
    /// direct | msac | msac-opt | fundamental
    #[arg(long, default_value = "msac-opt")]
    method: String,
    #[arg(long)]
    tau: Option<f64>,
    /// Initial intrinsics "fx,fy,cx,cy"; overrides the file.
    #[arg(long)]
    initial: Option<String>,
    /// Derive the start by perturbing the file's ground truth ("0.05" or "0.05:0.10").
    #[arg(long)]
    perturb: Option<String>,
    /// Seed for --perturb.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    json: bool,
    /// Also write the report to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// TOML experiment configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    runs: Option<usize>,
    /// Comma-separated noise amplitudes in pixels.
    #[arg(long)]
    noise: Option<String>,
    #[arg(long)]
    perturb: Option<String>,
    /// Comma-separated methods (initial, direct, msac, msac-opt, fundamental).
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// View triplets per run.
    #[arg(long)]
    triplets: Option<usize>,
    /// Fraction of triplet tensors replaced by random ones.
    #[arg(long)]
    corrupt: Option<f64>,
    #[arg(long)]
    json: bool,
    /// Output directory for runs.csv and summary.toml.
    #[arg(long, default_value = "synth-bench-out")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ExportArgs {
    #[arg(long, default_value = "sample.json")]
    out: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value = "0.05")]
    perturb: String,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    triplets: usize,
    #[arg(long, default_value_t = 500)]
    points: usize,
    /// Replace every third point of the last N blocks with random pixels.
    #[arg(long, default_value_t = 0)]
    corrupt_blocks: usize,
}

struct CliError {
    code: i32,
    message: String,
}

impl CliError {
    fn invalid(message: impl Into<String>) -> Self {
        Self { code: EXIT_INVALID, message: message.into() }
    }

    fn failure(message: impl Into<String>) -> Self {
        Self { code: EXIT_FAILURE, message: message.into() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::AllCandidatesFailed => EXIT_ALL_FAILED,
            Error::InvalidConfig(_)
            | Error::InvalidThreshold(_)
            | Error::InvalidIntrinsics(_)
            | Error::SingularIntrinsics { .. }
            | Error::TooFewInputs { .. } => EXIT_INVALID,
            _ => EXIT_FAILURE,
        };
        Self { code, message: e.to_string() }
    }
}

pub fn run() -> i32 {
    run_with(std::env::args_os(), &mut std::io::stdout(), &mut std::io::stderr())
}

pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return e.exit_code();
        }
    };
    let result = match cli.command {
        Command::Calibrate(a) => cmd_calibrate(&a, out, err),
        Command::SynthBench(a) => cmd_synth_bench(&a, out),
        Command::ExportSample(a) => cmd_export_sample(&a, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}

fn parse_intrinsics(s: &str) -> Result<Intrinsics, CliError> {
    let values: Vec<f64> = s
        .split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::invalid(format!("--initial {s:?}: expected four numbers fx,fy,cx,cy")))?;
    let arr: [f64; 4] = values
        .try_into()
        .map_err(|_| CliError::invalid(format!("--initial {s:?}: expected four numbers fx,fy,cx,cy")))?;
    Ok(Intrinsics::from_array(arr)?)
}

fn parse_list<T: std::str::FromStr>(s: &str, flag: &str) -> Result<Vec<T>, CliError> {
    s.split(',')
        .map(|v| v.trim().parse::<T>().map_err(|_| CliError::invalid(format!("{flag}: cannot parse {v:?}"))))
        .collect()
}

#[derive(Debug, Serialize)]
struct CalibrationOutput {
    method: String,
    intrinsics: Intrinsics,
    initial_intrinsics: Intrinsics,
    converged: bool,
    termination: String,
    iterations: usize,
    final_cost: f64,
    msac_score: f64,
    tau: f64,
    residuals: Vec<f64>,
    selected_candidate: Option<usize>,
    blocks_used: Vec<usize>,
    blocks_skipped: Vec<(usize, String)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ground_truth: Option<Intrinsics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rel_dist_percent: Option<[f64; 4]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mean_error_percent: Option<f64>,
}

impl CalibrationOutput {
    fn text(&self) -> String {
        let k = &self.intrinsics;
        let mut s = format!(
            "method: {}\nfx: {}\nfy: {}\ncx: {}\ncy: {}\nconverged: {} ({}, {} iterations)\nfinal_cost: {:e}\nmsac_score: {} (tau {})\nblocks_used: {:?}\n",
            self.method, k.fx, k.fy, k.cx, k.cy, self.converged, self.termination, self.iterations, self.final_cost,
            self.msac_score, self.tau, self.blocks_used
        );
        if let Some(i) = self.selected_candidate {
            s += &format!("selected_block: {}\n", self.blocks_used[i]);
        }
        for (b, why) in &self.blocks_skipped {
            s += &format!("skipped_block: {b} ({why})\n");
        }
        if let (Some(rel), Some(mean)) = (self.rel_dist_percent, self.mean_error_percent) {
            s += &format!(
                "rel_dist_percent: fx {:.6} fy {:.6} cx {:.6} cy {:.6}\nmean_error_percent: {:.6}\n",
                rel[0], rel[1], rel[2], rel[3], mean
            );
        }
        s
    }
}

fn cmd_calibrate(a: &CalibrateArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let method: Method = a.method.parse().map_err(|_| CliError::invalid(format!("--method {:?}: expected direct, msac, msac-opt or fundamental", a.method)))?;
    if method == Method::Initial {
        return Err(CliError::invalid("--method initial is not a calibration method"));
    }
    let file = CorrespondenceFile::read(&a.file).map_err(|e| match e {
        crate::io::FileError::Io { .. } => CliError::failure(e.to_string()),
        _ => CliError::invalid(format!("{}: {e}", a.file.display())),
    })?;

    let k0 = if let Some(s) = &a.initial {
        parse_intrinsics(s)?
    } else if let Some(p) = &a.perturb {
        let range: Perturbation = p.parse().map_err(|e: Error| CliError::invalid(format!("--perturb: {e}")))?;
        let gt = file.ground_truth.ok_or_else(|| CliError::invalid("--perturb needs the `ground_truth` field in the file"))?;
        perturb_intrinsics(&gt, &range, a.seed)
    } else {
        file.initial_intrinsics.ok_or_else(|| {
            CliError::invalid("missing field `initial_intrinsics` (add it to the file or pass --initial fx,fy,cx,cy)")
        })?
    };
    let cfg = CalibrationConfig { tau: a.tau.unwrap_or(CalibrationConfig::default().tau), ..Default::default() };
    cfg.validate()?;

    let blocks: Vec<Vec<PointTriple>> = file.triplets.iter().map(TripletBlock::point_triples).collect();
    let mut used = Vec::new();
    let mut skipped = Vec::new();
    let mut tensors = Vec::new();
    let mut support = Vec::new();
    for (b, triples) in blocks.iter().enumerate() {
        if method == Method::Fundamental {
            match crate::fundamental::fundamentals_from_triples(triples) {
                Ok(_) => {
                    used.push(b);
                    support.push(triples.clone());
                }
                Err(e) => skipped.push((b, e.to_string())),
            }
            continue;
        }
        match linear_estimate(triples) {
            Ok((t, _)) => {
                used.push(b);
                tensors.push(t);
                support.push(triples.clone());
            }
            Err(e) => skipped.push((b, e.to_string())),
        }
    }
    for (b, why) in &skipped {
        let _ = writeln!(err, "warning: triplet block {b} skipped: {why}");
    }

    let report: CalibrationReport = crate::bench::run_method(method, &tensors, &support, &k0, &cfg)?;
    if !report.converged {
        let _ = writeln!(err, "warning: solver did not converge ({:?})", report.termination);
    }
    let rel = file.ground_truth.map(|gt| mean_relative_error(&report.intrinsics, &gt));
    let output = CalibrationOutput {
        method: method.to_string(),
        intrinsics: report.intrinsics,
        initial_intrinsics: k0,
        converged: report.converged,
        termination: format!("{:?}", report.termination),
        iterations: report.iterations,
        final_cost: report.final_cost(),
        msac_score: report.msac_score,
        tau: cfg.tau,
        residuals: report.residuals.clone(),
        selected_candidate: report.selected_candidate,
        blocks_used: used,
        blocks_skipped: skipped,
        ground_truth: file.ground_truth,
        rel_dist_percent: rel.map(|r| r.per_param),
        mean_error_percent: rel.map(|r| r.mean),
    };
    let rendered = if a.json {
        serde_json::to_string_pretty(&output).expect("report serializes") + "\n"
    } else {
        output.text()
    };
    out.write_all(rendered.as_bytes()).map_err(|e| CliError::failure(e.to_string()))?;
    if let Some(path) = &a.out {
        std::fs::write(path, &rendered).map_err(|e| CliError::failure(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn bench_config(a: &BenchArgs) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::failure(format!("{}: {e}", path.display())))?;
            toml::from_str(&text).map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(r) = a.runs {
        cfg.runs = r;
    }
    if let Some(n) = &a.noise {
        cfg.noise_levels = parse_list(n, "--noise")?;
    }
    if let Some(p) = &a.perturb {
        cfg.scene.perturbation = p.parse().map_err(|e: Error| CliError::invalid(format!("--perturb: {e}")))?;
    }
    if let Some(m) = &a.method {
        cfg.methods = parse_list(m, "--method")?;
    }
    if let Some(t) = a.tau {
        cfg.tau = t;
    }
    if let Some(s) = a.seed {
        cfg.master_seed = s;
    }
    if let Some(t) = a.triplets {
        cfg.num_triplets = t;
    }
    if let Some(c) = a.corrupt {
        cfg.corrupted_fraction = c;
    }
    cfg.validate().map_err(|e| CliError::invalid(e.to_string()))?;
    Ok(cfg)
}

fn summary_table(results: &ExperimentResults) -> String {
    let mut s = format!("{:>6} {:>12} {:>10} {:>10} {:>10} {:>10} {:>6}\n", "noise", "method", "median%", "q1%", "q3%", "mean%", "fail");
    for row in &results.summary {
        match &row.stats {
            Some(st) => {
                s += &format!(
                    "{:>6} {:>12} {:>10.5} {:>10.5} {:>10.5} {:>10.5} {:>6}\n",
                    row.noise, row.method.name(), st.median, st.q1, st.q3, st.mean, row.failures
                )
            }
            None => s += &format!("{:>6} {:>12} {:>10} {:>10} {:>10} {:>10} {:>6}\n", row.noise, row.method.name(), "-", "-", "-", "-", row.failures),
        }
    }
    s
}

fn cmd_synth_bench(a: &BenchArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = bench_config(a)?;
    let results = run_experiment(&cfg)?;
    write_bench_outputs(&results, &a.out)?;
    let rendered = if a.json {
        serde_json::to_string_pretty(&results.summary).expect("summary serializes") + "\n"
    } else {
        summary_table(&results)
    };
    out.write_all(rendered.as_bytes()).map_err(|e| CliError::failure(e.to_string()))
}

fn write_bench_outputs(results: &ExperimentResults, dir: &Path) -> Result<(), CliError> {
    let io_err = |p: &Path, e: std::io::Error| CliError::failure(format!("{}: {e}", p.display()));
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let runs = dir.join("runs.csv");
    let f = std::fs::File::create(&runs).map_err(|e| io_err(&runs, e))?;
    write_runs_csv(&results.records, std::io::BufWriter::new(f)).map_err(|e| io_err(&runs, e))?;
    let summary = dir.join("summary.toml");
    std::fs::write(&summary, summary_toml(results)).map_err(|e| io_err(&summary, e))
}

/// Builds a synthetic correspondence file: independent triplets sharing
/// the scene intrinsics, with ground truth and a perturbed start.
pub fn sample_file(
    scene: &SceneConfig,
    triplets: usize,
    corrupt_blocks: usize,
    seed: u64,
) -> crate::Result<CorrespondenceFile> {
    let mut blocks = Vec::with_capacity(triplets);
    for t in 0..triplets {
        let cfg = SceneConfig { seed: derive_seed(seed, &[1, t as u64]), ..scene.clone() };
        let s = generate_scene(&cfg)?;
        let mut triples = add_triple_noise(&s.triples()?, scene.noise, derive_seed(seed, &[2, t as u64]));
        let fraction = if t + corrupt_blocks >= triplets { 1.0 } else { scene.outlier_fraction };
        inject_outliers(&mut triples, fraction, scene.image_size, derive_seed(seed, &[5, t as u64]));
        let views = [0, 1, 2].map(|v| format!("t{t}_v{v}"));
        blocks.push(TripletBlock::new(views, &triples));
    }
    let mut file = CorrespondenceFile::new([scene.image_size.0, scene.image_size.1], blocks);
    file.ground_truth = Some(scene.k_true);
    file.initial_intrinsics = Some(perturb_intrinsics(&scene.k_true, &scene.perturbation, derive_seed(seed, &[3])));
    Ok(file)
}

fn cmd_export_sample(a: &ExportArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let perturbation: Perturbation = a.perturb.parse().map_err(|e: Error| CliError::invalid(format!("--perturb: {e}")))?;
    if a.triplets == 0 || a.corrupt_blocks > a.triplets {
        return Err(CliError::invalid("--triplets must be positive and at least --corrupt-blocks"));
    }
    let scene = SceneConfig { num_points: a.points, noise: a.noise, perturbation, ..Default::default() };
    scene.validate().map_err(|e| CliError::invalid(e.to_string()))?;
    let file = sample_file(&scene, a.triplets, a.corrupt_blocks, a.seed)?;
    file.write(&a.out).map_err(|e| CliError::failure(e.to_string()))?;
    writeln!(out, "wrote {} triplet blocks to {}", file.triplets.len(), a.out.display()).map_err(|e| CliError::failure(e.to_string()))
}
