//! Multi-run synthetic experiments: noise levels × methods × seeded runs,
//! with boxplot statistics and CSV / TOML output.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::{calibrate_direct, calibrate_msac, calibrate_msac_opt, CalibrationConfig, CalibrationReport};
use crate::error::{Error, Result};
use crate::estimation::linear_estimate;
use crate::fundamental::{calibrate_fundamental, fundamentals_from_triples};
use crate::geometry::{normalize_tensor, Intrinsics, PointTriple, TrifocalTensor};
use crate::synth::{
    add_triple_noise, derive_seed, generate_scene, inject_outliers, mean_relative_error, perturb_intrinsics,
    rng_from_seed, SceneConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// The perturbed start itself, i.e. the error before calibration.
    Initial,
    Direct,
    Msac,
    MsacOpt,
    Fundamental,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Initial, Method::Direct, Method::Msac, Method::MsacOpt, Method::Fundamental];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Initial => "initial",
            Method::Direct => "direct",
            Method::Msac => "msac",
            Method::MsacOpt => "msac-opt",
            Method::Fundamental => "fundamental",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown method {s:?}")))
    }
}

/// Calibrates with a trifocal or fundamental-matrix method.
pub fn run_method(
    method: Method,
    tensors: &[TrifocalTensor],
    triples: &[Vec<PointTriple>],
    k0: &Intrinsics,
    cfg: &CalibrationConfig,
) -> Result<CalibrationReport> {
    match method {
        Method::Direct => calibrate_direct(tensors, k0, cfg),
        Method::Msac => calibrate_msac(tensors, k0, cfg),
        Method::MsacOpt => calibrate_msac_opt(tensors, k0, cfg),
        Method::Fundamental => {
            let mut fs = Vec::new();
            for t in triples {
                fs.extend(fundamentals_from_triples(t)?);
            }
            calibrate_fundamental(&fs, k0, cfg)
        }
        Method::Initial => Err(Error::InvalidConfig("`initial` is not a calibration method".into())),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    /// Scene template; its `noise` and `seed` are overridden per run.
    pub scene: SceneConfig,
    pub noise_levels: Vec<f64>,
    pub methods: Vec<Method>,
    pub runs: usize,
    pub master_seed: u64,
    /// Independent view triplets (one tensor each) per run.
    pub num_triplets: usize,
    /// Fraction of triplets whose tensor is replaced by random entries.
    pub corrupted_fraction: f64,
    pub tau: f64,
}

pub const DEFAULT_SEED: u64 = 20_250_101;

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scene: SceneConfig::default(),
            noise_levels: vec![0.1, 0.5, 1.0],
            methods: vec![Method::Direct, Method::Fundamental],
            runs: 100,
            master_seed: DEFAULT_SEED,
            num_triplets: 1,
            corrupted_fraction: 0.0,
            tau: CalibrationConfig::default().tau,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.scene.validate()?;
        if self.runs == 0 {
            return Err(Error::InvalidConfig("runs must be at least 1".into()));
        }
        if self.num_triplets == 0 {
            return Err(Error::InvalidConfig("num_triplets must be at least 1".into()));
        }
        if self.noise_levels.is_empty() || self.noise_levels.iter().any(|n| !(*n >= 0.0)) {
            return Err(Error::InvalidConfig("noise levels must be non-empty and non-negative".into()));
        }
        if !(0.0..=1.0).contains(&self.corrupted_fraction) {
            return Err(Error::InvalidConfig("corrupted_fraction must lie in [0, 1]".into()));
        }
        self.calibration().validate()
    }

    pub fn calibration(&self) -> CalibrationConfig {
        CalibrationConfig { tau: self.tau, ..Default::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodResult {
    pub method: Method,
    pub k_est: Option<Intrinsics>,
    /// Per-parameter relative distances in percent.
    pub rel_dist: Option<[f64; 4]>,
    /// Mean relative error in percent.
    pub mean_error: Option<f64>,
    pub converged: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    pub noise: f64,
    pub k_true: Intrinsics,
    pub k0: Intrinsics,
    pub results: Vec<MethodResult>,
}

impl RunRecord {
    pub fn result(&self, method: Method) -> Option<&MethodResult> {
        self.results.iter().find(|r| r.method == method)
    }
}

/// Inputs shared by every method of one run.
pub struct RunData {
    pub k0: Intrinsics,
    pub triples: Vec<Vec<PointTriple>>,
    pub tensors: Result<Vec<TrifocalTensor>>,
}

/// Builds the scenes, noisy correspondences, tensors and start point of a
/// run. The scene and start point depend only on the run seed, so every
/// noise level sees the same geometry.
pub fn prepare_run(cfg: &ExperimentConfig, run_seed: u64, noise_index: usize, noise: f64) -> Result<RunData> {
    let mut triples = Vec::with_capacity(cfg.num_triplets);
    for t in 0..cfg.num_triplets {
        let scene_cfg = SceneConfig { noise, seed: derive_seed(run_seed, &[1, t as u64]), ..cfg.scene.clone() };
        let scene = generate_scene(&scene_cfg)?;
        let noise_seed = derive_seed(run_seed, &[2, noise_index as u64, t as u64]);
        let mut noisy = add_triple_noise(&scene.triples()?, noise, noise_seed);
        let outlier_seed = derive_seed(run_seed, &[5, noise_index as u64, t as u64]);
        inject_outliers(&mut noisy, cfg.scene.outlier_fraction, cfg.scene.image_size, outlier_seed);
        triples.push(noisy);
    }
    let k0 = perturb_intrinsics(&cfg.scene.k_true, &cfg.scene.perturbation, derive_seed(run_seed, &[3]));

    let tensors = triples
        .iter()
        .map(|t| linear_estimate(t).map(|(tensor, _)| tensor))
        .collect::<Result<Vec<_>>>()
        .map(|mut tensors| {
            corrupt_tensors(&mut tensors, cfg.corrupted_fraction, derive_seed(run_seed, &[4, noise_index as u64]));
            tensors
        });
    Ok(RunData { k0, triples, tensors })
}

/// Replaces `round(fraction · len)` randomly chosen tensors by unit-norm
/// tensors with uniform random entries.
pub fn corrupt_tensors(tensors: &mut [TrifocalTensor], fraction: f64, seed: u64) {
    use rand::seq::SliceRandom;
    let count = (fraction * tensors.len() as f64).round() as usize;
    if count == 0 {
        return;
    }
    let mut rng = rng_from_seed(seed);
    let mut idx: Vec<usize> = (0..tensors.len()).collect();
    idx.shuffle(&mut rng);
    for &i in idx.iter().take(count) {
        let entries: [f64; 27] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        tensors[i] = normalize_tensor(&TrifocalTensor::from_entries(&entries)).expect("nonzero random tensor");
    }
}

fn single_run(cfg: &ExperimentConfig, calib: &CalibrationConfig, run: usize, noise_index: usize) -> RunRecord {
    let noise = cfg.noise_levels[noise_index];
    let seed = derive_seed(cfg.master_seed, &[run as u64]);
    let k_true = cfg.scene.k_true;
    let data = prepare_run(cfg, seed, noise_index, noise);

    let mut results = Vec::with_capacity(cfg.methods.len());
    for &method in &cfg.methods {
        let outcome = match (&data, method) {
            (Err(e), _) => Err(e.clone()),
            (Ok(d), Method::Initial) => Ok((d.k0, true)),
            (Ok(d), m) => {
                let tensors = if m == Method::Fundamental { Ok(vec![]) } else { d.tensors.clone() };
                tensors.and_then(|ts| run_method(m, &ts, &d.triples, &d.k0, calib)).map(|r| (r.intrinsics, r.converged))
            }
        };
        results.push(match outcome {
            Ok((k, converged)) => {
                let e = mean_relative_error(&k, &k_true);
                MethodResult {
                    method,
                    k_est: Some(k),
                    rel_dist: Some(e.per_param),
                    mean_error: Some(e.mean),
                    converged,
                    error: None,
                }
            }
            Err(e) => MethodResult {
                method,
                k_est: None,
                rel_dist: None,
                mean_error: None,
                converged: false,
                error: Some(e.to_string()),
            },
        });
    }
    let k0 = data.as_ref().map(|d| d.k0).unwrap_or(k_true);
    RunRecord { run, seed, noise, k_true, k0, results }
}

/// Boxplot statistics (whiskers at the most extreme data within 1.5 IQR).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub count: usize,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub iqr: f64,
    pub whisker_low: f64,
    pub whisker_high: f64,
    pub mean: f64,
    pub std: f64,
}

/// Linearly interpolated quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

impl BoxStats {
    pub fn from_values(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let (q1, median, q3) = (quantile(&v, 0.25), quantile(&v, 0.5), quantile(&v, 0.75));
        let iqr = q3 - q1;
        let (lo_fence, hi_fence) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
        let whisker_low = v.iter().copied().find(|x| *x >= lo_fence).unwrap_or(q1);
        let whisker_high = v.iter().rev().copied().find(|x| *x <= hi_fence).unwrap_or(q3);
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let std = if v.len() > 1 { (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() } else { 0.0 };
        Some(Self { count: v.len(), median, q1, q3, iqr, whisker_low, whisker_high, mean, std })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub noise: f64,
    pub method: Method,
    pub failures: usize,
    pub non_converged: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stats: Option<BoxStats>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResults {
    pub config: ExperimentConfig,
    pub records: Vec<RunRecord>,
    pub summary: Vec<SummaryRow>,
}

impl ExperimentResults {
    pub fn stats(&self, noise: f64, method: Method) -> Option<&BoxStats> {
        self.summary.iter().find(|r| r.noise == noise && r.method == method).and_then(|r| r.stats.as_ref())
    }

    pub fn errors(&self, noise: f64, method: Method) -> Vec<f64> {
        self.records
            .iter()
            .filter(|r| r.noise == noise)
            .filter_map(|r| r.result(method).and_then(|m| m.mean_error))
            .collect()
    }
}

/// Runs the whole grid. Runs execute in parallel; each draws its seed from
/// `(master_seed, run index)` so the output is identical for any thread
/// count.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResults> {
    cfg.validate()?;
    let calib = cfg.calibration();
    let jobs: Vec<(usize, usize)> =
        (0..cfg.noise_levels.len()).flat_map(|n| (0..cfg.runs).map(move |r| (n, r))).collect();
    let records: Vec<RunRecord> = jobs.par_iter().map(|&(n, r)| single_run(cfg, &calib, r, n)).collect();

    let mut summary = Vec::new();
    for &noise in &cfg.noise_levels {
        for &method in &cfg.methods {
            let results: Vec<&MethodResult> =
                records.iter().filter(|r| r.noise == noise).filter_map(|r| r.result(method)).collect();
            let values: Vec<f64> = results.iter().filter_map(|m| m.mean_error).collect();
            summary.push(SummaryRow {
                noise,
                method,
                failures: results.iter().filter(|m| m.error.is_some()).count(),
                non_converged: results.iter().filter(|m| m.error.is_none() && !m.converged).count(),
                stats: BoxStats::from_values(&values),
            });
        }
    }
    Ok(ExperimentResults { config: cfg.clone(), records, summary })
}

pub const CSV_HEADER: [&str; 10] =
    ["run", "seed", "noise", "method", "rel_dist_fx", "rel_dist_fy", "rel_dist_cx", "rel_dist_cy", "mean_error", "converged"];

/// One row per run × method; relative distances in percent, empty on failure.
pub fn write_runs_csv<W: Write>(records: &[RunRecord], out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        for m in &r.results {
            let rel = m.rel_dist.map(|d| d.map(|v| v.to_string())).unwrap_or_default();
            w.write_record([
                r.run.to_string(),
                r.seed.to_string(),
                r.noise.to_string(),
                m.method.to_string(),
                rel[0].clone(),
                rel[1].clone(),
                rel[2].clone(),
                rel[3].clone(),
                m.mean_error.map(|v| v.to_string()).unwrap_or_default(),
                m.converged.to_string(),
            ])?;
        }
    }
    w.flush()
}

#[derive(Serialize)]
struct SummaryDocument<'a> {
    runs: usize,
    master_seed: u64,
    num_points: usize,
    num_triplets: usize,
    unit: &'static str,
    group: &'a [SummaryRow],
}

pub fn summary_toml(results: &ExperimentResults) -> String {
    let doc = SummaryDocument {
        runs: results.config.runs,
        master_seed: results.config.master_seed,
        num_points: results.config.scene.num_points,
        num_triplets: results.config.num_triplets,
        unit: "percent",
        group: &results.summary,
    };
    toml::to_string(&doc).expect("summary is always serializable")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("kruppa".parse::<Method>().is_err());
    }

    #[test]
    fn box_stats_known_values() {
        let s = BoxStats::from_values(&[1.0, 2.0, 3.0, 4.0, 100.0]).unwrap();
        assert_eq!(s.median, 3.0);
        assert_eq!((s.q1, s.q3, s.iqr), (2.0, 4.0, 2.0));
        assert_eq!(s.whisker_high, 4.0);
        assert_eq!(s.whisker_low, 1.0);
        assert_eq!(s.mean, 22.0);
        assert!(BoxStats::from_values(&[]).is_none());
    }

    #[test]
    fn corruption_count() {
        let t = TrifocalTensor::from_entries(&[1.0; 27]);
        let mut ts = vec![t; 5];
        corrupt_tensors(&mut ts, 0.2, 1);
        assert_eq!(ts.iter().filter(|x| **x != t).count(), 1);
    }
}
