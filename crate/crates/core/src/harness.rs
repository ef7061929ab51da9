//! Benchmark protocol: draw random evidence, run the thresholded heuristic,
//! treat whatever it explained as the MMAP query, solve that query exactly,
//! and compare.
//!
//! Each instance owns a ChaCha stream selected by `(seed, instance index)`,
//! and the same evidence is reused for every threshold of the grid, so the
//! results do not depend on scheduling.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heuristic::epsilon_mmap2mar;
use crate::inference::{pr, Oracle, DEFAULT_ORACLE_CAP};
use crate::model::{Assignment, Evidence, GraphicalModel, VariableId};
use crate::uai;

/// Attempts at drawing evidence with non-zero probability before giving up.
pub const MAX_EVIDENCE_ATTEMPTS: usize = 100;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSpec {
    pub model_path: PathBuf,
    /// Number of observed variables per instance.
    pub k: usize,
    /// Instances per threshold.
    pub q: usize,
    pub epsilon_grid: Vec<f64>,
    pub seed: u64,
    #[serde(default = "default_cap")]
    pub oracle_cap: u64,
}

fn default_cap() -> u64 {
    DEFAULT_ORACLE_CAP
}

impl BenchmarkSpec {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.k == 0 || self.k >= n {
            return Err(Error::ContractViolation(format!(
                "k = {} must satisfy 0 < k < n = {n}",
                self.k
            )));
        }
        if self.q == 0 {
            return Err(Error::ContractViolation("q must be at least 1".into()));
        }
        if self.epsilon_grid.is_empty() {
            return Err(Error::ContractViolation("empty threshold grid".into()));
        }
        if let Some(e) = self.epsilon_grid.iter().find(|e| !(0.0..=1.0).contains(*e)) {
            return Err(Error::ContractViolation(format!("threshold {e} outside [0, 1]")));
        }
        if self.epsilon_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::ContractViolation(
                "threshold grid must be strictly increasing".into(),
            ));
        }
        Ok(())
    }
}

/// `points` evenly spaced thresholds from 0 to 1 inclusive.
pub fn uniform_grid(points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![1.0],
        _ => (0..points).map(|i| i as f64 / (points - 1) as f64).collect(),
    }
}

/// The per-instance random stream.
pub fn instance_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Draws `k` distinct variables uniformly, then one uniform state for each in
/// the order they were drawn. Evidence of probability zero is redrawn; after
/// [`MAX_EVIDENCE_ATTEMPTS`] failures `None` is returned.
pub fn generate_instance<R: Rng>(model: &GraphicalModel, k: usize, rng: &mut R) -> Result<Option<Evidence>> {
    if k == 0 || k >= model.n() {
        return Err(Error::ContractViolation(format!(
            "k = {k} must satisfy 0 < k < n = {}",
            model.n()
        )));
    }
    for _ in 0..MAX_EVIDENCE_ATTEMPTS {
        let vars = rand::seq::index::sample(rng, model.n(), k).into_vec();
        let mut evidence = Evidence::new();
        for v in vars {
            let v = VariableId(v);
            evidence.observe(v, rng.gen_range(0..model.cardinality(v)))?;
        }
        if pr(model, &evidence)? > 0.0 {
            return Ok(Some(evidence));
        }
    }
    Ok(None)
}

/// One minus the fraction of variables assigned differently; 1 for two empty
/// assignments.
pub fn hamming_similarity(a: &Assignment, b: &Assignment) -> Result<f64> {
    if !a.keys().eq(b.keys()) {
        return Err(Error::ContractViolation(
            "assignments cover different variables".into(),
        ));
    }
    if a.is_empty() {
        return Ok(1.0);
    }
    let differing = a.iter().filter(|(v, s)| b[v] != **s).count();
    Ok(1.0 - differing as f64 / a.len() as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct InstanceResult {
    pub epsilon: f64,
    pub seed_index: usize,
    /// Heuristic states of the variables it explained; these variables form
    /// the exact query.
    pub heuristic: Assignment,
    pub exact: Assignment,
    pub exact_match: bool,
    pub hamming: f64,
    pub confidence: f64,
    /// Explained variables over explainable (unobserved, multi-state) ones.
    pub explained_fraction: f64,
    pub p_tilde: f64,
    pub p_star: f64,
    pub t_mar: f64,
    pub t_mmap: f64,
}

/// An instance that could not be evaluated, with the reason.
#[derive(Clone, Debug, PartialEq)]
pub struct SkippedInstance {
    pub epsilon: Option<f64>,
    pub seed_index: usize,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub epsilon: f64,
    pub exact_match_rate: f64,
    pub mean_hamming: f64,
    pub mean_explained_fraction: f64,
    /// Number of evaluated instances behind the means.
    pub instances: usize,
}

#[derive(Clone, Debug, Default)]
pub struct BenchmarkReport {
    pub points: Vec<TrajectoryPoint>,
    /// Ordered by threshold, then instance index.
    pub instances: Vec<InstanceResult>,
    pub skipped: Vec<SkippedInstance>,
}

/// Loads the model named by the spec and runs the protocol on it.
pub fn run_benchmark(spec: &BenchmarkSpec) -> Result<BenchmarkReport> {
    let model = uai::read_model(&spec.model_path)?;
    run_benchmark_on(&model, spec)
}

enum Outcome {
    Done(InstanceResult),
    Skipped(SkippedInstance),
}

fn evaluate_instance(model: &GraphicalModel, spec: &BenchmarkSpec, index: usize) -> Result<Vec<Outcome>> {
    let skip_all = |reason: String| {
        Ok(vec![Outcome::Skipped(SkippedInstance {
            epsilon: None,
            seed_index: index,
            reason,
        })])
    };
    let mut rng = instance_rng(spec.seed, index as u64);
    let Some(evidence) = generate_instance(model, spec.k, &mut rng)? else {
        return skip_all(format!(
            "no evidence with positive probability in {MAX_EVIDENCE_ATTEMPTS} draws"
        ));
    };
    let candidates: BTreeSet<VariableId> = model
        .variables()
        .filter(|&v| !evidence.contains(v) && model.cardinality(v) >= 2)
        .collect();
    if candidates.is_empty() {
        return skip_all("no explainable variables left after observation".into());
    }

    let oracle = Oracle::new(spec.oracle_cap);
    // Several thresholds usually explain the same set; solve each set once.
    let mut solved: BTreeMap<Vec<VariableId>, (Assignment, f64, f64)> = BTreeMap::new();
    let mut out = Vec::with_capacity(spec.epsilon_grid.len());
    for &epsilon in &spec.epsilon_grid {
        let trace = epsilon_mmap2mar(model, &candidates, &evidence, epsilon)?;
        let key: Vec<VariableId> = trace.explained.keys().copied().collect();
        let exact = match solved.get(&key) {
            Some(hit) => hit.clone(),
            None => {
                let explain: BTreeSet<VariableId> = key.iter().copied().collect();
                let started = Instant::now();
                match oracle.mmap(model, &evidence, &explain) {
                    Ok(sol) => {
                        let entry = (sol.assignment, sol.probability, started.elapsed().as_secs_f64());
                        solved.insert(key, entry.clone());
                        entry
                    }
                    Err(e @ Error::OracleTooLarge { .. }) => {
                        out.push(Outcome::Skipped(SkippedInstance {
                            epsilon: Some(epsilon),
                            seed_index: index,
                            reason: e.to_string(),
                        }));
                        continue;
                    }
                    Err(e) => return Err(e),
                }
            }
        };
        let (exact, p_star, t_mmap) = exact;
        let hamming = hamming_similarity(&trace.explained, &exact)?;
        out.push(Outcome::Done(InstanceResult {
            epsilon,
            seed_index: index,
            exact_match: trace.explained == exact,
            hamming,
            confidence: trace.confidence,
            explained_fraction: trace.explained.len() as f64 / candidates.len() as f64,
            p_tilde: trace.p_tilde,
            p_star,
            t_mar: trace.mar_time.as_secs_f64(),
            t_mmap,
            heuristic: trace.explained,
            exact,
        }));
    }
    Ok(out)
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    if count == 0 {
        f64::NAN
    } else {
        sum / count as f64
    }
}

/// Aggregates instance results into one point per threshold.
pub fn trajectory(epsilon_grid: &[f64], instances: &[InstanceResult]) -> Vec<TrajectoryPoint> {
    epsilon_grid
        .iter()
        .map(|&epsilon| {
            let at: Vec<_> = instances.iter().filter(|r| r.epsilon == epsilon).collect();
            TrajectoryPoint {
                epsilon,
                exact_match_rate: mean(at.iter().map(|r| if r.exact_match { 1.0 } else { 0.0 })),
                mean_hamming: mean(at.iter().map(|r| r.hamming)),
                mean_explained_fraction: mean(at.iter().map(|r| r.explained_fraction)),
                instances: at.len(),
            }
        })
        .collect()
}

/// Runs `q` instances for every threshold of the grid. Instances run in
/// parallel; results are reduced in `(threshold, index)` order.
pub fn run_benchmark_on(model: &GraphicalModel, spec: &BenchmarkSpec) -> Result<BenchmarkReport> {
    spec.validate(model.n())?;
    let per_instance = (0..spec.q)
        .into_par_iter()
        .map(|i| evaluate_instance(model, spec, i))
        .collect::<Result<Vec<_>>>()?;

    let mut instances = Vec::new();
    let mut skipped = Vec::new();
    for outcome in per_instance.into_iter().flatten() {
        match outcome {
            Outcome::Done(r) => instances.push(r),
            Outcome::Skipped(s) => skipped.push(s),
        }
    }
    let position = |e: f64| spec.epsilon_grid.iter().position(|&g| g == e).unwrap_or(usize::MAX);
    instances.sort_by_key(|r| (position(r.epsilon), r.seed_index));
    Ok(BenchmarkReport {
        points: trajectory(&spec.epsilon_grid, &instances),
        instances,
        skipped,
    })
}

fn write_pairs(path: &Path, pairs: impl Iterator<Item = (f64, f64)>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for (x, y) in pairs {
        writeln!(w, "{x} {y}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes the exact-match and Hamming series as `epsilon value` lines.
pub fn emit_dat(points: &[TrajectoryPoint], match_path: &Path, hamming_path: &Path) -> Result<()> {
    write_pairs(match_path, points.iter().map(|p| (p.epsilon, p.exact_match_rate)))?;
    write_pairs(hamming_path, points.iter().map(|p| (p.epsilon, p.mean_hamming)))
}

/// Reads back a two-column data file.
pub fn read_dat(path: &Path) -> Result<Vec<(f64, f64)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let parse = |s: &str, token: usize| {
            s.parse::<f64>().map_err(|_| Error::Parse {
                line: i + 1,
                token,
                message: format!("`{s}` is not a number"),
            })
        };
        if fields.len() != 2 {
            return Err(Error::Parse {
                line: i + 1,
                token: 1,
                message: format!("expected 2 columns, found {}", fields.len()),
            });
        }
        out.push((parse(fields[0], 1)?, parse(fields[1], 2)?));
    }
    Ok(out)
}

/// One CSV row per evaluated instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub epsilon: f64,
    pub seed_index: usize,
    pub exact_match: u8,
    pub hamming: f64,
    pub confidence: f64,
    pub explained_fraction: f64,
    pub t_mar_s: f64,
    pub t_mmap_s: f64,
}

impl From<&InstanceResult> for CsvRow {
    fn from(r: &InstanceResult) -> Self {
        CsvRow {
            epsilon: r.epsilon,
            seed_index: r.seed_index,
            exact_match: r.exact_match as u8,
            hamming: r.hamming,
            confidence: r.confidence,
            explained_fraction: r.explained_fraction,
            t_mar_s: r.t_mar,
            t_mmap_s: r.t_mmap,
        }
    }
}

pub const CSV_HEADER: [&str; 8] = [
    "epsilon",
    "seed_index",
    "exact_match",
    "hamming",
    "confidence",
    "explained_fraction",
    "t_mar_s",
    "t_mmap_s",
];

pub fn write_instances_csv(instances: &[InstanceResult], path: &Path) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(csv_err)?;
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in instances {
        w.serialize(CsvRow::from(r)).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_instances_csv(path: &Path) -> Result<Vec<CsvRow>> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    r.deserialize().map(|row| row.map_err(csv_err)).collect()
}
