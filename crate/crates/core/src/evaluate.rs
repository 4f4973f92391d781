//! Replication engine and performance metrics.
//!
//! A benchmark crosses every process in the config with every neighbor order
//! and search radius (one *scenario* each), simulates `n_patterns` pattern
//! realizations per process, draws `n_designs` Latin hypercube surveys per
//! pattern and scenario, and applies every estimator to each survey. Cells are
//! processed in parallel and merged by cell index, so output never depends on
//! the thread count.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimators::{estimate, EstimatorId};
use crate::ingest::{self, filter_abundant, species_pattern, true_density, IngestError, LoadMode};
use crate::simulate::{
    derive_seed, gen_poisson, gen_thomas, lhs_focal_points, pcqm_sample, PointPattern, SimError,
    StudyWindow, SurveyDesign,
};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{metric} needs at least {needed} estimates, got {got}")]
    TooFew {
        metric: &'static str,
        needed: usize,
        got: usize,
    },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, EvalError>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> EvalError + '_ {
    move |source| EvalError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn check_truth(truth: f64) -> Result<()> {
    if !(truth > 0.0 && truth.is_finite()) {
        return Err(EvalError::Config(format!("true density must be positive, got {truth}")));
    }
    Ok(())
}

/// (mean(λ̂) − λ) / λ.
pub fn r_bias(estimates: &[f64], truth: f64) -> Result<f64> {
    check_truth(truth)?;
    if estimates.is_empty() {
        return Err(EvalError::TooFew {
            metric: "r_bias",
            needed: 1,
            got: 0,
        });
    }
    let mean = estimates.iter().sum::<f64>() / estimates.len() as f64;
    Ok((mean - truth) / truth)
}

/// √(mean((λ̂ − λ)²)) / λ, divisor = number of estimates.
pub fn r_rmse(estimates: &[f64], truth: f64) -> Result<f64> {
    check_truth(truth)?;
    if estimates.is_empty() {
        return Err(EvalError::TooFew {
            metric: "r_rmse",
            needed: 1,
            got: 0,
        });
    }
    let ms = estimates.iter().map(|e| (e - truth).powi(2)).sum::<f64>() / estimates.len() as f64;
    Ok(ms.sqrt() / truth)
}

/// Sample standard deviation (divisor n − 1) over λ.
pub fn r_sd(estimates: &[f64], truth: f64) -> Result<f64> {
    check_truth(truth)?;
    let n = estimates.len();
    if n < 2 {
        return Err(EvalError::TooFew {
            metric: "r_sd",
            needed: 2,
            got: n,
        });
    }
    let mean = estimates.iter().sum::<f64>() / n as f64;
    let var = estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    Ok(var.sqrt() / truth)
}

/// Point process generating the patterns of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProcessSpec {
    Csr {
        lambda: f64,
    },
    Thomas {
        kappa: f64,
        mu: f64,
        sigma: f64,
    },
    /// A censused stem map; each species with at least `min_count` stems
    /// (or each listed species) is one fixed pattern.
    StemMap {
        path: PathBuf,
        #[serde(default = "default_min_count")]
        min_count: usize,
        #[serde(default)]
        species: Option<Vec<String>>,
    },
}

fn default_min_count() -> usize {
    500
}

impl ProcessSpec {
    fn label(&self) -> String {
        match self {
            ProcessSpec::Csr { lambda } => format!("csr-lambda{lambda}"),
            ProcessSpec::Thomas { kappa, mu, sigma } => {
                format!("thomas-kappa{kappa}-mu{mu}-sigma{sigma}")
            }
            ProcessSpec::StemMap { .. } => "stem".into(),
        }
    }

    fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(EvalError::Config(format!("{name} must be positive, got {v}")))
            }
        };
        match *self {
            ProcessSpec::Csr { lambda } => positive("lambda", lambda),
            ProcessSpec::Thomas { kappa, mu, sigma } => {
                positive("kappa", kappa)?;
                positive("mu", mu)?;
                positive("sigma", sigma)
            }
            ProcessSpec::StemMap { min_count, .. } => {
                if min_count == 0 {
                    return Err(EvalError::Config("min_count must be >= 1".into()));
                }
                Ok(())
            }
        }
    }

    /// Process intensity; `None` for stem maps, whose truth is the census.
    pub fn nominal_intensity(&self) -> Option<f64> {
        match *self {
            ProcessSpec::Csr { lambda } => Some(lambda),
            ProcessSpec::Thomas { kappa, mu, .. } => Some(kappa * mu),
            ProcessSpec::StemMap { .. } => None,
        }
    }
}

fn default_n() -> usize {
    120
}

fn default_q() -> u32 {
    4
}

/// Everything a benchmark run depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub name: String,
    pub processes: Vec<ProcessSpec>,
    pub window: StudyWindow,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_q")]
    pub q: u32,
    pub ell: Vec<u32>,
    pub radius: Vec<f64>,
    /// Focal-point margin; defaults to C + 0.1 for each radius.
    #[serde(default)]
    pub buffer: Option<f64>,
    pub n_patterns: usize,
    pub n_designs: usize,
    /// Estimator names, or `all` for the censored-data set.
    pub estimators: Vec<String>,
    pub master_seed: u64,
}

impl BenchmarkConfig {
    pub fn design(&self, ell: u32, radius: f64) -> SurveyDesign {
        SurveyDesign {
            n: self.n,
            q: self.q,
            ell,
            radius,
            buffer: self.buffer.unwrap_or(radius + 0.1),
            seed: self.master_seed,
        }
    }

    pub fn estimator_ids(&self) -> Result<Vec<EstimatorId>> {
        let mut ids = Vec::new();
        for name in &self.estimators {
            if name.trim().eq_ignore_ascii_case("all") {
                ids.extend(EstimatorId::CENSORED_SET);
            } else {
                ids.push(name.parse::<EstimatorId>().map_err(EvalError::Config)?);
            }
        }
        let mut seen = Vec::new();
        ids.retain(|id| {
            let fresh = !seen.contains(id);
            seen.push(*id);
            fresh
        });
        Ok(ids)
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(EvalError::Config(m));
        self.window.validate()?;
        if self.processes.is_empty() {
            return cfg("at least one process is required".into());
        }
        for p in &self.processes {
            p.validate()?;
        }
        if self.ell.is_empty() || self.radius.is_empty() {
            return cfg("ell and radius lists must be nonempty".into());
        }
        if self.n_patterns == 0 || self.n_designs == 0 {
            return cfg("n_patterns and n_designs must be >= 1".into());
        }
        if self.estimators.is_empty() {
            return cfg("estimator list must be nonempty".into());
        }
        self.estimator_ids()?;
        for &ell in &self.ell {
            for &c in &self.radius {
                self.design(ell, c).validate(&self.window)?;
            }
        }
        Ok(())
    }

    /// Resolves relative stem-map paths against `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        for p in &mut self.processes {
            if let ProcessSpec::StemMap { path, .. } = p {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        }
    }
}

/// One (pattern source, ℓ, C) combination.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub id: String,
    pub process: ProcessSpec,
    pub species: Option<String>,
    pub ell: u32,
    pub radius: f64,
    pub nominal_intensity: Option<f64>,
}

/// Patterns shared by all scenarios of one source.
struct Source {
    label: String,
    process: ProcessSpec,
    species: Option<String>,
    patterns: Vec<PointPattern>,
}

/// A validated config with its patterns generated or loaded.
pub struct PreparedBenchmark {
    config: BenchmarkConfig,
    estimators: Vec<EstimatorId>,
    sources: Vec<Source>,
    scenarios: Vec<(usize, Scenario)>,
}

fn build_pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| EvalError::Config(format!("cannot start thread pool: {e}")))
}

fn load_stem_sources(
    process: &ProcessSpec,
    window: StudyWindow,
) -> Result<Vec<(String, PointPattern)>> {
    let ProcessSpec::StemMap {
        path,
        min_count,
        species,
    } = process
    else {
        unreachable!("stem sources only");
    };
    let report = ingest::load_stem_map(path, window, LoadMode::Strict)?;
    let codes = match species {
        Some(list) => list.clone(),
        None => filter_abundant(&report.map, *min_count),
    };
    if codes.is_empty() {
        return Err(EvalError::Config(format!(
            "{}: no species with at least {min_count} stems",
            path.display()
        )));
    }
    codes
        .into_iter()
        .map(|code| {
            let pattern = species_pattern(&report.map, &code)?;
            Ok((code, pattern))
        })
        .collect()
}

impl PreparedBenchmark {
    /// Validates `config` and builds every pattern, using at most `threads`
    /// worker threads.
    pub fn new(config: BenchmarkConfig, threads: usize) -> Result<Self> {
        config.validate()?;
        let estimators = config.estimator_ids()?;
        let pool = build_pool(threads)?;
        let mut sources = Vec::new();
        for (pi, process) in config.processes.iter().enumerate() {
            match process {
                ProcessSpec::StemMap { .. } => {
                    for (code, pattern) in load_stem_sources(process, config.window)? {
                        sources.push(Source {
                            label: format!("stem-{code}"),
                            process: process.clone(),
                            species: Some(code),
                            patterns: vec![pattern],
                        });
                    }
                }
                _ => {
                    let window = config.window;
                    let seed = config.master_seed;
                    let patterns: Vec<Result<PointPattern>> = pool.install(|| {
                        (0..config.n_patterns)
                            .into_par_iter()
                            .map(|k| {
                                let s = derive_seed(seed, &[0x7061_7474, pi as u64, k as u64]);
                                Ok(match *process {
                                    ProcessSpec::Csr { lambda } => gen_poisson(lambda, &window, s)?,
                                    ProcessSpec::Thomas { kappa, mu, sigma } => {
                                        gen_thomas(kappa, mu, sigma, &window, s)?
                                    }
                                    ProcessSpec::StemMap { .. } => unreachable!(),
                                })
                            })
                            .collect()
                    });
                    sources.push(Source {
                        label: process.label(),
                        process: process.clone(),
                        species: None,
                        patterns: patterns.into_iter().collect::<Result<_>>()?,
                    });
                }
            }
        }
        let mut scenarios = Vec::new();
        for (si, src) in sources.iter().enumerate() {
            for &ell in &config.ell {
                for &radius in &config.radius {
                    scenarios.push((
                        si,
                        Scenario {
                            id: format!("{}-ell{ell}-c{radius}", src.label),
                            process: src.process.clone(),
                            species: src.species.clone(),
                            ell,
                            radius,
                            nominal_intensity: src.process.nominal_intensity(),
                        },
                    ));
                }
            }
        }
        Ok(Self {
            config,
            estimators,
            sources,
            scenarios,
        })
    }

    pub fn scenarios(&self) -> impl Iterator<Item = &Scenario> {
        self.scenarios.iter().map(|(_, s)| s)
    }

    /// Number of (scenario, pattern, design) cells.
    pub fn cell_count(&self) -> usize {
        self.scenarios
            .iter()
            .map(|(si, _)| self.sources[*si].patterns.len() * self.config.n_designs)
            .sum()
    }

    pub fn estimators(&self) -> &[EstimatorId] {
        &self.estimators
    }

    /// Runs every cell on a pool of at most `threads` workers.
    pub fn run(&self, threads: usize) -> Result<BenchmarkResults> {
        let pool = build_pool(threads)?;
        let cfg = &self.config;
        let mut cells = Vec::new();
        for (sc, (si, _)) in self.scenarios.iter().enumerate() {
            for p in 0..self.sources[*si].patterns.len() {
                for d in 0..cfg.n_designs {
                    cells.push((sc, p, d));
                }
            }
        }
        let records: Vec<Result<CellRecord>> = pool.install(|| {
            cells
                .par_iter()
                .map(|&(sc, p, d)| self.run_cell(sc, p, d))
                .collect()
        });
        let records = records.into_iter().collect::<Result<Vec<_>>>()?;
        Ok(BenchmarkResults {
            config: cfg.clone(),
            estimators: self.estimators.clone(),
            scenarios: self.scenarios.iter().map(|(_, s)| s.clone()).collect(),
            cells: records,
        })
    }

    fn run_cell(&self, sc: usize, p: usize, d: usize) -> Result<CellRecord> {
        let cfg = &self.config;
        let (si, scenario) = &self.scenarios[sc];
        let pattern = &self.sources[*si].patterns[p];
        let ri = cfg
            .radius
            .iter()
            .position(|&c| c == scenario.radius)
            .unwrap_or(0);
        let seed = derive_seed(
            cfg.master_seed,
            &[
                0x6465_7369,
                *si as u64,
                p as u64,
                scenario.ell as u64,
                ri as u64,
                d as u64,
            ],
        );
        let design = cfg.design(scenario.ell, scenario.radius);
        let focals = lhs_focal_points(&design, &cfg.window, seed)?;
        let sample = pcqm_sample(pattern, &focals, &design)?;
        let estimates = self
            .estimators
            .iter()
            .map(|&id| match estimate(id, &sample, None) {
                Ok(est) => EstimateRecord {
                    estimator: id,
                    lambda_hat: Some(est.lambda_hat),
                    k_hat: est.k_hat,
                    valid: est.valid && est.lambda_hat.is_finite(),
                    note: est.warnings.join("; "),
                },
                Err(e) => EstimateRecord {
                    estimator: id,
                    lambda_hat: None,
                    k_hat: None,
                    valid: false,
                    note: e.to_string(),
                },
            })
            .collect();
        Ok(CellRecord {
            scenario: sc,
            pattern: p,
            design: d,
            truth: true_density(pattern),
            censored_rate: sample.p0(),
            estimates,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateRecord {
    pub estimator: EstimatorId,
    pub lambda_hat: Option<f64>,
    pub k_hat: Option<f64>,
    pub valid: bool,
    pub note: String,
}

/// Outcome of every estimator on one simulated survey.
#[derive(Debug, Clone, PartialEq)]
pub struct CellRecord {
    pub scenario: usize,
    pub pattern: usize,
    pub design: usize,
    /// Realized density of the pattern (count / area).
    pub truth: f64,
    pub censored_rate: f64,
    pub estimates: Vec<EstimateRecord>,
}

/// Metrics of one estimator over a set of replicates. Metric fields are
/// `None` when too few valid estimates exist.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsSummary {
    pub scenario_id: String,
    /// Pattern index, or `all` for the pooled row.
    pub pattern_id: String,
    pub estimator: EstimatorId,
    pub lambda_true: f64,
    pub r_bias: Option<f64>,
    pub r_rmse: Option<f64>,
    pub r_sd: Option<f64>,
    pub mean_censored_rate: f64,
    pub n_valid: usize,
    pub n_invalid: usize,
}

/// Truth used to form relative errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TruthBasis {
    /// Realized count / area of each pattern.
    Realized,
    /// Nominal process intensity (falls back to realized for stem maps).
    Nominal,
}

pub struct BenchmarkResults {
    pub config: BenchmarkConfig,
    pub estimators: Vec<EstimatorId>,
    pub scenarios: Vec<Scenario>,
    pub cells: Vec<CellRecord>,
}

fn metrics_from_relative(errors: &[f64]) -> (Option<f64>, Option<f64>, Option<f64>) {
    // Relative errors e = (λ̂ − λ)/λ are estimates of 1 + e against truth 1.
    let shifted: Vec<f64> = errors.iter().map(|e| 1.0 + e).collect();
    (
        r_bias(&shifted, 1.0).ok(),
        r_rmse(&shifted, 1.0).ok(),
        r_sd(&shifted, 1.0).ok(),
    )
}

impl BenchmarkResults {
    fn truth_of(&self, cell: &CellRecord, basis: TruthBasis) -> f64 {
        match basis {
            TruthBasis::Realized => cell.truth,
            TruthBasis::Nominal => self.scenarios[cell.scenario]
                .nominal_intensity
                .unwrap_or(cell.truth),
        }
    }

    /// Per-pattern rows followed by a pooled `all` row, for every scenario
    /// and estimator. Pooled metrics use each replicate's error relative to
    /// its own pattern's truth.
    pub fn summaries(&self, basis: TruthBasis) -> Vec<MetricsSummary> {
        let mut out = Vec::new();
        for (sc, scenario) in self.scenarios.iter().enumerate() {
            let cells: Vec<&CellRecord> = self.cells.iter().filter(|c| c.scenario == sc).collect();
            let n_patterns = cells.iter().map(|c| c.pattern + 1).max().unwrap_or(0);
            let mut groups: Vec<(String, Vec<&CellRecord>)> = (0..n_patterns)
                .map(|p| {
                    (
                        p.to_string(),
                        cells.iter().copied().filter(|c| c.pattern == p).collect(),
                    )
                })
                .collect();
            groups.push(("all".into(), cells.clone()));
            for (label, group) in &groups {
                if group.is_empty() {
                    continue;
                }
                let rate = group.iter().map(|c| c.censored_rate).sum::<f64>() / group.len() as f64;
                let truth = group.iter().map(|c| self.truth_of(c, basis)).sum::<f64>() / group.len() as f64;
                for (ei, &id) in self.estimators.iter().enumerate() {
                    let mut errors = Vec::new();
                    let mut invalid = 0;
                    for c in group {
                        let e = &c.estimates[ei];
                        let t = self.truth_of(c, basis);
                        match e.lambda_hat {
                            Some(l) if e.valid && t > 0.0 => errors.push((l - t) / t),
                            _ => invalid += 1,
                        }
                    }
                    let (rb, rr, rs) = metrics_from_relative(&errors);
                    out.push(MetricsSummary {
                        scenario_id: scenario.id.clone(),
                        pattern_id: label.clone(),
                        estimator: id,
                        lambda_true: truth,
                        r_bias: rb,
                        r_rmse: rr,
                        r_sd: rs,
                        mean_censored_rate: rate,
                        n_valid: errors.len(),
                        n_invalid: invalid,
                    });
                }
            }
        }
        out
    }

    /// Writes `summary.csv`, `summary_nominal.csv`, one
    /// `summary_<scenario>.csv` per scenario, `replicates.csv` and
    /// `manifest.json` into `dir`. Returns the written paths.
    pub fn write_outputs(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        let mut written = Vec::new();
        let realized = self.summaries(TruthBasis::Realized);
        let path = dir.join("summary.csv");
        write_summary_csv(&path, realized.iter())?;
        written.push(path);
        let path = dir.join("summary_nominal.csv");
        write_summary_csv(&path, self.summaries(TruthBasis::Nominal).iter())?;
        written.push(path);
        for scenario in &self.scenarios {
            let path = dir.join(format!("summary_{}.csv", scenario.id));
            write_summary_csv(&path, realized.iter().filter(|m| m.scenario_id == scenario.id))?;
            written.push(path);
        }
        let path = dir.join("replicates.csv");
        self.write_replicates(&path)?;
        written.push(path);
        let path = dir.join("manifest.json");
        let manifest = Manifest {
            tool: "pcqm".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config: self.config.clone(),
            estimators: self.estimators.clone(),
            scenarios: self.scenarios.clone(),
            cell_count: self.cells.len(),
            outputs: written
                .iter()
                .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
                .collect(),
        };
        let file = File::create(&path).map_err(io_err(&path))?;
        let mut w = BufWriter::new(file);
        serde_json::to_writer_pretty(&mut w, &manifest)?;
        w.write_all(b"\n").map_err(io_err(&path))?;
        w.flush().map_err(io_err(&path))?;
        written.push(path);
        Ok(written)
    }

    fn write_replicates(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(io_err(path))?;
        let mut wtr = csv::Writer::from_writer(BufWriter::new(file));
        wtr.write_record([
            "scenario_id",
            "pattern_id",
            "replicate",
            "estimator",
            "lambda_true",
            "lambda_nominal",
            "censored_rate",
            "lambda_hat",
            "k_hat",
            "valid",
            "note",
        ])?;
        for c in &self.cells {
            let scenario = &self.scenarios[c.scenario];
            for e in &c.estimates {
                wtr.write_record([
                    scenario.id.clone(),
                    c.pattern.to_string(),
                    c.design.to_string(),
                    e.estimator.to_string(),
                    c.truth.to_string(),
                    opt(scenario.nominal_intensity),
                    c.censored_rate.to_string(),
                    opt(e.lambda_hat),
                    opt(e.k_hat),
                    (e.valid as u8).to_string(),
                    e.note.clone(),
                ])?;
            }
        }
        wtr.flush().map_err(io_err(path))?;
        Ok(())
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub const SUMMARY_HEADER: [&str; 10] = [
    "scenario_id",
    "pattern_id",
    "estimator",
    "lambda_true",
    "r_bias",
    "r_rmse",
    "r_sd",
    "mean_censored_rate",
    "n_valid",
    "n_invalid",
];

fn write_summary_csv<'a>(path: &Path, rows: impl Iterator<Item = &'a MetricsSummary>) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut wtr = csv::Writer::from_writer(BufWriter::new(file));
    wtr.write_record(SUMMARY_HEADER)?;
    for m in rows {
        wtr.write_record([
            m.scenario_id.clone(),
            m.pattern_id.clone(),
            m.estimator.to_string(),
            m.lambda_true.to_string(),
            opt(m.r_bias),
            opt(m.r_rmse),
            opt(m.r_sd),
            m.mean_censored_rate.to_string(),
            m.n_valid.to_string(),
            m.n_invalid.to_string(),
        ])?;
    }
    wtr.flush().map_err(io_err(path))?;
    Ok(())
}

/// Run manifest: the full config plus what was produced. Contains no
/// timestamps or host details so reruns reproduce it byte for byte.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config: BenchmarkConfig,
    pub estimators: Vec<EstimatorId>,
    pub scenarios: Vec<Scenario>,
    pub cell_count: usize,
    pub outputs: Vec<String>,
}

/// Reads a benchmark config from JSON. A run manifest is accepted too; its
/// embedded config is returned.
pub fn read_config(path: &Path) -> Result<BenchmarkConfig> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let cfg_value = match value.get("config") {
        Some(inner) if value.get("tool").is_some() => inner.clone(),
        _ => value,
    };
    let mut cfg: BenchmarkConfig = serde_json::from_value(cfg_value)?;
    if let Some(base) = path.parent() {
        cfg.resolve_paths(base);
    }
    Ok(cfg)
}

/// Validates, prepares and runs `config` with at most `threads` workers.
pub fn run_benchmark(config: &BenchmarkConfig, threads: usize) -> Result<BenchmarkResults> {
    PreparedBenchmark::new(config.clone(), threads)?.run(threads)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metric_examples() {
        let l = 0.05;
        assert!(r_bias(&[l, l], l).unwrap().abs() < 1e-15);
        assert!(r_bias(&[0.9 * l, 1.1 * l], l).unwrap().abs() < 1e-15);
        assert!((r_bias(&[1.2 * l], l).unwrap() - 0.2).abs() < 1e-15);
        assert!((r_rmse(&[0.9 * l, 1.1 * l], l).unwrap() - 0.1).abs() < 1e-15);
        assert!((r_rmse(&[1.2 * l], l).unwrap() - 0.2).abs() < 1e-15);
        assert!((r_sd(&[0.9 * l, 1.1 * l], l).unwrap() - 0.1 * 2f64.sqrt()).abs() < 1e-15);
        assert!(r_sd(&[l, l, l], l).unwrap() < 1e-15);
        assert!(matches!(r_sd(&[l], l), Err(EvalError::TooFew { .. })));
        assert!(matches!(r_bias(&[], l), Err(EvalError::TooFew { .. })));
    }

    fn small_config() -> BenchmarkConfig {
        BenchmarkConfig {
            name: "t".into(),
            processes: vec![ProcessSpec::Csr { lambda: 0.05 }],
            window: StudyWindow::square(200.0).unwrap(),
            n: 20,
            q: 4,
            ell: vec![2],
            radius: vec![10.0],
            buffer: None,
            n_patterns: 2,
            n_designs: 3,
            estimators: vec!["dahdouh-koedam".into(), "pollard-censored".into()],
            master_seed: 5,
        }
    }

    #[test]
    fn not_applicable_estimators_count_as_invalid() {
        let res = run_benchmark(&small_config(), 2).unwrap();
        let rows = res.summaries(TruthBasis::Realized);
        let dk: Vec<_> = rows
            .iter()
            .filter(|m| m.estimator == EstimatorId::DahdouhKoedam)
            .collect();
        assert!(dk.iter().all(|m| m.n_valid == 0 && m.r_bias.is_none()));
        let pooled = dk.iter().find(|m| m.pattern_id == "all").unwrap();
        assert_eq!(pooled.n_invalid, 6);
    }

    #[test]
    fn bias_variance_identity_holds_per_row() {
        let res = run_benchmark(&small_config(), 1).unwrap();
        for m in res.summaries(TruthBasis::Realized) {
            if let (Some(b), Some(r), Some(s)) = (m.r_bias, m.r_rmse, m.r_sd) {
                let n = m.n_valid as f64;
                assert!((r * r - (b * b + s * s * (n - 1.0) / n)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let a = run_benchmark(&small_config(), 1).unwrap();
        let b = run_benchmark(&small_config(), 4).unwrap();
        assert_eq!(a.cells, b.cells);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut c = small_config();
        c.n_designs = 0;
        assert!(matches!(c.validate(), Err(EvalError::Config(_))));
        let mut c = small_config();
        c.estimators = vec!["bogus".into()];
        assert!(c.validate().is_err());
        let mut c = small_config();
        c.window = StudyWindow::square(15.0).unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn all_expands_to_censored_set() {
        let mut c = small_config();
        c.estimators = vec!["all".into(), "cottam-censored".into()];
        assert_eq!(c.estimator_ids().unwrap(), EstimatorId::CENSORED_SET.to_vec());
    }
}
