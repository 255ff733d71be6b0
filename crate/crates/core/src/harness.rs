//! Experiment orchestration: acquisition functions × estimators × pools.
//!
//! Every (pool, function, run) cell draws from its own random stream,
//! seeded by `mix_seed(master_seed, run, stream_id(function label))`, so
//! results do not depend on execution order or on which other functions are
//! configured. Cells run on a thread pool and are reduced in a fixed order.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::acquisition::{self, AcqConfig, AcquisitionStep, AcquisitionTrace, Candidate, FunctionKind};
use crate::adaptation::Strategy;
use crate::cluster_acq::{self, ClusterAssignment};
use crate::data_io::{self, LoadOptions, SampleRecord};
use crate::error::{Error, Result};
use crate::estimators::{self, EstimatorKind, LossKind};
use crate::metrics::{self, ErrorCurve};
use crate::probdist::{shannon_entropy, ProbVector};
use crate::seed;

pub const MIN_BUDGET: f64 = 0.05;
pub const MAX_BUDGET: f64 = 0.50;
const GRID_TOL: f64 = 1e-12;

/// A function entry: either a bare name or a full configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FunctionSpec {
    Name(String),
    Config(AcqConfig),
}

impl FunctionSpec {
    pub fn to_config(&self) -> Result<AcqConfig> {
        let cfg = match self {
            FunctionSpec::Name(n) => AcqConfig::new(n.parse()?),
            FunctionSpec::Config(c) => c.clone(),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn default_estimators() -> Vec<EstimatorKind> {
    vec![EstimatorKind::Lure]
}
fn default_runs() -> usize {
    10
}
fn default_seed() -> u64 {
    seed::DEFAULT_MASTER_SEED
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub pool_paths: Vec<PathBuf>,
    pub functions: Vec<FunctionSpec>,
    /// Probing strategy the pools were adapted with; recorded in reports.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<Strategy>,
    #[serde(default = "default_estimators")]
    pub estimators: Vec<EstimatorKind>,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default = "default_seed")]
    pub master_seed: u64,
    /// Budget fractions; the 5%..50% grid in 1% steps when unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budgets: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub loss_kind: LossKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
    #[serde(default)]
    pub emit_traces: bool,
    #[serde(default)]
    pub multi_sentence_only: bool,
    /// Execute cells in reverse order. Outputs must not change.
    #[serde(default)]
    pub reverse_cell_order: bool,
}

impl ExperimentConfig {
    pub fn new(pool_paths: Vec<PathBuf>, functions: Vec<AcqConfig>) -> Self {
        ExperimentConfig {
            pool_paths,
            functions: functions.into_iter().map(FunctionSpec::Config).collect(),
            strategy: None,
            estimators: default_estimators(),
            runs: default_runs(),
            master_seed: default_seed(),
            budgets: None,
            output_dir: None,
            loss_kind: LossKind::default(),
            jobs: None,
            emit_traces: false,
            multi_sentence_only: false,
            reverse_cell_order: false,
        }
    }

    /// Reads a JSON config. Relative pool and output paths are resolved
    /// against the config file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| Error::BadConfig(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in &mut cfg.pool_paths {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if let Some(o) = &mut cfg.output_dir {
            if o.is_relative() {
                *o = base.join(&*o);
            }
        }
        Ok(cfg)
    }

    pub fn budget_grid(&self) -> Result<Vec<f64>> {
        let grid = self.budgets.clone().unwrap_or_else(metrics::default_budget_grid);
        validate_grid(&grid)?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::BadConfig("runs must be >= 1".into()));
        }
        if self.functions.is_empty() {
            return Err(Error::BadConfig("no acquisition functions configured".into()));
        }
        if self.estimators.is_empty() {
            return Err(Error::BadConfig("no estimators configured".into()));
        }
        if self.jobs == Some(0) {
            return Err(Error::BadConfig("jobs must be >= 1".into()));
        }
        self.budget_grid()?;
        for f in &self.functions {
            f.to_config()?;
        }
        Ok(())
    }
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 {
        return Err(Error::BadConfig(format!("budget grid needs >= 2 points, got {}", grid.len())));
    }
    for &b in grid {
        if !(MIN_BUDGET - GRID_TOL..=MAX_BUDGET + GRID_TOL).contains(&b) {
            return Err(Error::BadConfig(format!(
                "budget {b} outside [{MIN_BUDGET}, {MAX_BUDGET}]"
            )));
        }
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::BadConfig("budget grid must be strictly increasing".into()));
    }
    Ok(())
}

/// A loaded pool and the name used for it in reports.
#[derive(Debug, Clone)]
pub struct NamedPool {
    pub name: String,
    pub records: Vec<SampleRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorResult {
    pub estimator: EstimatorKind,
    pub auc: f64,
    /// Percent AUC reduction relative to Random with the same estimator.
    pub gain_vs_random_pct: Option<f64>,
    pub mean_variance: f64,
    pub curve: ErrorCurve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub pool: String,
    pub function: String,
    pub kind: FunctionKind,
    pub n: usize,
    pub runs: usize,
    pub r_true: Option<f64>,
    pub results: Vec<EstimatorResult>,
    pub error: Option<String>,
    #[serde(skip)]
    pub traces: Vec<AcquisitionTrace>,
}

impl CellReport {
    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }

    pub fn result(&self, estimator: EstimatorKind) -> Option<&EstimatorResult> {
        self.results.iter().find(|r| r.estimator == estimator)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeoMeanRow {
    pub function: String,
    pub estimator: EstimatorKind,
    pub pools: usize,
    pub auc: f64,
    pub gain_vs_random_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub master_seed: u64,
    pub runs: usize,
    pub loss_kind: LossKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<Strategy>,
    pub budgets: Vec<f64>,
    pub cells: Vec<CellReport>,
    pub geo_mean: Vec<GeoMeanRow>,
}

impl RunReport {
    pub fn failed_cells(&self) -> usize {
        self.cells.iter().filter(|c| !c.is_ok()).count()
    }

    pub fn cell(&self, pool: &str, function: &str) -> Option<&CellReport> {
        self.cells.iter().find(|c| c.pool == pool && c.function == function)
    }
}

/// Unique labels: the function name, suffixed `_2`, `_3`, ... on repeats.
fn function_labels(configs: &[AcqConfig]) -> Vec<String> {
    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    configs
        .iter()
        .map(|c| {
            let n = seen.entry(c.kind.name()).or_insert(0);
            *n += 1;
            if *n == 1 {
                c.kind.name().to_string()
            } else {
                format!("{}_{}", c.kind.name(), n)
            }
        })
        .collect()
}

/// Loads pools and runs the experiment.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunReport> {
    config.validate()?;
    let options = LoadOptions { multi_sentence_only: config.multi_sentence_only };
    let mut names = BTreeMap::new();
    let mut pools = Vec::new();
    let mut load_errors = BTreeMap::new();
    for path in &config.pool_paths {
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        if names.insert(name.clone(), ()).is_some() {
            return Err(Error::BadConfig(format!("two pools are named {name:?}")));
        }
        match data_io::load_pool_with(path, options) {
            Ok(records) => pools.push(NamedPool { name, records }),
            Err(e) => {
                log::error!("{}: {e}", path.display());
                load_errors.insert(name.clone(), e.to_string());
                pools.push(NamedPool { name, records: Vec::new() });
            }
        }
    }
    let mut report = run_on_pools(&pools, config)?;
    for cell in &mut report.cells {
        if let Some(e) = load_errors.get(&cell.pool) {
            cell.error = Some(format!("loading pool: {e}"));
        }
    }
    Ok(report)
}

/// Per-pool quantities shared by every function.
struct PoolData<'a> {
    name: &'a str,
    main: Vec<ProbVector>,
    surrogate: Option<Vec<ProbVector>>,
    missing_surrogate: Option<String>,
    embeddings: Option<Vec<Vec<f64>>>,
    missing_embedding: Option<String>,
    losses: Vec<f64>,
    r_true: f64,
}

fn prepare<'a>(pool: &'a NamedPool, loss: LossKind) -> Result<PoolData<'a>> {
    if pool.records.is_empty() {
        return Err(Error::EmptyPool);
    }
    let main: Vec<ProbVector> = pool.records.iter().map(SampleRecord::main_dist).collect::<Result<_>>()?;
    let losses: Vec<f64> = main
        .iter()
        .zip(&pool.records)
        .map(|(p, r)| loss.loss(p, r.gold_index))
        .collect();
    let r_true = estimators::empirical_risk(&losses)?;
    let missing_surrogate = pool
        .records
        .iter()
        .find(|r| r.surrogate_probs.is_none())
        .map(|r| r.id.clone());
    let surrogate = match missing_surrogate {
        Some(_) => None,
        None => Some(
            pool.records
                .iter()
                .map(|r| r.surrogate_dist().expect("checked above"))
                .collect::<Result<Vec<_>>>()?,
        ),
    };
    let missing_embedding = pool.records.iter().find(|r| r.embedding.is_none()).map(|r| r.id.clone());
    let embeddings = match missing_embedding {
        Some(_) => None,
        None => Some(pool.records.iter().map(|r| r.embedding.clone().unwrap()).collect()),
    };
    Ok(PoolData {
        name: &pool.name,
        main,
        surrogate,
        missing_surrogate,
        embeddings,
        missing_embedding,
        losses,
        r_true,
    })
}

/// What a (pool, function) cell needs to draw one run.
enum Sampler {
    Flat { pmf: Vec<f64>, utilities: Vec<f64> },
    Cluster { assignment: ClusterAssignment, entropies: Vec<f64> },
}

fn build_sampler(data: &PoolData<'_>, config: &AcqConfig, master_seed: u64) -> Result<Sampler> {
    let n = data.main.len();
    if config.kind == FunctionKind::LmCluster {
        let embeddings = data
            .embeddings
            .as_ref()
            .ok_or_else(|| {
                Error::MissingEmbedding(format!("sample {}", data.missing_embedding.as_deref().unwrap_or("?")))
            })?;
        let k = config.cluster_k.unwrap_or_else(|| cluster_acq::default_k(n));
        let kmeans_seed = seed::mix_seed(master_seed, 0, seed::stream_id("kmeans"));
        let assignment = cluster_acq::balanced_kmeans(embeddings, k, kmeans_seed, cluster_acq::DEFAULT_MAX_ITERS)?;
        let entropies = data.main.iter().map(shannon_entropy).collect();
        return Ok(Sampler::Cluster { assignment, entropies });
    }
    if config.kind.needs_surrogate() && data.surrogate.is_none() {
        return Err(Error::MissingSurrogate(format!(
            "{} needs them, sample {} has none",
            config.kind,
            data.missing_surrogate.as_deref().unwrap_or("?")
        )));
    }
    let candidates: Vec<Candidate<'_>> = (0..n)
        .map(|i| Candidate {
            main: &data.main[i],
            surrogate: data.surrogate.as_ref().map(|s| &s[i]),
        })
        .collect();
    let utilities = acquisition::score_pool(&candidates, config)?;
    let pmf = acquisition::utilities_to_pmf(&utilities, config)?;
    Ok(Sampler::Flat { pmf, utilities })
}

fn draw_run(sampler: &Sampler, config: &AcqConfig, budget: usize, run_seed: u64) -> Result<AcquisitionTrace> {
    match sampler {
        Sampler::Flat { pmf, utilities } => {
            let mut rng = seed::rng_from_seed(run_seed);
            let steps = acquisition::draw_steps(pmf, utilities, budget, &mut rng)?;
            Ok(AcquisitionTrace {
                kind: Some(config.kind),
                seed: run_seed,
                pool_size: pmf.len(),
                steps,
            })
        }
        Sampler::Cluster { assignment, entropies } => {
            Ok(cluster_acq::acquire_clustered(assignment, entropies, config, budget, run_seed)?.trace)
        }
    }
}

/// Risk estimates at every budget count, one row per estimator.
fn run_estimates(
    steps: &[AcquisitionStep],
    losses: &[f64],
    counts: &[usize],
    estimators: &[EstimatorKind],
) -> Result<Vec<Vec<f64>>> {
    estimators
        .iter()
        .map(|&kind| {
            counts
                .iter()
                .map(|&m| estimators::estimate_at(kind, steps, losses, m).map(|e| e.value))
                .collect()
        })
        .collect()
}

struct CellSetup<'a> {
    data: &'a PoolData<'a>,
    label: &'a str,
    config: &'a AcqConfig,
    sampler: Sampler,
}

/// Runs the configured experiment on already-loaded pools.
pub fn run_on_pools(pools: &[NamedPool], config: &ExperimentConfig) -> Result<RunReport> {
    config.validate()?;
    let budgets = config.budget_grid()?;
    let configs: Vec<AcqConfig> = config.functions.iter().map(FunctionSpec::to_config).collect::<Result<_>>()?;
    let labels = function_labels(&configs);
    let thread_pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::BadConfig(format!("thread pool: {e}")))?;
    thread_pool.install(|| run_cells(pools, config, &budgets, &configs, &labels))
}

fn run_cells(
    pools: &[NamedPool],
    config: &ExperimentConfig,
    budgets: &[f64],
    configs: &[AcqConfig],
    labels: &[String],
) -> Result<RunReport> {
    let prepared: Vec<std::result::Result<PoolData<'_>, String>> = pools
        .iter()
        .map(|p| prepare(p, config.loss_kind).map_err(|e| e.to_string()))
        .collect();

    // Cell setups, in canonical (pool, function) order.
    let mut setups: Vec<std::result::Result<CellSetup<'_>, CellReport>> = Vec::new();
    for (pool, data) in pools.iter().zip(&prepared) {
        for (cfg, label) in configs.iter().zip(labels) {
            let failed = |msg: String, n: usize| CellReport {
                pool: pool.name.clone(),
                function: label.clone(),
                kind: cfg.kind,
                n,
                runs: config.runs,
                r_true: None,
                results: Vec::new(),
                error: Some(msg),
                traces: Vec::new(),
            };
            setups.push(match data {
                Err(e) => Err(failed(e.clone(), pool.records.len())),
                Ok(d) => match build_sampler(d, cfg, config.master_seed) {
                    Ok(sampler) => Ok(CellSetup { data: d, label, config: cfg, sampler }),
                    Err(e) => Err(failed(e.to_string(), d.main.len())),
                },
            });
        }
    }

    // Work items: one per (cell, run).
    let mut items: Vec<(usize, usize)> = setups
        .iter()
        .enumerate()
        .filter(|(_, s)| s.is_ok())
        .flat_map(|(c, _)| (0..config.runs).map(move |r| (c, r)))
        .collect();
    if config.reverse_cell_order {
        items.reverse();
    }
    let outputs: Vec<(usize, RunOutput)> = items
        .par_iter()
        .map(|&(c, r)| {
            let Ok(setup) = &setups[c] else { unreachable!("failed setups are filtered") };
            let n = setup.data.main.len();
            let counts: Vec<usize> = budgets.iter().map(|&b| metrics::budget_count(b, n)).collect();
            let max_m = *counts.last().unwrap();
            let run_seed = seed::mix_seed(config.master_seed, r as u64, seed::stream_id(setup.label));
            let out = draw_run(&setup.sampler, setup.config, max_m, run_seed).and_then(|trace| {
                let est = run_estimates(&trace.steps, &setup.data.losses, &counts, &config.estimators)?;
                Ok((trace, est))
            });
            (c, (r, out))
        })
        .collect();

    // Fixed-order reduce.
    let mut by_cell: BTreeMap<usize, Vec<RunOutput>> = BTreeMap::new();
    for (c, run) in outputs {
        by_cell.entry(c).or_default().push(run);
    }
    let mut cells = Vec::with_capacity(setups.len());
    for (c, setup) in setups.into_iter().enumerate() {
        let setup = match setup {
            Err(report) => {
                cells.push(report);
                continue;
            }
            Ok(s) => s,
        };
        let mut runs = by_cell.remove(&c).unwrap_or_default();
        runs.sort_by_key(|(r, _)| *r);
        cells.push(reduce_cell(&setup, runs, budgets, config));
    }

    attach_gains(&mut cells, &config.estimators);
    let geo_mean = if pools.len() > 1 { geo_mean_rows(&cells, labels, &config.estimators) } else { Vec::new() };
    for cell in cells.iter().filter(|c| !c.is_ok()) {
        log::error!("cell {}/{} failed: {}", cell.pool, cell.function, cell.error.as_deref().unwrap_or(""));
    }
    Ok(RunReport {
        master_seed: config.master_seed,
        runs: config.runs,
        loss_kind: config.loss_kind,
        strategy: config.strategy,
        budgets: budgets.to_vec(),
        cells,
        geo_mean,
    })
}

type RunOutput = (usize, Result<(AcquisitionTrace, Vec<Vec<f64>>)>);

fn reduce_cell(setup: &CellSetup<'_>, runs: Vec<RunOutput>, budgets: &[f64], config: &ExperimentConfig) -> CellReport {
    let mut report = CellReport {
        pool: setup.data.name.to_string(),
        function: setup.label.to_string(),
        kind: setup.config.kind,
        n: setup.data.main.len(),
        runs: config.runs,
        r_true: Some(setup.data.r_true),
        results: Vec::new(),
        error: None,
        traces: Vec::new(),
    };
    // estimates[estimator][run][budget]
    let mut estimates: Vec<Vec<Vec<f64>>> = vec![Vec::with_capacity(runs.len()); config.estimators.len()];
    for (r, out) in runs {
        match out {
            Ok((trace, est)) => {
                for (slot, row) in estimates.iter_mut().zip(est) {
                    slot.push(row);
                }
                if config.emit_traces {
                    report.traces.push(trace);
                }
            }
            Err(e) => {
                report.error = Some(format!("run {r}: {e}"));
                return report;
            }
        }
    }
    for (&kind, est) in config.estimators.iter().zip(&estimates) {
        let result = metrics::estimation_error_curve(budgets, est, setup.data.r_true).and_then(|curve| {
            let auc = metrics::auc_trapezoid(&curve)?;
            let mean_variance = curve.variance.iter().sum::<f64>() / curve.variance.len() as f64;
            Ok(EstimatorResult { estimator: kind, auc, gain_vs_random_pct: None, mean_variance, curve })
        });
        match result {
            Ok(r) => report.results.push(r),
            Err(e) => {
                report.error = Some(format!("{kind}: {e}"));
                report.results.clear();
                return report;
            }
        }
    }
    report
}

fn gain(baseline: f64, auc: f64) -> Option<f64> {
    metrics::performance_gain(baseline, auc).ok()
}

fn attach_gains(cells: &mut [CellReport], estimators: &[EstimatorKind]) {
    let mut baselines: BTreeMap<(String, EstimatorKind), f64> = BTreeMap::new();
    for c in cells.iter().filter(|c| c.is_ok() && c.kind == FunctionKind::Random) {
        for r in &c.results {
            baselines.entry((c.pool.clone(), r.estimator)).or_insert(r.auc);
        }
    }
    for c in cells.iter_mut().filter(|c| c.is_ok()) {
        for &kind in estimators {
            let Some(&base) = baselines.get(&(c.pool.clone(), kind)) else { continue };
            if let Some(r) = c.results.iter_mut().find(|r| r.estimator == kind) {
                r.gain_vs_random_pct = gain(base, r.auc);
            }
        }
    }
}

/// Geometric mean of AUC across pools, for functions that succeeded on every pool.
fn geo_mean_rows(cells: &[CellReport], labels: &[String], estimators: &[EstimatorKind]) -> Vec<GeoMeanRow> {
    let mut rows = Vec::new();
    for &kind in estimators {
        let mut baseline = None;
        let mut pending = Vec::new();
        for label in labels {
            let of_fn: Vec<&CellReport> = cells.iter().filter(|c| &c.function == label).collect();
            if of_fn.iter().any(|c| !c.is_ok()) {
                continue;
            }
            let aucs: Vec<f64> = of_fn.iter().filter_map(|c| c.result(kind)).map(|r| r.auc).collect();
            let Ok(auc) = metrics::geometric_mean(&aucs) else { continue };
            if baseline.is_none() && of_fn.first().is_some_and(|c| c.kind == FunctionKind::Random) {
                baseline = Some(auc);
            }
            pending.push(GeoMeanRow {
                function: label.clone(),
                estimator: kind,
                pools: aucs.len(),
                auc,
                gain_vs_random_pct: None,
            });
        }
        for mut row in pending {
            row.gain_vs_random_pct = baseline.and_then(|b| gain(b, row.auc));
            rows.push(row);
        }
    }
    rows
}

/// Deterministic float text: shortest round-trip representation.
fn num(x: f64) -> String {
    format!("{x}")
}

fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub const CSV_HEADER: &str = "pool,function,estimator,n,runs,r_true,auc,gain_vs_random_pct,mean_variance,status";

pub fn report_csv(report: &RunReport) -> String {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for c in &report.cells {
        match &c.error {
            Some(e) => {
                let _ = writeln!(
                    out,
                    "{},{},,{},{},{},,,,{}",
                    csv_field(&c.pool),
                    csv_field(&c.function),
                    c.n,
                    c.runs,
                    opt_num(c.r_true),
                    csv_field(&format!("failed: {e}"))
                );
            }
            None => {
                for r in &c.results {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{},{},{},{},ok",
                        csv_field(&c.pool),
                        csv_field(&c.function),
                        r.estimator,
                        c.n,
                        c.runs,
                        opt_num(c.r_true),
                        num(r.auc),
                        opt_num(r.gain_vs_random_pct),
                        num(r.mean_variance)
                    );
                }
            }
        }
    }
    for g in &report.geo_mean {
        let _ = writeln!(
            out,
            "geo_mean,{},{},,{},,{},{},,ok",
            csv_field(&g.function),
            g.estimator,
            report.runs,
            num(g.auc),
            opt_num(g.gain_vs_random_pct)
        );
    }
    out
}

pub fn report_json(report: &RunReport) -> Result<String> {
    let mut s = serde_json::to_string_pretty(report)?;
    s.push('\n');
    Ok(s)
}

fn file_stem_safe(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') { c } else { '_' })
        .collect()
}

pub fn curve_tsv(curve: &ErrorCurve) -> String {
    let mut out = String::from("budget\tmse\n");
    for (b, e) in curve.budgets.iter().zip(&curve.mean_sq_error) {
        let _ = writeln!(out, "{}\t{}", num(*b), num(*e));
    }
    out
}

#[derive(Serialize)]
struct TraceLine<'a> {
    run: usize,
    seed: u64,
    #[serde(flatten)]
    step: &'a AcquisitionStep,
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes `report.csv`, `report.json`, `curves/` and, when traces were
/// kept, `traces/`.
pub fn write_outputs(report: &RunReport, dir: &Path) -> Result<()> {
    let curves = dir.join("curves");
    fs::create_dir_all(&curves).map_err(|e| Error::io(&curves, e))?;
    write_file(&dir.join("report.csv"), &report_csv(report))?;
    write_file(&dir.join("report.json"), &report_json(report)?)?;
    for c in report.cells.iter().filter(|c| c.is_ok()) {
        let base = format!("{}_{}", file_stem_safe(&c.pool), file_stem_safe(&c.function));
        for (i, r) in c.results.iter().enumerate() {
            let name = if i == 0 {
                format!("{base}.tsv")
            } else {
                format!("{base}_{}.tsv", r.estimator)
            };
            write_file(&curves.join(name), &curve_tsv(&r.curve))?;
        }
        if !c.traces.is_empty() {
            let traces = dir.join("traces");
            fs::create_dir_all(&traces).map_err(|e| Error::io(&traces, e))?;
            let mut text = String::new();
            for (run, t) in c.traces.iter().enumerate() {
                for step in &t.steps {
                    text.push_str(&serde_json::to_string(&TraceLine { run, seed: t.seed, step })?);
                    text.push('\n');
                }
            }
            write_file(&traces.join(format!("{base}.jsonl")), &text)?;
        }
    }
    Ok(())
}
