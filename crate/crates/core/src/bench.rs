//! Benchmark harness: a declarative experiment grid executed into per-run
//! and aggregated CSV tables.
//!
//! A plan is a small TOML file naming the algorithms, the networks (edge
//! list files and/or random sizes), the sample sizes and the repetition
//! count. Repetitions are the unit of parallelism; every cell derives its
//! seeds from the plan seed alone, so concurrent and sequential executions
//! produce identical rows and all algorithms see the same data for a given
//! (network, sample size, rep) cell.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ci::{fisher_z_tester, oracle_tester, CiError, CiTester, IndependenceQuery};
use crate::discovery::{discover, Algorithm, DiscoveryConfig, DiscoveryOutcome};
use crate::graph::{Dag, GraphError};
use crate::metrics::{aggregate, hit_rate, refine_attribution, skeleton_scores};
use crate::semgen::{random_dag, sample_linear_sem, GenError, SemSpec};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid plan: {0}")]
    Validation(String),
    #[error("plan parse error: {0}")]
    Toml(#[from] toml::de::Error),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error(transparent)]
    Ci(#[from] CiError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("thread pool: {0}")]
    Pool(String),
}

/// CI-test backend selector: exact d-separation on the true graph or the
/// Fisher-z test on sampled data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Oracle,
    Statistical,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Oracle => "oracle",
            Mode::Statistical => "statistical",
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "oracle" => Ok(Mode::Oracle),
            "statistical" => Ok(Mode::Statistical),
            other => Err(format!(
                "unknown mode {other:?} (expected oracle or statistical)"
            )),
        }
    }
}

fn default_alpha() -> f64 {
    0.05
}

fn default_k_thresh() -> usize {
    3
}

fn default_avg_children() -> f64 {
    1.5
}

fn default_mode() -> Mode {
    Mode::Statistical
}

/// Declarative experiment grid.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchPlan {
    pub algorithms: Vec<Algorithm>,
    /// Edge-list files with ground-truth structures.
    #[serde(default)]
    pub networks: Vec<PathBuf>,
    /// Sizes of randomly generated structures (one fresh DAG per rep).
    #[serde(default)]
    pub node_counts: Vec<usize>,
    #[serde(default)]
    pub sample_sizes: Vec<usize>,
    pub reps: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_k_thresh")]
    pub k_thresh: usize,
    /// Recursion stop size; defaults per network to max(⌊n/10⌋, 3).
    #[serde(default)]
    pub graph_thresh_size: Option<usize>,
    #[serde(default = "default_avg_children")]
    pub avg_children: f64,
    #[serde(default)]
    pub inclusive_refine_bound: bool,
}

impl BenchPlan {
    pub fn parse(text: &str) -> Result<Self, BenchError> {
        let plan: BenchPlan = toml::from_str(text)?;
        Ok(plan)
    }

    /// Structural validation; runs before any cell is executed.
    pub fn validate(&self) -> Result<(), BenchError> {
        if self.algorithms.is_empty() {
            return Err(BenchError::Validation("no algorithms listed".into()));
        }
        if self.networks.is_empty() && self.node_counts.is_empty() {
            return Err(BenchError::Validation(
                "no networks or node_counts listed".into(),
            ));
        }
        if self.reps < 1 {
            return Err(BenchError::Validation("reps must be at least 1".into()));
        }
        if self.mode == Mode::Statistical && self.sample_sizes.is_empty() {
            return Err(BenchError::Validation(
                "statistical mode requires sample_sizes".into(),
            ));
        }
        if !(0.0 < self.alpha && self.alpha < 1.0) {
            return Err(BenchError::Validation(format!(
                "alpha must be in (0, 1), got {}",
                self.alpha
            )));
        }
        if self.k_thresh < 1 {
            return Err(BenchError::Validation("k_thresh must be at least 1".into()));
        }
        if let Some(t) = self.graph_thresh_size {
            if t < 3 {
                return Err(BenchError::Validation(
                    "graph_thresh_size must be at least 3".into(),
                ));
            }
        }
        for path in &self.networks {
            if !path.is_file() {
                return Err(BenchError::Validation(format!(
                    "network file {} does not exist",
                    path.display()
                )));
            }
        }
        Ok(())
    }
}

pub fn load_plan(path: &Path) -> Result<BenchPlan, BenchError> {
    let text = fs::read_to_string(path)?;
    let mut plan = BenchPlan::parse(&text)?;
    // Network paths are relative to the plan file.
    if let Some(dir) = path.parent() {
        plan.networks = plan
            .networks
            .into_iter()
            .map(|p| if p.is_relative() { dir.join(p) } else { p })
            .collect();
    }
    plan.validate()?;
    Ok(plan)
}

/// One executed (algorithm, network, sample size, rep) cell.
#[derive(Debug, Clone, Serialize)]
pub struct RunRow {
    pub algorithm: String,
    pub network: String,
    pub n: usize,
    pub m: usize,
    pub rep: usize,
    pub seed: u64,
    pub edges: usize,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub total_ci_tests: u64,
    pub refining_ci_tests: u64,
    pub refined_edges: usize,
    pub tested_edges: usize,
    /// Eq. 3 hit rate over per-edge refining CI-test attribution.
    pub hit_rate: f64,
    pub total_seconds: f64,
    pub refining_seconds: f64,
    pub error: Option<String>,
}

/// One aggregated (algorithm, network, sample size) group. Half-widths are
/// absent when only a single successful rep exists.
#[derive(Debug, Clone, Serialize)]
pub struct AggRow {
    pub algorithm: String,
    pub network: String,
    pub m: usize,
    pub reps: usize,
    pub f1_mean: f64,
    pub f1_ci: Option<f64>,
    pub precision_mean: f64,
    pub precision_ci: Option<f64>,
    pub recall_mean: f64,
    pub recall_ci: Option<f64>,
    pub total_ci_tests_mean: f64,
    pub total_ci_tests_ci: Option<f64>,
    pub refining_ci_tests_mean: f64,
    pub refining_ci_tests_ci: Option<f64>,
    pub total_seconds_mean: f64,
    pub total_seconds_ci: Option<f64>,
    pub refining_seconds_mean: f64,
    pub refining_seconds_ci: Option<f64>,
}

#[derive(Debug)]
pub struct BenchSummary {
    pub rows: Vec<RunRow>,
    pub aggregates: Vec<AggRow>,
    pub per_run_csv: PathBuf,
    pub aggregate_csv: PathBuf,
}

/// Ground-truth source for one grid cell.
#[derive(Debug, Clone)]
enum Network {
    File { label: String, dag: Dag },
    Random { label: String, n: usize },
}

impl Network {
    fn label(&self) -> &str {
        match self {
            Network::File { label, .. } => label,
            Network::Random { label, .. } => label,
        }
    }
}

#[derive(Debug, Clone)]
struct Cell {
    algorithm: Algorithm,
    network: Network,
    net_idx: usize,
    m: usize,
    rep: usize,
}

/// splitmix64 step; decorrelates per-cell seeds derived from the plan seed.
fn mix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Seed shared by all algorithms for one (network, sample size, rep) cell.
fn cell_seed(base: u64, net_idx: usize, m: usize, rep: usize) -> u64 {
    mix(base ^ mix(net_idx as u64 + 1) ^ mix((m as u64) << 20) ^ mix(rep as u64 + 0x1000))
}

/// Runs the full grid, writing `runs.csv` and `aggregate.csv` into
/// `out_dir`. `jobs` caps the worker threads (`None` = rayon default).
/// Failures are captured per row; the sweep always completes.
pub fn run_bench(
    plan: &BenchPlan,
    jobs: Option<usize>,
    out_dir: &Path,
) -> Result<BenchSummary, BenchError> {
    plan.validate()?;
    fs::create_dir_all(out_dir)?;

    let mut networks: Vec<Network> = Vec::new();
    for path in &plan.networks {
        let text = fs::read_to_string(path)?;
        let dag = Dag::parse_edge_list(&text)?;
        let label = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        networks.push(Network::File { label, dag });
    }
    for &n in &plan.node_counts {
        networks.push(Network::Random {
            label: format!("random-{n}"),
            n,
        });
    }

    let sample_sizes: Vec<usize> = match plan.mode {
        Mode::Oracle => vec![0],
        Mode::Statistical => plan.sample_sizes.clone(),
    };

    let mut cells = Vec::new();
    for algorithm in &plan.algorithms {
        for (net_idx, network) in networks.iter().enumerate() {
            for &m in &sample_sizes {
                for rep in 0..plan.reps {
                    cells.push(Cell {
                        algorithm: *algorithm,
                        network: network.clone(),
                        net_idx,
                        m,
                        rep,
                    });
                }
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| BenchError::Pool(e.to_string()))?;
    let rows: Vec<RunRow> =
        pool.install(|| cells.par_iter().map(|cell| run_cell(plan, cell)).collect());

    let aggregates = aggregate_rows(&rows);

    let per_run_csv = out_dir.join("runs.csv");
    fs::write(&per_run_csv, per_run_table(&rows))?;
    let aggregate_csv = out_dir.join("aggregate.csv");
    fs::write(&aggregate_csv, aggregate_table(&aggregates))?;

    Ok(BenchSummary {
        rows,
        aggregates,
        per_run_csv,
        aggregate_csv,
    })
}

fn run_cell(plan: &BenchPlan, cell: &Cell) -> RunRow {
    let seed = cell_seed(plan.seed, cell.net_idx, cell.m, cell.rep);
    let mut row = RunRow {
        algorithm: cell.algorithm.to_string(),
        network: cell.network.label().to_string(),
        n: 0,
        m: cell.m,
        rep: cell.rep,
        seed,
        edges: 0,
        tp: 0,
        fp: 0,
        fn_: 0,
        precision: 0.0,
        recall: 0.0,
        f1: 0.0,
        total_ci_tests: 0,
        refining_ci_tests: 0,
        refined_edges: 0,
        tested_edges: 0,
        hit_rate: 0.0,
        total_seconds: 0.0,
        refining_seconds: 0.0,
        error: None,
    };
    let dag = match &cell.network {
        Network::File { dag, .. } => dag.clone(),
        Network::Random { n, .. } => random_dag(*n, plan.avg_children, mix(seed)),
    };
    row.n = dag.n();
    let config = DiscoveryConfig {
        graph_thresh_size: plan
            .graph_thresh_size
            .unwrap_or_else(|| (dag.n() / 10).max(3)),
        k_thresh: plan.k_thresh,
        inclusive_refine_bound: plan.inclusive_refine_bound,
    };
    let result: Result<CellResult, BenchError> = match plan.mode {
        Mode::Oracle => {
            let mut tester = oracle_tester(&dag);
            timed_discover(cell.algorithm, &mut tester, &config).map_err(BenchError::from)
        }
        Mode::Statistical => (|| {
            let spec = SemSpec::<f64>::random(dag.clone(), seed);
            let data = sample_linear_sem(&spec, cell.m, seed)?;
            let mut tester = fisher_z_tester(&data, plan.alpha);
            Ok(timed_discover(cell.algorithm, &mut tester, &config)?)
        })(),
    };
    match result {
        Ok((outcome, counters, total_seconds, per_edge)) => {
            let scores = skeleton_scores(&outcome.graph, &dag);
            let (f, t) = refine_attribution(&per_edge, &outcome.refined_edges);
            row.edges = outcome.graph.edge_count();
            row.tp = scores.tp;
            row.fp = scores.fp;
            row.fn_ = scores.fn_;
            row.precision = scores.precision;
            row.recall = scores.recall;
            row.f1 = scores.f1;
            row.total_ci_tests = counters.0;
            row.refining_ci_tests = counters.1;
            row.refined_edges = outcome.refined_edges.len();
            row.tested_edges = outcome.tested_edges.len();
            row.hit_rate = hit_rate(f, t);
            row.total_seconds = total_seconds;
            row.refining_seconds = outcome.refining_seconds;
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

type CellResult = (
    DiscoveryOutcome,
    (u64, u64),
    f64,
    BTreeMap<(usize, usize), u64>,
);

fn timed_discover<Q: IndependenceQuery>(
    algorithm: Algorithm,
    tester: &mut CiTester<Q>,
    config: &DiscoveryConfig,
) -> Result<CellResult, CiError> {
    let n = tester.n_vars();
    let vars: Vec<usize> = (0..n).collect();
    let start = Instant::now();
    let outcome = discover(algorithm, &vars, tester, config)?;
    let total_seconds = start.elapsed().as_secs_f64();
    Ok((
        outcome,
        (tester.total_tests(), tester.refining_tests()),
        total_seconds,
        tester.per_edge_refining().clone(),
    ))
}

fn aggregate_rows(rows: &[RunRow]) -> Vec<AggRow> {
    let mut groups: BTreeMap<(String, String, usize), Vec<&RunRow>> = BTreeMap::new();
    for row in rows.iter().filter(|r| r.error.is_none()) {
        groups
            .entry((row.algorithm.clone(), row.network.clone(), row.m))
            .or_default()
            .push(row);
    }
    groups
        .into_iter()
        .map(|((algorithm, network, m), group)| {
            let stat = |f: &dyn Fn(&RunRow) -> f64| -> (f64, Option<f64>) {
                let values: Vec<f64> = group.iter().map(|r| f(r)).collect();
                if values.len() < 2 {
                    (values.first().copied().unwrap_or(0.0), None)
                } else {
                    let a = aggregate(&values);
                    (a.mean, Some(a.half_width))
                }
            };
            let (f1_mean, f1_ci) = stat(&|r| r.f1);
            let (precision_mean, precision_ci) = stat(&|r| r.precision);
            let (recall_mean, recall_ci) = stat(&|r| r.recall);
            let (total_ci_tests_mean, total_ci_tests_ci) = stat(&|r| r.total_ci_tests as f64);
            let (refining_ci_tests_mean, refining_ci_tests_ci) =
                stat(&|r| r.refining_ci_tests as f64);
            let (total_seconds_mean, total_seconds_ci) = stat(&|r| r.total_seconds);
            let (refining_seconds_mean, refining_seconds_ci) = stat(&|r| r.refining_seconds);
            AggRow {
                algorithm,
                network,
                m,
                reps: group.len(),
                f1_mean,
                f1_ci,
                precision_mean,
                precision_ci,
                recall_mean,
                recall_ci,
                total_ci_tests_mean,
                total_ci_tests_ci,
                refining_ci_tests_mean,
                refining_ci_tests_ci,
                total_seconds_mean,
                total_seconds_ci,
                refining_seconds_mean,
                refining_seconds_ci,
            }
        })
        .collect()
}

fn per_run_table(rows: &[RunRow]) -> String {
    let mut out = String::from(
        "algorithm,network,n,m,rep,seed,edges,tp,fp,fn,precision,recall,f1,\
         total_ci_tests,refining_ci_tests,refined_edges,tested_edges,hit_rate,\
         total_seconds,refining_seconds,error\n",
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.algorithm,
            r.network,
            r.n,
            r.m,
            r.rep,
            r.seed,
            r.edges,
            r.tp,
            r.fp,
            r.fn_,
            r.precision,
            r.recall,
            r.f1,
            r.total_ci_tests,
            r.refining_ci_tests,
            r.refined_edges,
            r.tested_edges,
            r.hit_rate,
            r.total_seconds,
            r.refining_seconds,
            r.error.as_deref().unwrap_or("")
        );
    }
    out
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn aggregate_table(rows: &[AggRow]) -> String {
    let mut out = String::from(
        "algorithm,network,m,reps,f1_mean,f1_ci,precision_mean,precision_ci,\
         recall_mean,recall_ci,total_ci_tests_mean,total_ci_tests_ci,\
         refining_ci_tests_mean,refining_ci_tests_ci,total_seconds_mean,\
         total_seconds_ci,refining_seconds_mean,refining_seconds_ci\n",
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.algorithm,
            r.network,
            r.m,
            r.reps,
            r.f1_mean,
            opt(r.f1_ci),
            r.precision_mean,
            opt(r.precision_ci),
            r.recall_mean,
            opt(r.recall_ci),
            r.total_ci_tests_mean,
            opt(r.total_ci_tests_ci),
            r.refining_ci_tests_mean,
            opt(r.refining_ci_tests_ci),
            r.total_seconds_mean,
            opt(r.total_seconds_ci),
            r.refining_seconds_mean,
            opt(r.refining_seconds_ci)
        );
    }
    out
}
