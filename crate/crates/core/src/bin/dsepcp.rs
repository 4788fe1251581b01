//! Command-line front end: generate structures and data, run discovery,
//! execute benchmark sweeps.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use dsepcp::bench::{load_plan, run_bench, Mode};
use dsepcp::{
    discover, fisher_z_tester, oracle_tester, random_dag, sample_linear_sem, Algorithm, CiTester,
    Dag, Dataset64, DiscoveryConfig, DiscoveryOutcome, IndependenceQuery, RunReport, SemSpec64,
};

#[derive(Parser)]
#[command(
    name = "dsepcp",
    about = "Recursive causal skeleton discovery: generate, sample, discover, benchmark",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random sparse DAG as an edge list.
    Gen(GenArgs),
    /// Sample a linear SEM dataset from a DAG file.
    Sample(SampleArgs),
    /// Run skeleton discovery and emit a run report plus the skeleton.
    Discover(DiscoverArgs),
    /// Execute a benchmark plan into per-run and aggregate CSV tables.
    Bench(BenchArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Number of variables.
    #[arg(long)]
    n: usize,
    /// Expected children per newly generated node.
    #[arg(long, default_value_t = 1.5)]
    avg_children: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output edge-list file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    /// Ground-truth DAG edge-list file.
    #[arg(long)]
    dag: PathBuf,
    /// Number of samples.
    #[arg(long)]
    m: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DiscoverArgs {
    #[arg(long, value_parser = clap::value_parser!(Algorithm))]
    algo: Algorithm,
    /// oracle (exact d-separation on --dag) or statistical (Fisher-z on --data).
    #[arg(long, value_parser = clap::value_parser!(Mode))]
    mode: Mode,
    /// Ground-truth DAG edge list (required in oracle mode).
    #[arg(long)]
    dag: Option<PathBuf>,
    /// Sample dataset CSV (required in statistical mode).
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 3)]
    k_thresh: usize,
    /// Recursion stop size; defaults to max(n/10, 3).
    #[arg(long)]
    thresh_size: Option<usize>,
    /// Refinement |Z| upper bound becomes inclusive (≤ k_thresh).
    #[arg(long, default_value_t = false)]
    inclusive_bound: bool,
    /// Recorded in the run report for traceability.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for report.json and skeleton.edges; the report is
    /// always printed to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Benchmark plan (TOML).
    #[arg(long)]
    plan: PathBuf,
    /// Worker-thread cap for parallel reps.
    #[arg(long)]
    jobs: Option<usize>,
    /// Output directory for runs.csv and aggregate.csv.
    #[arg(long, default_value = "bench-out")]
    out: PathBuf,
}

struct AppError {
    category: &'static str,
    message: String,
}

impl AppError {
    fn usage(message: impl Into<String>) -> Self {
        AppError {
            category: "usage",
            message: message.into(),
        }
    }
}

macro_rules! from_error {
    ($ty:ty, $category:expr) => {
        impl From<$ty> for AppError {
            fn from(e: $ty) -> Self {
                AppError {
                    category: $category,
                    message: e.to_string(),
                }
            }
        }
    };
}

from_error!(dsepcp::GraphError, "graph");
from_error!(dsepcp::GenError, "gen");
from_error!(dsepcp::CiError, "ci");
from_error!(dsepcp::bench::BenchError, "bench");
from_error!(std::io::Error, "io");
from_error!(serde_json::Error, "json");

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}: {}", e.category, e.message);
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<(), AppError> {
    match cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Sample(args) => cmd_sample(args),
        Command::Discover(args) => cmd_discover(args),
        Command::Bench(args) => cmd_bench(args),
    }
}

fn write_or_print(out: Option<&PathBuf>, content: &str) -> Result<(), AppError> {
    match out {
        Some(path) => {
            if let Some(dir) = path.parent() {
                if !dir.as_os_str().is_empty() {
                    fs::create_dir_all(dir)?;
                }
            }
            fs::write(path, content)?;
        }
        None => print!("{content}"),
    }
    Ok(())
}

fn cmd_gen(args: GenArgs) -> Result<(), AppError> {
    if args.n == 0 {
        return Err(AppError::usage("--n must be at least 1"));
    }
    let dag = random_dag(args.n, args.avg_children, args.seed);
    write_or_print(args.out.as_ref(), &dag.to_edge_list())
}

fn cmd_sample(args: SampleArgs) -> Result<(), AppError> {
    let text = fs::read_to_string(&args.dag)?;
    let dag = Dag::parse_edge_list(&text)?;
    let spec = SemSpec64::random(dag, args.seed);
    let data = sample_linear_sem(&spec, args.m, args.seed)?;
    let mut csv = Vec::new();
    data.write_csv(&mut csv)?;
    let csv = String::from_utf8(csv).expect("CSV output is UTF-8");
    write_or_print(args.out.as_ref(), &csv)
}

fn cmd_discover(args: DiscoverArgs) -> Result<(), AppError> {
    let (names, outcome, report) = match args.mode {
        Mode::Oracle => {
            let dag_path = args
                .dag
                .as_ref()
                .ok_or_else(|| AppError::usage("oracle mode requires --dag"))?;
            let text = fs::read_to_string(dag_path)?;
            let dag = Dag::parse_edge_list(&text)?;
            let mut tester = oracle_tester(&dag);
            let (outcome, report) = discover_with(&args, &mut tester, 0)?;
            (dag.names().to_vec(), outcome, report)
        }
        Mode::Statistical => {
            let data_path = args
                .data
                .as_ref()
                .ok_or_else(|| AppError::usage("statistical mode requires --data"))?;
            let file = fs::File::open(data_path)?;
            let data = Dataset64::read_csv(std::io::BufReader::new(file))?;
            let m = data.n_samples();
            let mut tester = fisher_z_tester(&data, args.alpha);
            let (outcome, report) = discover_with(&args, &mut tester, m)?;
            (data.names().to_vec(), outcome, report)
        }
    };
    let json = serde_json::to_string_pretty(&report)?;
    println!("{json}");
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("report.json"), format!("{json}\n"))?;
        let mut edges = String::new();
        for (a, b) in outcome.graph.edges() {
            edges.push_str(&format!("{} {}\n", names[a], names[b]));
        }
        fs::write(dir.join("skeleton.edges"), edges)?;
    }
    Ok(())
}

fn discover_with<Q: IndependenceQuery>(
    args: &DiscoverArgs,
    tester: &mut CiTester<Q>,
    m: usize,
) -> Result<(DiscoveryOutcome, RunReport), AppError> {
    let n = tester.n_vars();
    let config = DiscoveryConfig {
        graph_thresh_size: args.thresh_size.unwrap_or((n / 10).max(3)),
        k_thresh: args.k_thresh,
        inclusive_refine_bound: args.inclusive_bound,
    };
    let vars: Vec<usize> = (0..n).collect();
    let start = Instant::now();
    let outcome = discover(args.algo, &vars, tester, &config)?;
    let total_seconds = start.elapsed().as_secs_f64();
    let report = RunReport {
        algorithm: args.algo.to_string(),
        seed: args.seed,
        n,
        m,
        edges: outcome.graph.edge_count(),
        total_ci_tests: tester.total_tests(),
        refining_ci_tests: tester.refining_tests(),
        refined_edges: outcome.refined_edges.len(),
        total_seconds,
        refining_seconds: outcome.refining_seconds,
    };
    Ok((outcome, report))
}

fn cmd_bench(args: BenchArgs) -> Result<(), AppError> {
    let plan = load_plan(&args.plan)?;
    let summary = run_bench(&plan, args.jobs, &args.out)?;
    let failures = summary.rows.iter().filter(|r| r.error.is_some()).count();
    println!(
        "wrote {} runs ({} failed) to {} and {} aggregate rows to {}",
        summary.rows.len(),
        failures,
        summary.per_run_csv.display(),
        summary.aggregates.len(),
        summary.aggregate_csv.display()
    );
    Ok(())
}
