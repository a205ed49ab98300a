use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use epiplan_core::bench::{self, Family};
use epiplan_core::dsl;
use epiplan_core::planning::Problem;
use epiplan_core::search::{solve, Outcome, SearchConfig, SearchStats};

const OK: u8 = 0;
const NEGATIVE: u8 = 1;
const USAGE: u8 = 2;
const LIMIT: u8 = 3;

#[derive(Parser)]
#[command(name = "epiplan")]
#[command(about = "Epistemic planning with agent perspective functions")]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SearchKind {
    Bfs,
    Novelty,
}

#[derive(Clone, Copy, ValueEnum)]
enum StatsFormat {
    Json,
    Csv,
}

#[derive(clap::Args)]
struct SearchArgs {
    /// Search algorithm
    #[arg(long, value_enum, default_value = "bfs")]
    search: SearchKind,

    /// Novelty bound for `--search novelty`
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    width: u8,

    /// Stop after generating this many nodes
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    max_nodes: Option<u64>,

    /// Stop after this many seconds
    #[arg(long)]
    max_seconds: Option<f64>,
}

impl SearchArgs {
    fn config(&self) -> Result<SearchConfig, String> {
        let mut cfg = match self.search {
            SearchKind::Bfs => SearchConfig::bfs(),
            SearchKind::Novelty => SearchConfig::novelty(self.width as usize),
        };
        cfg.max_nodes = self.max_nodes;
        if let Some(s) = self.max_seconds {
            if s.is_nan() || s <= 0.0 {
                return Err("--max-seconds must be positive".into());
            }
            cfg.max_seconds = Some(s);
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Search for a plan; actions go to stdout, statistics to stderr
    Plan {
        file: PathBuf,
        #[command(flatten)]
        search: SearchArgs,
        /// Statistics format
        #[arg(long, value_enum, default_value = "json")]
        stats: StatsFormat,
    },
    /// Evaluate a formula in the initial state
    Eval {
        file: PathBuf,
        #[arg(long)]
        query: String,
    },
    /// Replay a plan file and report whether it achieves the goal
    Check { file: PathBuf, plan: PathBuf },
    /// Solve a benchmark family, writing <family>.csv and the problem files
    Bench {
        family: String,
        outdir: PathBuf,
        #[command(flatten)]
        search: SearchArgs,
    },
}

fn load(path: &Path) -> Result<Problem, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    dsl::parse_problem(&path.display().to_string(), &text).map_err(|d| dsl::render(&d).trim_end().to_string())
}

fn print_stats(stats: &SearchStats, format: StatsFormat) -> Result<(), String> {
    match format {
        StatsFormat::Json => eprintln!("{}", serde_json::to_string_pretty(stats).map_err(|e| e.to_string())?),
        StatsFormat::Csv => {
            let mut w = csv::Writer::from_writer(std::io::stderr());
            w.serialize(stats).map_err(|e| e.to_string())?;
            w.flush().map_err(|e| e.to_string())?;
        }
    }
    Ok(())
}

fn plan(file: &Path, search: &SearchArgs, stats: StatsFormat) -> Result<u8, String> {
    let problem = load(file)?;
    let cfg = search.config()?;
    let ctx = problem.context();
    let (outcome, st) = solve(&ctx, &problem, &cfg).map_err(|e| e.to_string())?;
    let code = match &outcome {
        Outcome::Plan(actions) => {
            for a in actions {
                println!("{a}");
            }
            OK
        }
        Outcome::ResourceLimit => {
            println!("{}", outcome.label());
            LIMIT
        }
        Outcome::Unsolvable | Outcome::PrunedExhausted => {
            println!("{}", outcome.label());
            NEGATIVE
        }
    };
    print_stats(&st, stats)?;
    Ok(code)
}

fn eval(file: &Path, query: &str) -> Result<u8, String> {
    let problem = load(file)?;
    let f = dsl::parse_formula(query, &problem).map_err(|d| dsl::render(&d).trim_end().to_string())?;
    let holds = problem
        .context()
        .eval_state(&f, problem.initial())
        .map_err(|e| e.to_string())?;
    println!("{holds}");
    Ok(if holds { OK } else { NEGATIVE })
}

fn check(file: &Path, plan_file: &Path) -> Result<u8, String> {
    let problem = load(file)?;
    let text = fs::read_to_string(plan_file).map_err(|e| format!("{}: {e}", plan_file.display()))?;
    let plan = problem
        .parse_plan(&text)
        .map_err(|e| format!("{}: {e}", plan_file.display()))?;
    let verdict = problem
        .validate_plan(&problem.context(), &plan)
        .map_err(|e| e.to_string())?;
    println!("{verdict}");
    Ok(if verdict.is_valid() { OK } else { NEGATIVE })
}

fn run_bench(family: &str, outdir: &Path, search: &SearchArgs) -> Result<u8, String> {
    let family: Family = family.parse()?;
    let cfg = search.config()?;
    let instances = bench::instances(family).map_err(|e| e.to_string())?;
    bench::write_sources(&instances, outdir).map_err(|e| e.to_string())?;
    let rows = bench::run_instances(&instances, &cfg).map_err(|e| e.to_string())?;
    let path = outdir.join(format!("{}.csv", family.name()));
    let out = fs::File::create(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    bench::write_csv(&rows, out).map_err(|e| e.to_string())?;
    println!("wrote {} rows to {}", rows.len(), path.display());
    Ok(OK)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Plan { file, search, stats } => plan(file, search, *stats),
        Command::Eval { file, query } => eval(file, query),
        Command::Check { file, plan } => check(file, plan),
        Command::Bench { family, outdir, search } => run_bench(family, outdir, search),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(USAGE)
        }
    }
}
