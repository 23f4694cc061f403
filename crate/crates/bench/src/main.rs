use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use policy_tree_search::bridge::{serve_table, ProbTable};
use policy_tree_search::sokoban::parse_boxoban;
use pts_bench::scenario::{means, run_scenario, write_rows, Scenario};
use pts_bench::{
    parse_seeds, render_summary, run_benchmark, summarize, write_records, write_series, Algorithm, MixSpec,
    PolicySpec, RunConfig,
};

#[derive(Parser)]
#[command(name = "pts-bench", version, about = "Policy-guided tree search benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Run one solver over every level of a boxoban file.
    Run(RunArgs),
    /// Run LevinTS, LubyTS and multiTS on a synthetic tree.
    Scenario(ScenarioArgs),
    /// Serve a probability table over stdio (uniform for unknown states).
    #[command(hide = true)]
    MockPolicyServer {
        #[arg(long)]
        table: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_enum)]
    algorithm: Algorithm,
    /// Boxoban level file.
    #[arg(long)]
    levels: PathBuf,
    /// uniform, table:<path> or bridge:<command>; repeat to mix.
    #[arg(long = "policy", default_value = "uniform")]
    policies: Vec<PolicySpec>,
    /// bayes, local:<eps> or varying:<gamma>.
    #[arg(long)]
    mix: Option<MixSpec>,
    /// Comma-separated Bayes priors, one per policy.
    #[arg(long, value_delimiter = ',')]
    priors: Option<Vec<f64>>,
    /// Mix the uniform policy in with this weight.
    #[arg(long)]
    noise: Option<f64>,
    /// Number of sampled runs (unbounded if absent).
    #[arg(long)]
    nsims: Option<u64>,
    /// LubyTS depth multiplier: run k is cut at d_min times the k-th schedule term [default: 1].
    #[arg(long)]
    d_min: Option<u64>,
    /// multiTS depth limit for every run (required for multits).
    #[arg(long)]
    depth_limit: Option<u64>,
    /// Expansion budget per level.
    #[arg(long, default_value_t = 100_000)]
    budget: u64,
    /// Wall-clock limit per level, in milliseconds.
    #[arg(long)]
    time_limit_ms: Option<u64>,
    /// Seeds as values and half-open ranges, e.g. 0..5.
    #[arg(long, default_value = "0")]
    seeds: String,
    /// Levels searched in parallel.
    #[arg(long, env = "PTS_WORKERS", default_value_t = 1)]
    workers: usize,
    /// How long a bridge server gets to send its handshake.
    #[arg(long, default_value_t = 10_000)]
    handshake_timeout_ms: u64,
    /// Per-record CSV.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Aggregates as JSON.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Sorted expansions of solved levels, per seed, as CSV.
    #[arg(long)]
    series: Option<PathBuf>,
    /// Add wall time to the record CSV (makes output run-dependent).
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct ScenarioArgs {
    #[arg(value_enum)]
    scenario: Scenario,
    /// Goal depth, or chain length for collapsed.
    #[arg(long)]
    depth: u64,
    #[arg(long, default_value = "0..10")]
    seeds: String,
    #[arg(long, default_value_t = 10_000_000)]
    budget: u64,
    /// Row CSV; stdout if absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn run(args: RunArgs) -> Result<()> {
    let config = RunConfig {
        algorithm: args.algorithm,
        policies: args.policies,
        mix: args.mix,
        priors: args.priors,
        noise: args.noise,
        nsims: args.nsims,
        d_min: args.d_min,
        depth_limit: args.depth_limit,
        budget: args.budget,
        time_limit: args.time_limit_ms.map(Duration::from_millis),
        seeds: parse_seeds(&args.seeds)?,
        handshake_timeout: Duration::from_millis(args.handshake_timeout_ms),
    };
    config.validate()?;
    let text = fs::read_to_string(&args.levels).with_context(|| format!("reading {}", args.levels.display()))?;
    let levels = parse_boxoban(&text).with_context(|| format!("parsing {}", args.levels.display()))?;
    log::info!("{} levels, {} seeds, {} workers", levels.len(), config.seeds.len(), args.workers);

    let records = run_benchmark(&config, &levels, args.workers)?;
    let summary = summarize(&config.label(), &records);
    if let Some(path) = &args.output {
        write_records(&records, create(path)?, args.timing)?;
    }
    if let Some(path) = &args.summary {
        let mut w = create(path)?;
        serde_json::to_writer_pretty(&mut w, &summary)?;
        writeln!(w)?;
    }
    if let Some(path) = &args.series {
        write_series(&summary.label, &records, create(path)?)?;
    }
    print!("{}", render_summary(&summary));
    Ok(())
}

fn scenario(args: ScenarioArgs) -> Result<()> {
    let seeds = parse_seeds(&args.seeds)?;
    let rows = run_scenario(args.scenario, args.depth, &seeds, args.budget)?;
    match &args.output {
        Some(path) => write_rows(&rows, create(path)?)?,
        None => write_rows(&rows, io::stdout().lock())?,
    }
    for (algorithm, mean, n) in means(&rows) {
        eprintln!("{algorithm:>8}: mean expansions {mean:.1} over {n} run(s)");
    }
    Ok(())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(e) = dispatch(Cli::parse().command) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Run(args) => run(args),
        Command::Scenario(args) => scenario(args),
        Command::MockPolicyServer { table } => {
            let table = match table {
                Some(path) => ProbTable::load(&path, 4)?,
                None => ProbTable::new(4),
            };
            serve_table(&table, BufReader::new(io::stdin().lock()), io::stdout().lock())?;
            Ok(())
        }
    }
}
