//! `infocore` command-line front end.
//!
//! Every failure ends in a single `error: <kind>: <message>` line on stderr
//! and a nonzero exit status. Usage errors come from clap and exit with 2.

use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use infocore::config::ExperimentConfig;
use infocore::io::{load_edge_list, write_atomic, write_edge_list, write_graph_files};
use infocore::{
    generate_synthetic, run_on, sample_users, split_train_probe, BipartiteGraph, CoreMethod,
    DegreeDistribution, Error, Execution, InteractionList, NeighborTable, SyntheticSpec,
    UserRanking,
};

/// Environment variable holding the default worker count.
const THREADS_ENV: &str = "INFOCORE_THREADS";

#[derive(Parser)]
#[command(name = "infocore", version, about = "Network-based recommendation and information-core extraction")]
struct Cli {
    /// Worker threads (default: $INFOCORE_THREADS, else one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load an edge list, optionally sample users, and write the graph files.
    Ingest(IngestArgs),
    /// Generate a synthetic edge list with planted communities.
    Synth(SynthArgs),
    /// Split an edge list into training and probe edge lists.
    Split(SplitArgs),
    /// Extract an information core and dump its members.
    Core(CoreArgs),
    /// Run the experiment described by a config file.
    Evaluate(EvaluateArgs),
    /// Run a config file with grid overrides from the command line.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long)]
    input: PathBuf,
    /// Output stem; writes <stem>.tsv, <stem>.users.tsv and <stem>.objects.tsv.
    #[arg(long)]
    output: PathBuf,
    /// Keep only users with at least this many distinct objects.
    #[arg(long, requires = "count")]
    min_degree: Option<usize>,
    /// Number of users to sample among the eligible ones.
    #[arg(long, requires = "min_degree")]
    count: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 1000)]
    users: usize,
    #[arg(long, default_value_t = 2000)]
    objects: usize,
    #[arg(long, default_value_t = 20_000)]
    links: usize,
    /// Power-law tail exponent of user degrees.
    #[arg(long, default_value_t = 2.5, conflicts_with = "uniform")]
    exponent: f64,
    /// Give every user (nearly) the same degree.
    #[arg(long)]
    uniform: bool,
    #[arg(long, default_value_t = 5)]
    communities: usize,
    #[arg(long, default_value_t = 0.2)]
    mixing: f64,
    #[arg(long, default_value_t = 0.8)]
    skew: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct SplitArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 0.8)]
    ratio: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    train_out: PathBuf,
    #[arg(long)]
    probe_out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Degree,
    Random,
    Frequency,
    Rank,
}

#[derive(Args)]
struct CoreArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    method: MethodArg,
    /// Core ratio in (0, 1]; the core holds round(r * n_users) users.
    #[arg(long)]
    r: f64,
    /// Neighbor table size for frequency and rank.
    #[arg(long, default_value_t = 20)]
    n: usize,
    /// Seed for the random method.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Dump file (default: stdout).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Also write the neighbor table here.
    #[arg(long)]
    table_out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    config: PathBuf,
    /// Report CSV (overrides the config's `output`; default: stdout).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Override a config key, e.g. `--set seeds=1,2`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    base: EvaluateArgs,
    /// Core ratio grid, e.g. `0.1:1.0:0.1`.
    #[arg(long)]
    r: Option<String>,
    /// KNNMD neighbor counts.
    #[arg(long)]
    k: Option<String>,
    /// Hybrid lambda grid.
    #[arg(long)]
    lambda: Option<String>,
    /// Recommendation list lengths.
    #[arg(long = "L", id = "length")]
    length: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}: {}", e.kind(), e);
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let threads = cli.threads;
    match cli.command {
        Command::Ingest(a) => {
            init_threads(threads, None)?;
            ingest(a)
        }
        Command::Synth(a) => {
            init_threads(threads, None)?;
            synth(a)
        }
        Command::Split(a) => {
            init_threads(threads, None)?;
            split(a)
        }
        Command::Core(a) => {
            init_threads(threads, None)?;
            core(a)
        }
        Command::Evaluate(a) => experiment(a, &[], threads),
        Command::Sweep(a) => {
            let overrides: Vec<(&str, &String)> = [
                ("r", &a.r),
                ("k", &a.k),
                ("lambda", &a.lambda),
                ("L", &a.length),
            ]
            .into_iter()
            .filter_map(|(key, v)| v.as_ref().map(|v| (key, v)))
            .collect();
            experiment(a.base, &overrides, threads)
        }
    }
}

/// Flag, then config file, then environment.
fn init_threads(flag: Option<usize>, config: Option<usize>) -> Result<(), Error> {
    let from_env = match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => Some(v.trim().parse::<usize>().map_err(|_| {
            Error::Config(format!("{THREADS_ENV}: cannot parse `{v}` as a thread count"))
        })?),
        _ => None,
    };
    let Some(n) = flag.or(config).or(from_env) else {
        return Ok(());
    };
    if n == 0 {
        return Err(Error::Config("thread count must be >= 1".into()));
    }
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(())
}

fn load(path: &Path) -> Result<InteractionList, Error> {
    let loaded = load_edge_list(path)?;
    for line in &loaded.malformed {
        eprintln!("warning: {}:{}: malformed line skipped", path.display(), line);
    }
    if !loaded.malformed.is_empty() {
        eprintln!(
            "warning: {}: {} malformed line(s), {} pairs loaded",
            path.display(),
            loaded.malformed.len(),
            loaded.interactions.len()
        );
    }
    Ok(loaded.interactions)
}

fn summary(g: &BipartiteGraph) {
    println!(
        "users={} objects={} links={} sparsity={}",
        g.n_users(),
        g.n_objects(),
        g.n_links(),
        infocore::fmt::sig(g.sparsity(), 6)
    );
}

fn ingest(a: IngestArgs) -> Result<(), Error> {
    let mut list = load(&a.input)?;
    if let (Some(min_degree), Some(count)) = (a.min_degree, a.count) {
        let sample = sample_users(&list, min_degree, count, a.seed)?;
        if sample.truncated {
            eprintln!(
                "warning: only {} users have degree >= {min_degree}; keeping all of them",
                sample.users_sampled
            );
        }
        list = sample.interactions;
    }
    let g = BipartiteGraph::build(&list)?;
    for path in write_graph_files(&g, &a.output)? {
        eprintln!("wrote {}", path.display());
    }
    summary(&g);
    Ok(())
}

fn synth(a: SynthArgs) -> Result<(), Error> {
    let spec = SyntheticSpec {
        n_users: a.users,
        n_objects: a.objects,
        n_links: a.links,
        degrees: if a.uniform {
            DegreeDistribution::Uniform
        } else {
            DegreeDistribution::PowerLaw { exponent: a.exponent }
        },
        communities: a.communities,
        mixing: a.mixing,
        object_skew: a.skew,
        seed: a.seed,
    };
    let list = generate_synthetic(&spec)?;
    write_atomic(&a.output, |w| write_edge_list(&list, w))?;
    summary(&BipartiteGraph::build(&list)?);
    Ok(())
}

fn split(a: SplitArgs) -> Result<(), Error> {
    let g = BipartiteGraph::build(&load(&a.input)?)?;
    let pair = split_train_probe(&g, a.ratio, a.seed)?;
    write_atomic(&a.train_out, |w| write_edge_list(&pair.train.to_interactions(), w))?;
    let t = &pair.train;
    write_atomic(&a.probe_out, |w| {
        for (u, objects) in pair.probe().iter().enumerate() {
            for &o in objects {
                writeln!(w, "{}\t{}", t.user_token(u as u32), t.object_token(o))?;
            }
        }
        Ok(())
    })?;
    println!("train={} probe={}", t.n_links(), pair.n_probe_links());
    Ok(())
}

fn core(a: CoreArgs) -> Result<(), Error> {
    let g = BipartiteGraph::build(&load(&a.input)?)?;
    let method = match a.method {
        MethodArg::Degree => CoreMethod::Degree,
        MethodArg::Random => CoreMethod::Random { seed: a.seed },
        MethodArg::Frequency => CoreMethod::Frequency,
        MethodArg::Rank => CoreMethod::Rank,
    };
    let table = if method.needs_table() || a.table_out.is_some() {
        Some(NeighborTable::build(&g, a.n)?)
    } else {
        None
    };
    if let (Some(path), Some(t)) = (&a.table_out, &table) {
        write_atomic(path, |w| t.write_to(w))?;
    }
    let core = UserRanking::new(&g, table.as_ref(), method)?.core(a.r)?;
    match &a.output {
        Some(path) => write_atomic(path, |w| core.write_dump(&g, w))?,
        None => {
            let stdout = io::stdout();
            core.write_dump(&g, stdout.lock())
                .map_err(|e| Error::Io { path: "<stdout>".into(), source: e })?;
        }
    }
    eprintln!("core: {} of {} users", core.len(), g.n_users());
    Ok(())
}

fn experiment(
    a: EvaluateArgs,
    overrides: &[(&str, &String)],
    threads: Option<usize>,
) -> Result<(), Error> {
    let mut cfg = ExperimentConfig::load(&a.config)?;
    for item in &a.sets {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got `{item}`")))?;
        cfg.set(key.trim(), value.trim())?;
    }
    for (key, value) in overrides {
        cfg.set(key, value)?;
    }
    if let Some(out) = a.output {
        cfg.output = Some(out);
    }
    cfg.validate()?;
    init_threads(threads, cfg.threads)?;

    let dataset = cfg
        .dataset
        .clone()
        .ok_or_else(|| Error::Config("dataset: no path given".into()))?;
    let list = load(&dataset)?;
    let report = run_on(&list, &cfg, Execution::default())?;
    for row in report.failures() {
        eprintln!(
            "warning: cell failed (seed {}, {} {}): {}",
            row.seed,
            row.algorithm,
            row.core_method,
            row.error.as_deref().unwrap_or("unknown")
        );
    }
    match &cfg.output {
        Some(path) => {
            report.write_csv(path)?;
            eprintln!("wrote {}", path.display());
        }
        None => print!("{}", report.to_csv()),
    }
    Ok(())
}
