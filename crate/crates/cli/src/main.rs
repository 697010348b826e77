//! `olcache`: generate traces, run caching policies, evaluate regret bounds.
//!
//! Exit status is 0 on success, 2 for usage and configuration errors, and 1
//! for failures while running.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use olcache::experiment::{
    bounds_table, inspect, run_experiment, summarize, write_bounds, write_inspect, write_results,
    BoundsQuery, ExperimentConfig, PolicyKind, PolicySpec, RunState, TraceSource,
};
use olcache::traces::{save_trace, ShotDist, SnmParams};
use olcache::{traces, Error};

const OUT_DIR_ENV: &str = "OLCACHE_OUT_DIR";

#[derive(Parser)]
#[command(
    name = "olcache",
    version,
    about = "No-regret online caching experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic request trace as CSV.
    Generate(GenerateArgs),
    /// Run policies on a trace and write per-slot utility and regret.
    Run(RunArgs),
    /// Print closed-form and Monte Carlo regret bounds.
    Bounds(BoundsArgs),
    /// Join final LRU contents with OGA fractions from a saved run state.
    Inspect(InspectArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Generator {
    Zipf,
    Uniform,
    Periodic,
    Snm,
    Replacement,
}

#[derive(Args)]
struct GenerateArgs {
    generator: Generator,
    /// Catalog size.
    #[arg(long)]
    n: Option<usize>,
    /// Number of slots.
    #[arg(long)]
    t: u64,
    /// Zipf exponent.
    #[arg(long, default_value_t = 0.8)]
    s: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Cache size the periodic sequence is built against.
    #[arg(long)]
    c: Option<usize>,
    /// Per-slot probability that a popularity rank gets a new file.
    #[arg(long, default_value_t = 0.01)]
    churn: f64,
    /// Shot arrivals per slot.
    #[arg(long, default_value_t = 0.05)]
    shot_rate: f64,
    /// Mean shot duration in slots (exponential) instead of the default Pareto law.
    #[arg(long)]
    shot_duration: Option<f64>,
    /// Attach uniformly random locations from this many.
    #[arg(long)]
    locations: Option<usize>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Use this trace file instead of the configured source.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    horizon: Option<u64>,
    #[arg(long)]
    capacity: Option<f64>,
    /// Comma-separated policy kinds, replacing the configured list.
    #[arg(long, value_delimiter = ',')]
    policies: Option<Vec<String>>,
    /// Constant step for every OGA/BSA policy.
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    record_every: Option<u64>,
    /// Results CSV.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Also write final policy states as JSON, for `inspect`.
    #[arg(long)]
    state_out: Option<PathBuf>,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    c: usize,
    #[arg(long)]
    t: u64,
    /// Common utility weight.
    #[arg(long, default_value_t = 1.0)]
    w: f64,
    /// Comma-separated per-file weights, overriding `--w`.
    #[arg(long, value_delimiter = ',')]
    weights: Option<Vec<f64>>,
    /// Maximum number of caches reachable from a location.
    #[arg(long, default_value_t = 1)]
    deg: usize,
    /// Number of caches.
    #[arg(long, default_value_t = 1)]
    caches: usize,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct InspectArgs {
    /// Run state written by `run --state-out`.
    state: PathBuf,
    /// LRU policy label (default: the first LRU).
    #[arg(long)]
    lru: Option<String>,
    /// OGA policy label (default: the first OGA).
    #[arg(long)]
    oga: Option<String>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Run(a) => run(a),
        Command::Bounds(a) => bounds(a),
        Command::Inspect(a) => inspect_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let usage = e
                .chain()
                .any(|c| c.downcast_ref::<Error>().is_some_and(Error::is_usage));
            ExitCode::from(if usage { 2 } else { 1 })
        }
    }
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        c.downcast_ref::<io::Error>()
            .is_some_and(|io| io.kind() == io::ErrorKind::BrokenPipe)
    })
}

fn default_output(name: &str) -> PathBuf {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) => PathBuf::from(dir).join(name),
        None => PathBuf::from(name),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Error::Config(msg.into()).into()
}

fn generate(a: GenerateArgs) -> Result<()> {
    let need_n = || {
        a.n.ok_or_else(|| usage("--n is required for this generator"))
    };
    let trace = match a.generator {
        Generator::Zipf => traces::gen_zipf_iid(need_n()?, a.t, a.s, a.seed)?,
        Generator::Uniform => traces::gen_zipf_iid(need_n()?, a.t, 0.0, a.seed)?,
        Generator::Periodic => {
            let c =
                a.c.ok_or_else(|| usage("--c is required for the periodic sequence"))?;
            traces::gen_periodic_adversarial(c, a.t, a.n.unwrap_or(c + 1))?
        }
        Generator::Snm => {
            let mut params = SnmParams::with_rate(a.shot_rate);
            if let Some(mean) = a.shot_duration {
                params.duration = ShotDist::Exponential { mean };
            }
            traces::gen_snm(need_n()?, a.t, &params, a.seed)?
        }
        Generator::Replacement => {
            traces::gen_random_replacement(need_n()?, a.t, a.s, a.churn, a.seed)?
        }
    };
    let trace = match a.locations {
        Some(i) => traces::assign_uniform_locations(&trace, i, a.seed)?,
        None => trace,
    };
    let path = a.output.unwrap_or_else(|| default_output("trace.csv"));
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    save_trace(&trace, &path)?;
    eprintln!("wrote {} requests to {}", trace.len(), path.display());
    Ok(())
}

fn run(a: RunArgs) -> Result<()> {
    let base = a
        .config
        .as_deref()
        .and_then(Path::parent)
        .map(Path::to_path_buf);
    let mut config = match &a.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => {
            let trace = a
                .trace
                .clone()
                .ok_or_else(|| usage("give --config or --trace"))?;
            let capacity = a
                .capacity
                .ok_or_else(|| usage("--capacity is required without --config"))?;
            ExperimentConfig::single(TraceSource::File { path: trace }, capacity, None, 0)
        }
    };
    if let Some(t) = a.trace {
        config.trace = TraceSource::File { path: t };
    }
    if let Some(s) = a.seed {
        config.seed = s;
    }
    if let Some(t) = a.horizon {
        config.horizon = Some(t);
    }
    if let Some(c) = a.capacity {
        config.capacity = Some(c);
    }
    if let Some(k) = a.record_every {
        config.record_every = k;
    }
    if let Some(list) = a.policies {
        config.policies = list
            .iter()
            .map(|s| PolicyKind::parse(s.trim()).map(PolicySpec::new))
            .collect::<olcache::Result<_>>()?;
    } else if config.policies.is_empty() && a.config.is_none() {
        config.policies = [PolicyKind::Oga, PolicyKind::Lru, PolicyKind::Lfu]
            .into_iter()
            .map(PolicySpec::new)
            .collect();
    }
    if let Some(eta) = a.eta {
        for p in &mut config.policies {
            if matches!(p.kind, PolicyKind::Oga | PolicyKind::Bsa) {
                p.eta = Some(eta);
                p.step = None;
            }
        }
    }
    if let Some(o) = a.output {
        config.output = Some(o);
    }

    let out = run_experiment(&config, base.as_deref())?;
    let path = config
        .output
        .clone()
        .unwrap_or_else(|| default_output("results.csv"));
    let mut w = create(&path)?;
    write_results(&out, &mut w).with_context(|| format!("writing {}", path.display()))?;
    w.flush()?;
    if let Some(state_path) = a.state_out {
        let mut w = create(&state_path)?;
        serde_json::to_writer_pretty(&mut w, &out.state())?;
        w.flush()?;
    }

    let stdout = io::stdout();
    let mut s = stdout.lock();
    writeln!(
        s,
        "T = {}, hindsight utility = {:.4}, results in {}",
        out.horizon(),
        out.hindsight_total(),
        path.display()
    )?;
    writeln!(
        s,
        "{:<12} {:>16} {:>12} {:>16}",
        "policy", "utility", "avg", "regret"
    )?;
    for p in summarize(&out) {
        writeln!(
            s,
            "{:<12} {:>16.4} {:>12.6} {:>16.4}",
            p.label, p.utility, p.avg_utility, p.regret
        )?;
    }
    Ok(())
}

fn bounds(a: BoundsArgs) -> Result<()> {
    let query = BoundsQuery {
        n_files: a.n,
        capacity: a.c,
        horizon: a.t,
        weights: a.weights,
        w: a.w,
        degree: a.deg,
        n_caches: a.caches,
        samples: a.samples,
        seed: a.seed,
    };
    let rows = bounds_table(&query)?;
    match a.output {
        Some(path) => {
            let mut w = create(&path)?;
            write_bounds(&rows, &mut w)?;
            w.flush()?;
        }
        None => write_bounds(&rows, &mut io::stdout().lock())?,
    }
    Ok(())
}

fn inspect_cmd(a: InspectArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.state).map_err(|e| Error::Io {
        path: a.state.clone(),
        source: e,
    })?;
    let state: RunState = serde_json::from_str(&text)
        .map_err(|e| usage(format!("{}: not a run state: {e}", a.state.display())))?;
    let rows = inspect(&state, a.lru.as_deref(), a.oga.as_deref())?;
    match a.output {
        Some(path) => {
            let mut w = create(&path)?;
            write_inspect(&rows, &mut w)?;
            w.flush()?;
        }
        None => write_inspect(&rows, &mut io::stdout().lock())?,
    }
    Ok(())
}
