use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use timelab::experiments::{self, output_dir, RunConfig, Summary};
use timelab::model::WorkerPool;
use timelab::sim::{collection_profile, CollectionRegime};

/// Virtual-time experiments for parallel SGD under fixed worker delays.
#[derive(Parser)]
#[command(name = "timelab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (method, n, seed) of a config; write CSVs and summary.json.
    Run(RunArgs),
    /// Grid-search the config's [sweep] axes; write sweep.json and the best runs.
    Sweep(RunArgs),
    /// Run the acceptance checks and print a pass/fail ledger.
    Verify {
        /// Only checks whose id contains this string.
        #[arg(long)]
        only: Option<String>,
        /// Also write the ledger as JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Complexity bounds for the config's pools, next to measured times
    /// when the output dir holds a summary.json.
    Report {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time to collect S gradients from a pool.
    CollectTime {
        /// Worker delays, comma separated.
        #[arg(long, value_delimiter = ',', required_unless_present = "config")]
        taus: Vec<f64>,
        /// Read the pool from a config instead (first pool size).
        #[arg(long, conflicts_with = "taus")]
        config: Option<PathBuf>,
        #[arg(long)]
        s: usize,
        #[arg(long, value_enum, default_value_t = Regime::WorstCase)]
        regime: Regime,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Replace the config's seed list with this seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; defaults to $TIMELAB_OUT/<name>.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Regime {
    Fresh,
    WorstCase,
}

fn load(path: &Path) -> anyhow::Result<RunConfig> {
    RunConfig::load(path).with_context(|| format!("loading {}", path.display()))
}

fn print_summary(s: &Summary, dir: &Path) {
    println!("{} runs -> {} (config {})", s.runs.len(), dir.display(), &s.config_hash[..12]);
    for m in &s.methods {
        let t = m.mean_time_to_target.map(|t| format!("{t:.4}")).unwrap_or_else(|| "-".into());
        println!("  {:<20} n={:<6} reached {}/{}  mean time to target {t}", m.method, m.n, m.reached, m.runs);
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cmd: Command) -> anyhow::Result<ExitCode> {
    match cmd {
        Command::Run(a) => {
            let cfg = load(&a.config)?;
            let dir = output_dir(&cfg, a.out.as_deref())?;
            let s = experiments::run_to_dir(&cfg, a.seed, &dir)?;
            print_summary(&s, &dir);
        }
        Command::Sweep(a) => {
            let cfg = load(&a.config)?;
            if cfg.sweep.is_none() {
                bail!("config has no [sweep] block");
            }
            let dir = output_dir(&cfg, a.out.as_deref())?;
            let (report, summary) = experiments::sweep_to_dir(&cfg, a.seed, &dir)?;
            for e in &report.entries {
                let flags: Vec<String> = e
                    .axes
                    .iter()
                    .zip(&e.best)
                    .zip(&e.boundary)
                    .map(|((a, v), b)| format!("{a}={v}{}", if *b { " (grid boundary)" } else { "" }))
                    .collect();
                match e.score {
                    Some(s) => println!("{:<20} n={:<6} score {s:.4}  {}", e.method, e.n, flags.join(", ")),
                    None => println!("{:<20} n={:<6} no grid point scored", e.method, e.n),
                }
            }
            if let Some(s) = summary {
                print_summary(&s, &dir);
            }
        }
        Command::Verify { only, out } => {
            let results = experiments::verify(only.as_deref());
            if results.is_empty() {
                bail!("no check matches {:?}", only.unwrap_or_default());
            }
            for r in &results {
                println!("{}", r.line());
            }
            if let Some(p) = out {
                std::fs::write(&p, serde_json::to_string_pretty(&results)? + "\n")
                    .with_context(|| format!("writing {}", p.display()))?;
            }
            if results.iter().any(|r| !r.passed) {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Report { config, out } => {
            let cfg = load(&config)?;
            let summary = match out.as_ref().map(|d| d.join("summary.json")) {
                Some(p) if p.is_file() => Some(serde_json::from_str::<Summary>(&std::fs::read_to_string(&p)?)?),
                _ => None,
            };
            let rows = experiments::bounds_report(&cfg, summary.as_ref())?;
            print!("{}", experiments::report::render(&rows));
            if let Some(d) = out {
                if d.is_dir() {
                    std::fs::write(d.join("report.json"), serde_json::to_string_pretty(&rows)? + "\n")?;
                }
            }
        }
        Command::CollectTime { taus, config, s, regime } => {
            let pool = match config {
                Some(p) => {
                    let cfg = load(&p)?;
                    let n = cfg.pool.sizes()[0];
                    cfg.pool.build(n)?
                }
                None => WorkerPool::new(taus)?,
            };
            let regime = match regime {
                Regime::Fresh => CollectionRegime::Fresh,
                Regime::WorstCase => CollectionRegime::WorstCase,
            };
            let prof = collection_profile(&pool, s, regime)?;
            let sorted = pool.sorted();
            let (tmin, j) = timelab::complexity::t_prime_min(&sorted, &(s as f64))?;
            let rate: f64 = sorted.iter().map(|t| 1.0 / t).sum();
            println!("time {}", prof.time);
            println!("per_worker {:?}", prof.per_worker);
            println!("stale {}", prof.stale);
            println!("lower S/sum(1/tau) {}", s as f64 / rate);
            println!("min_j t'(j) {tmin} at j = {j}");
        }
    }
    Ok(ExitCode::SUCCESS)
}
