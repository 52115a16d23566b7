use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::experiments::config::{Executor, Instance, MethodBlock, RunConfig};
use crate::model::pool::WorkerPool;
use crate::optimizers::{
    AcceleratedRennala, AsyncSgd, Hyperparams, MMinibatch, Malenia, Method, Rennala, ServerLogic, StepsizeRule,
    SyncMinibatch,
};
use crate::protocol::{run_time_protocol, OracleKind, ProtocolSetup, RecordOptions, ServerAlgorithm, StopReason, Trace};
use crate::sim::{des_run, DesSetup};

pub const CSV_HEADER: &str = "run_id,method,n,seed,k,virtual_time,f,grad_norm_sq,prog,delay";

/// Env var naming the root under which run outputs are placed.
pub const OUT_ENV: &str = "TIMELAB_OUT";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub run_id: String,
    pub method: String,
    pub n: usize,
    pub seed: u64,
    pub gamma: f64,
    pub batch: usize,
    pub m: Option<usize>,
    pub c_a: Option<f64>,
    pub stop: StopReason,
    /// Index `k` of the last recorded event.
    pub steps: usize,
    pub virtual_time: f64,
    pub f: f64,
    pub grad_norm_sq: f64,
    pub time_to_target: Option<f64>,
    pub deliveries: u64,
    pub ignored: u64,
}

pub fn run_id(label: &str, n: usize, seed: u64) -> String {
    format!("{label}-n{n}-s{seed}")
}

fn server_for(m: &MethodBlock, h: &Hyperparams, inst: &Instance, n: usize) -> Result<Box<dyn ServerLogic<f64>>> {
    let x0 = inst.problem.start.clone();
    let g = h.gamma;
    if !(g > 0.0 && g.is_finite()) {
        return Err(config(format!("methods: gamma = {g} must be positive")));
    }
    Ok(match m.method {
        Method::Rennala => Box::new(Rennala::new(x0, g, h.batch)?),
        Method::RennalaConvex => Box::new(Rennala::new(x0, g, h.batch)?.averaged()),
        Method::Accelerated => Box::new(AcceleratedRennala::new(x0, g, h.batch)?),
        Method::Malenia => Box::new(Malenia::new(x0, g, h.batch, n)?),
        Method::Minibatch => Box::new(MMinibatch::new(x0, g, h.m.unwrap_or(n))?),
        Method::Async => {
            let rule = match m.c_a {
                Some(c_a) => StepsizeRule::DelayAdaptive { base: g, c_a, smoothness: inst.problem.smoothness },
                None => StepsizeRule::Constant { gamma: g },
            };
            Box::new(AsyncSgd::new(x0, rule)?)
        }
    })
}

/// Executes one method on one pool with one seed. A pure function of its
/// arguments.
pub fn execute(
    cfg: &RunConfig,
    method: usize,
    inst: &Instance,
    pool: &WorkerPool,
    seed: u64,
) -> Result<(RunResult, Trace)> {
    let m = &cfg.methods[method];
    let n = pool.len();
    let h = cfg.hyperparams(method, inst, pool)?;
    let f_star = inst.problem.optimum;
    let mut stop = cfg.stop.clone();
    if let Some(t) = cfg.target.filter(|t| t.stop) {
        if stop.threshold.is_none() {
            stop.threshold = Some(t.threshold(f_star)?);
        }
    }
    if m.theorem && stop.max_steps.is_none() && m.executor != Executor::Protocol {
        // the sync protocol spends two calls per iteration
        let per = if m.executor == Executor::Sync { 2 } else { 1 };
        stop.max_steps = Some(h.iterations * per);
    }
    let trace = match m.executor {
        Executor::Des => {
            let mut server = server_for(m, &h, inst, n)?;
            let mut setup = DesSetup::new(pool, &inst.estimators, &inst.problem, stop, seed);
            setup.record_every = cfg.output.record_every;
            des_run(&mut server, &setup)?
        }
        Executor::Protocol => {
            let server = server_for(m, &h, inst, n)?;
            let mut alg = ServerAlgorithm::new(server, pool.clone())?;
            let setup = ProtocolSetup {
                pool,
                estimators: &inst.estimators,
                problem: &inst.problem,
                oracle: OracleKind::Delayed,
                stop,
                seed,
                record: RecordOptions::default(),
            };
            run_time_protocol(&mut alg, &setup)?
        }
        Executor::Sync => {
            let mm = h.m.unwrap_or(n);
            let mut alg = SyncMinibatch::new(inst.problem.start.clone(), h.gamma, mm, &pool.sorted())?;
            let setup = ProtocolSetup {
                pool,
                estimators: &inst.estimators,
                problem: &inst.problem,
                oracle: OracleKind::Sync,
                stop,
                seed,
                record: RecordOptions::default(),
            };
            run_time_protocol(&mut alg, &setup)?
        }
    };
    let label = m.label();
    let time_to_target = cfg.target.and_then(|t| {
        trace.events.iter().find(|e| t.reached(e.f, e.grad_norm_sq, trace.f_star)).map(|e| e.time)
    });
    let last = trace.last();
    let result = RunResult {
        run_id: run_id(&label, n, seed),
        method: label,
        n,
        seed,
        gamma: h.gamma,
        batch: h.batch,
        m: h.m,
        c_a: if m.method == Method::Async { m.c_a } else { None },
        stop: trace.stop,
        steps: last.k,
        virtual_time: last.time,
        f: last.f,
        grad_norm_sq: last.grad_norm_sq,
        time_to_target,
        deliveries: trace.deliveries,
        ignored: trace.ignored,
    };
    Ok((result, trace))
}

/// CSV for one run, header included. Floats use Rust's shortest
/// round-trip formatting, so equal traces give equal bytes.
pub fn trace_csv(r: &RunResult, trace: &Trace) -> String {
    let mut out = String::with_capacity(64 * (trace.events.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for e in &trace.events {
        let delay = e.delay.map(|d| d.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.run_id, r.method, r.n, r.seed, e.k, e.time, e.f, e.grad_norm_sq, e.prog, delay
        )
        .unwrap();
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    pub n: usize,
    pub runs: usize,
    /// Runs that reached the target.
    pub reached: usize,
    /// Mean time to target over the runs that reached it.
    pub mean_time_to_target: Option<f64>,
    pub mean_final_f: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub name: String,
    pub config_hash: String,
    pub runs: Vec<RunResult>,
    pub methods: Vec<MethodSummary>,
}

pub fn summarize(cfg: &RunConfig, mut runs: Vec<RunResult>) -> Summary {
    runs.sort_by(|a, b| a.run_id.cmp(&b.run_id));
    let mut methods = Vec::new();
    for m in &cfg.methods {
        let label = m.label();
        for n in cfg.pool.sizes() {
            let rs: Vec<&RunResult> = runs.iter().filter(|r| r.method == label && r.n == n).collect();
            if rs.is_empty() {
                continue;
            }
            let hits: Vec<f64> = rs.iter().filter_map(|r| r.time_to_target).collect();
            methods.push(MethodSummary {
                method: label.clone(),
                n,
                runs: rs.len(),
                reached: hits.len(),
                mean_time_to_target: (!hits.is_empty()).then(|| hits.iter().sum::<f64>() / hits.len() as f64),
                mean_final_f: rs.iter().map(|r| r.f).sum::<f64>() / rs.len() as f64,
            });
        }
    }
    Summary { name: cfg.name.clone(), config_hash: cfg.hash(), runs, methods }
}

/// Output directory: `out` if given, else `$TIMELAB_OUT/<output.dir or name>`
/// (root defaults to `runs`). The directory itself is created; its parent
/// must exist.
pub fn output_dir(cfg: &RunConfig, out: Option<&Path>) -> Result<PathBuf> {
    let dir = match out {
        Some(p) => p.to_path_buf(),
        None => {
            let root = std::env::var_os(OUT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("runs"));
            root.join(cfg.output.dir.clone().unwrap_or_else(|| PathBuf::from(&cfg.name)))
        }
    };
    if !dir.is_dir() {
        let parent = dir.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        if !parent.is_dir() {
            return Err(config(format!("output dir: parent {} does not exist", parent.display())));
        }
        std::fs::create_dir(&dir)?;
    }
    Ok(dir)
}

/// Every (method, n, seed) combination of the config, in config order.
pub fn run_all(cfg: &RunConfig, seeds: &[u64]) -> Result<Vec<(RunResult, Trace)>> {
    let mut out = Vec::new();
    for n in cfg.pool.sizes() {
        let pool = cfg.pool.build(n).map_err(|e| config(format!("pool: {e}")))?;
        let inst = cfg.instance(&pool)?;
        for i in 0..cfg.methods.len() {
            for &seed in seeds {
                out.push(execute(cfg, i, &inst, &pool, seed)?);
            }
        }
    }
    Ok(out)
}

/// Runs the config and writes one CSV per run plus `summary.json` into
/// `dir`. `seed` replaces the config's seed list.
pub fn run_to_dir(cfg: &RunConfig, seed: Option<u64>, dir: &Path) -> Result<Summary> {
    let seeds = seed.map(|s| vec![s]).unwrap_or_else(|| cfg.seeds.clone());
    let runs = run_all(cfg, &seeds)?;
    let mut results = Vec::with_capacity(runs.len());
    for (r, trace) in runs {
        std::fs::write(dir.join(format!("{}.csv", r.run_id)), trace_csv(&r, &trace))?;
        results.push(r);
    }
    let summary = summarize(cfg, results);
    std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
    Ok(summary)
}
