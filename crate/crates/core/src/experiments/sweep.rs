use std::path::Path;

use serde::Serialize;

use crate::error::{config, Result};
use crate::experiments::config::{RunConfig, SweepObjective};
use crate::experiments::run::{execute, run_to_dir, RunResult, Summary};
use crate::optimizers::{grid_best, grid_evaluate, powers_of_two, Method};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridPoint {
    pub values: Vec<f64>,
    pub score: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepEntry {
    pub method: String,
    pub n: usize,
    /// Names of the swept axes, in the order of `best` and each grid point.
    pub axes: Vec<&'static str>,
    /// Empty when no grid point reached a score.
    pub best: Vec<f64>,
    /// `None` when no grid point scored (target never reached, every run
    /// failed).
    pub score: Option<f64>,
    /// Per axis: the best value sits at an end of its grid.
    pub boundary: Vec<bool>,
    pub evaluated: Vec<GridPoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepReport {
    pub name: String,
    pub config_hash: String,
    pub objective: SweepObjective,
    pub seeds: Vec<u64>,
    pub entries: Vec<SweepEntry>,
}

fn axes_for(cfg: &RunConfig, method: Method) -> Result<Vec<(&'static str, Vec<f64>)>> {
    let sw = cfg.sweep.as_ref().ok_or_else(|| config("sweep: missing [sweep] block"))?;
    let mut axes = Vec::new();
    let gamma = match (&sw.gamma, sw.gamma_pow2) {
        (Some(_), Some(_)) => return Err(config("sweep: give gamma or gamma_pow2, not both")),
        (Some(g), None) => Some(g.clone()),
        (None, Some([lo, hi])) => Some(powers_of_two(lo, hi)),
        (None, None) => None,
    };
    if let Some(g) = gamma {
        axes.push(("gamma", g));
    }
    let batched = matches!(method, Method::Rennala | Method::RennalaConvex | Method::Accelerated | Method::Malenia);
    if let (true, Some(b)) = (batched, &sw.batch) {
        axes.push(("batch", b.iter().map(|&v| v as f64).collect()));
    }
    if let (Method::Async, Some(c)) = (method, &sw.c_a) {
        axes.push(("c_a", c.clone()));
    }
    for (name, a) in &axes {
        if a.is_empty() {
            return Err(config(format!("sweep.{name}: empty grid")));
        }
        if a.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(config(format!("sweep.{name}: values must be positive and finite")));
        }
    }
    Ok(axes)
}

/// Config with method `i` pinned to one grid point.
fn pinned(cfg: &RunConfig, i: usize, names: &[&str], values: &[f64]) -> RunConfig {
    let mut c = cfg.clone();
    let m = &mut c.methods[i];
    for (name, &v) in names.iter().zip(values) {
        match *name {
            "gamma" => m.gamma = Some(v),
            "batch" => m.batch = Some(v as usize),
            "c_a" => m.c_a = Some(v),
            _ => unreachable!(),
        }
    }
    c
}

fn score(cfg: &RunConfig, runs: &[RunResult]) -> Option<f64> {
    let objective = cfg.sweep.as_ref().map(|s| s.objective).unwrap_or_default();
    let vals: Option<Vec<f64>> = match objective {
        SweepObjective::TimeToTarget => runs.iter().map(|r| r.time_to_target).collect(),
        SweepObjective::FinalF => runs.iter().map(|r| Some(r.f).filter(|f| f.is_finite())).collect(),
    };
    let vals = vals?;
    Some(vals.iter().sum::<f64>() / vals.len() as f64)
}

/// Grid search per method and pool size. Runs that fail (for instance a
/// rejected batch size) score as missing.
pub fn sweep(cfg: &RunConfig, seeds: &[u64]) -> Result<(SweepReport, RunConfig)> {
    if cfg.sweep.as_ref().and_then(|s| s.objective.eq(&SweepObjective::TimeToTarget).then_some(())).is_some()
        && cfg.target.is_none()
    {
        return Err(config("sweep.objective: time_to_target needs a [target] block"));
    }
    let mut entries = Vec::new();
    let mut best_cfg = cfg.clone();
    let sizes = cfg.pool.sizes();
    for n in &sizes {
        let pool = cfg.pool.build(*n).map_err(|e| config(format!("pool: {e}")))?;
        let inst = cfg.instance(&pool)?;
        for i in 0..cfg.methods.len() {
            let axes = axes_for(cfg, cfg.methods[i].method)?;
            let names: Vec<&'static str> = axes.iter().map(|a| a.0).collect();
            let grids: Vec<Vec<f64>> = axes.into_iter().map(|a| a.1).collect();
            let (best, score_v, boundary, evaluated) = if grids.is_empty() {
                let runs: Result<Vec<RunResult>> = seeds.iter().map(|&s| Ok(execute(cfg, i, &inst, &pool, s)?.0)).collect();
                (vec![], score(cfg, &runs?), vec![], vec![])
            } else {
                let ev = grid_evaluate(&grids, |p| {
                    let c = pinned(cfg, i, &names, p);
                    let runs: Result<Vec<RunResult>> =
                        seeds.iter().map(|&s| Ok(execute(&c, i, &inst, &pool, s)?.0)).collect();
                    score(&c, &runs.ok()?)
                })?;
                let points = ev.iter().map(|(values, score)| GridPoint { values: values.clone(), score: *score }).collect();
                match grid_best(&grids, ev) {
                    Some(r) => (r.best, Some(r.score), r.boundary, points),
                    None => (vec![], None, vec![false; grids.len()], points),
                }
            };
            if sizes.len() == 1 && !best.is_empty() {
                best_cfg = pinned(&best_cfg, i, &names, &best);
            }
            entries.push(SweepEntry {
                method: cfg.methods[i].label(),
                n: *n,
                axes: names,
                best,
                score: score_v,
                boundary,
                evaluated,
            });
        }
    }
    let report = SweepReport {
        name: cfg.name.clone(),
        config_hash: cfg.hash(),
        objective: cfg.sweep.as_ref().map(|s| s.objective).unwrap_or_default(),
        seeds: seeds.to_vec(),
        entries,
    };
    Ok((report, best_cfg))
}

/// Sweeps, writes `sweep.json`, and reruns the best configuration into the
/// same directory so the report comes with the CSVs behind it. With several
/// pool sizes each size gets its own best point, and a method that never
/// scored has no best point, so in those cases only the report is written.
pub fn sweep_to_dir(cfg: &RunConfig, seed: Option<u64>, dir: &Path) -> Result<(SweepReport, Option<Summary>)> {
    let seeds = seed.map(|s| vec![s]).unwrap_or_else(|| cfg.seeds.clone());
    let (report, best) = sweep(cfg, &seeds)?;
    std::fs::write(dir.join("sweep.json"), serde_json::to_string_pretty(&report)? + "\n")?;
    let rerun = cfg.pool.sizes().len() == 1 && report.entries.iter().all(|e| e.score.is_some());
    let summary = if rerun { Some(run_to_dir(&best, seed, dir)?) } else { None };
    Ok((report, summary))
}
