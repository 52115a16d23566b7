use serde::Serialize;

use crate::complexity::{convex_bounds, time_bounds, ComplexityReport};
use crate::error::{config, Result};
use crate::experiments::config::RunConfig;
use crate::experiments::run::Summary;

/// Bound expressions for one pool size, with measured times when a run
/// summary is at hand.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundsRow {
    pub n: usize,
    pub bounds: Vec<ComplexityReport>,
    /// `(method, mean time to target)` from the summary.
    pub measured: Vec<(String, Option<f64>)>,
}

/// Evaluates the complexity expressions for each pool size of the config,
/// using the problem's constants, `theorem.eps` and the theorem's (or the
/// estimator's) `σ²`.
pub fn bounds_report(cfg: &RunConfig, summary: Option<&Summary>) -> Result<Vec<BoundsRow>> {
    let th = cfg.theorem.as_ref().ok_or_else(|| config("report: needs a [theorem] block for eps"))?;
    let mut rows = Vec::new();
    for n in cfg.pool.sizes() {
        let pool = cfg.pool.build(n)?;
        let inst = cfg.instance(&pool)?;
        let sigma2 = match th.sigma2 {
            Some(s) => s,
            None => inst.estimators.iter().map(|e| e.variance_bound()).fold(0.0, f64::max),
        };
        if !sigma2.is_finite() {
            return Err(config("theorem.sigma2: the estimator has no finite variance bound; set it"));
        }
        let taus = pool.sorted();
        let p = &inst.problem;
        let mut bounds = Vec::new();
        if p.gap > 0.0 {
            bounds.push(time_bounds(&taus, p.smoothness, p.gap, sigma2, th.eps)?);
        }
        if let Some(cv) = p.convex.as_ref() {
            if let Some(r) = cv.radius.filter(|r| *r > 0.0) {
                bounds.push(convex_bounds(&taus, Some(p.smoothness), cv.lipschitz, r, sigma2, th.eps)?);
            }
        }
        let measured = summary
            .map(|s| {
                s.methods.iter().filter(|m| m.n == n).map(|m| (m.method.clone(), m.mean_time_to_target)).collect()
            })
            .unwrap_or_default();
        rows.push(BoundsRow { n, bounds, measured });
    }
    Ok(rows)
}

pub fn render(rows: &[BoundsRow]) -> String {
    let mut out = String::new();
    for row in rows {
        out += &format!("n = {}\n", row.n);
        for b in &row.bounds {
            out += &b.to_table();
        }
        if !row.measured.is_empty() {
            out += "measured mean time to target\n";
            for (m, t) in &row.measured {
                let t = t.map(|t| format!("{t:.6e}")).unwrap_or_else(|| "not reached".into());
                out += &format!("  {m:<16} {t}\n");
            }
        }
        out.push('\n');
    }
    out
}
