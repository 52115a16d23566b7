//! Success counting on Bernoulli-masked instances.
//!
//! With a zero-respecting algorithm and a zero-chain function, progress
//! from level `j` to `j + 1` needs a successful draw computed at a point
//! with `prog = j`. If that is the `η_{j+1}`-th draw at level `j`, it cannot
//! arrive earlier than `t̂_{η_{j+1}}` after level `j` was first reached, where
//! `t̂` is the sorted multiset `{mτ_i : m >= 1}`. Summing,
//! `t^{k(j)} >= Σ_{i<=j} t̂_{η_i}`.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::pool::WorkerPool;
use crate::protocol::trace::{EventKind, Trace};

/// Relative slack when comparing simulated times with the bound.
const TIME_TOL: f64 = 1e-12;

/// The `m` smallest elements of `{jτ_i : j >= 1, i in [n]}`, ascending.
pub fn earliest_completion_times(pool: &WorkerPool, m: usize) -> Vec<f64> {
    let mut heap: BinaryHeap<Reverse<(u64, u64, usize)>> = BinaryHeap::new();
    // key on the bit pattern: positive finite f64 order equals u64 order
    for (i, &tau) in pool.delays().iter().enumerate() {
        heap.push(Reverse((tau.to_bits(), 1, i)));
    }
    let mut out = Vec::with_capacity(m);
    while out.len() < m {
        let Reverse((bits, j, i)) = heap.pop().expect("heap never empties");
        out.push(f64::from_bits(bits));
        let next = (j + 1) as f64 * pool.tau(i);
        heap.push(Reverse((next.to_bits(), j + 1, i)));
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    /// Progress level `j >= 1`.
    pub level: usize,
    /// `η_j`: 1-based index of the first success among draws computed at
    /// points with `prog = j − 1`.
    pub eta: Option<usize>,
    /// Protocol step whose reply carried that success.
    pub success_step: Option<usize>,
    /// `k(j)`: first step with `prog(x^k) = j`.
    pub first_step: Option<usize>,
    /// `t^{k(j)}`.
    pub reached_at: Option<f64>,
    /// `Σ_{i<=j} t̂_{η_i}` when every `η_i` is known.
    pub bound: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuccessLedger {
    pub levels: Vec<LevelRecord>,
    /// `t̂_1, ..., t̂_M` up to the largest `η` seen.
    pub completion_times: Vec<f64>,
    /// Empty iff every reached level satisfies the counting bound and was
    /// preceded by a successful draw.
    pub violations: Vec<String>,
}

impl SuccessLedger {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ledger serializes")
    }
}

/// Extracts `η_j` and checks `t^{k(j)} >= Σ_{i<=j} t̂_{η_i}` at every
/// reached level. Needs a protocol trace over delayed or interruptible
/// oracles with a Bernoulli estimator.
pub fn success_ledger(trace: &Trace, pool: &WorkerPool) -> Result<SuccessLedger> {
    let delivers: Vec<_> = trace.events.iter().filter(|e| e.event == EventKind::Deliver).collect();
    if delivers.iter().any(|e| e.success.is_none() || e.stored_prog.is_none()) {
        return Err(Error::IncompatibleTrace("deliveries lack Bernoulli outcomes".into()));
    }
    if delivers.iter().any(|e| e.included != Some(1)) {
        return Err(Error::IncompatibleTrace("ledger needs one draw per delivery".into()));
    }
    let max_prog = trace.events.iter().map(|e| e.prog).max().unwrap_or(0);
    let top = max_prog + 1;

    // per level j−1: count of draws seen, and the first success
    let mut counts = vec![0usize; top + 1];
    let mut eta: Vec<Option<(usize, usize)>> = vec![None; top + 1];
    let mut first: Vec<Option<(usize, f64)>> = vec![None; top + 1];
    let mut violations = Vec::new();
    let mut successes_so_far = 0usize;
    let mut prev_prog = 0usize;
    for e in &trace.events {
        if e.prog <= top && first[e.prog].is_none() {
            first[e.prog] = Some((e.k, e.time));
        }
        if e.prog > prev_prog + 1 {
            violations.push(format!("step {}: prog jumped from {} to {}", e.k, prev_prog, e.prog));
        }
        if e.prog > successes_so_far {
            violations.push(format!(
                "step {}: prog {} exceeds the {} successful draws received",
                e.k, e.prog, successes_so_far
            ));
        }
        prev_prog = e.prog;
        if e.event == EventKind::Deliver {
            let level = e.stored_prog.unwrap();
            if level < top {
                counts[level] += 1;
                if e.success == Some(true) && eta[level].is_none() {
                    eta[level] = Some((counts[level], e.k + 1));
                    successes_so_far += 1;
                }
            }
        }
    }

    let max_eta = eta.iter().flatten().map(|(n, _)| *n).max().unwrap_or(0);
    let t_hat = earliest_completion_times(pool, max_eta.max(1));
    let mut levels = Vec::new();
    let mut sum = Some(0.0);
    for j in 1..=top {
        let e = eta[j - 1];
        sum = match (sum, e) {
            (Some(s), Some((n, _))) => Some(s + t_hat[n - 1]),
            _ => None,
        };
        let reached = first.get(j).copied().flatten();
        if reached.is_none() && e.is_none() {
            break;
        }
        if let Some((k, t)) = reached {
            match (sum, e) {
                (Some(b), Some((_, step))) => {
                    // the clock accumulates τ step by step while t̂ uses mτ
                    if t < b - TIME_TOL * b.max(1.0) {
                        violations.push(format!("level {j}: reached at {t} < bound {b}"));
                    }
                    if step > k {
                        violations.push(format!("level {j}: reached at step {k} before its success at step {step}"));
                    }
                }
                _ => violations.push(format!("level {j}: reached without a successful draw at every lower level")),
            }
        }
        levels.push(LevelRecord {
            level: j,
            eta: e.map(|(n, _)| n),
            success_step: e.map(|(_, s)| s),
            first_step: reached.map(|(k, _)| k),
            reached_at: reached.map(|(_, t)| t),
            bound: sum,
        });
    }
    Ok(SuccessLedger { levels, completion_times: t_hat, violations })
}
