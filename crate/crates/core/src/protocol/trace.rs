use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::hard::prog;
use crate::model::problem::ProblemSpec;
use crate::model::time::VirtualTime;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    /// `‖∇f(x)‖²`
    GradNormSq,
    /// `f(x) − f*`
    Suboptimality,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub criterion: Criterion,
    pub eps: f64,
}

/// When to stop a run. The first limit reached wins; at least one of
/// `max_steps` and `max_time` is required.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StopRule {
    pub max_steps: Option<usize>,
    pub max_time: Option<f64>,
    pub threshold: Option<Threshold>,
}

impl StopRule {
    pub fn steps(k: usize) -> Self {
        StopRule { max_steps: Some(k), ..Default::default() }
    }

    pub fn time(t: f64) -> Self {
        StopRule { max_time: Some(t), ..Default::default() }
    }

    pub fn with_threshold(mut self, criterion: Criterion, eps: f64) -> Self {
        self.threshold = Some(Threshold { criterion, eps });
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_steps.is_none() && self.max_time.is_none() {
            return Err(Error::Unbounded);
        }
        if let Some(t) = self.max_time {
            if !(t.is_finite() && t >= 0.0) {
                return Err(param("max_time must be finite and >= 0"));
            }
        }
        if let Some(th) = self.threshold {
            if !(th.eps > 0.0) {
                return Err(param("threshold eps must be positive"));
            }
        }
        Ok(())
    }

    pub(crate) fn threshold_hit(&self, f: f64, grad_norm_sq: f64, f_star: Option<f64>) -> bool {
        match self.threshold {
            None => false,
            Some(th) => metric(th.criterion, f, grad_norm_sq, f_star).is_some_and(|v| v <= th.eps),
        }
    }
}

fn metric(c: Criterion, f: f64, g: f64, f_star: Option<f64>) -> Option<f64> {
    match c {
        Criterion::GradNormSq => Some(g),
        Criterion::Suboptimality => f_star.map(|fs| f - fs),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    /// Oracle started a computation.
    Start,
    /// Oracle busy, returned 0.
    Pending,
    /// Oracle delivered a gradient.
    Deliver,
    /// Computation discarded by the control bit.
    Interrupt,
    /// Synchronized oracle reset before any worker finished.
    Wasted,
    /// Run ended before this query reached an oracle.
    Halt,
    /// Initial iterate of a server-driven run.
    Init,
    /// Server updated its iterate.
    Step,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Start => "start",
            EventKind::Pending => "pending",
            EventKind::Deliver => "deliver",
            EventKind::Interrupt => "interrupt",
            EventKind::Wasted => "wasted",
            EventKind::Halt => "halt",
            EventKind::Init => "init",
            EventKind::Step => "step",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceSource {
    Classical,
    Protocol,
    Simulation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxSteps,
    MaxTime,
    Threshold,
    /// A server-driven run had nothing left to do.
    Exhausted,
}

/// One protocol step (or one server step for simulations).
///
/// For protocol traces, event `k` holds the query point `x^k`, its time
/// `t^k` (`t^0 = 0`), the action `(t^{k+1}, i^{k+1})` and the oracle reply
/// `g^{k+1}`. Metrics are exact, evaluated at `x^k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub k: usize,
    pub time: f64,
    pub query_time: Option<f64>,
    pub worker: Option<usize>,
    pub event: EventKind,
    pub f: f64,
    pub grad_norm_sq: f64,
    pub prog: usize,
    /// Iteration delay `δ_k` of the gradient applied at this step.
    pub delay: Option<usize>,
    /// Number of draws summed into the reply.
    pub included: Option<usize>,
    pub success: Option<bool>,
    /// `prog` of the point the delivered gradient was computed at.
    pub stored_prog: Option<usize>,
    pub control: bool,
    /// Gradients delivered so far, including this event's.
    pub delivered: u64,
    pub query_support: Option<Vec<usize>>,
    pub grad_support: Option<Vec<usize>>,
    pub point: Option<Vec<f64>>,
}

impl TraceEvent {
    pub(crate) fn at<T: Real>(k: usize, time: f64, event: EventKind, problem: &ProblemSpec<T>, x: &[T]) -> Self {
        let g = problem.gradient(x);
        TraceEvent {
            k,
            time,
            query_time: None,
            worker: None,
            event,
            f: problem.value(x).as_f64(),
            grad_norm_sq: g.norm_sq().as_f64(),
            prog: prog(x),
            delay: None,
            included: None,
            success: None,
            stored_prog: None,
            control: false,
            delivered: 0,
            query_support: None,
            grad_support: None,
            point: None,
        }
    }
}

/// Options for what a trace records beyond the metrics.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordOptions {
    /// Supports of query points and replies (for the zero-respecting check).
    pub supports: bool,
    /// Full coordinates of every recorded point.
    pub points: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub source: TraceSource,
    pub events: Vec<TraceEvent>,
    pub stop: StopReason,
    pub f_star: Option<f64>,
    /// Worker delays, when the run had workers.
    pub delays: Option<Vec<f64>>,
    pub deliveries: u64,
    /// Server reports dropped as stale.
    pub ignored: u64,
}

impl Trace {
    pub fn last(&self) -> &TraceEvent {
        self.events.last().expect("traces are never empty")
    }

    /// CSV with header `k,t,worker,event,f,grad_norm_sq,prog`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,t,worker,event,f,grad_norm_sq,prog\n");
        for e in &self.events {
            let w = e.worker.map(|w| w.to_string()).unwrap_or_default();
            writeln!(out, "{},{},{},{},{},{},{}", e.k, e.time, w, e.event.as_str(), e.f, e.grad_norm_sq, e.prog)
                .unwrap();
        }
        out
    }
}

/// First time at which the criterion is at most `eps`, or `None` if the
/// trace never gets there.
pub fn measure_time_to_epsilon(trace: &Trace, criterion: Criterion, eps: f64) -> Result<Option<VirtualTime>> {
    if !(eps > 0.0) {
        return Err(param("eps must be positive"));
    }
    if criterion == Criterion::Suboptimality && trace.f_star.is_none() {
        return Err(param("suboptimality needs f*"));
    }
    let best = trace
        .events
        .iter()
        .filter(|e| metric(criterion, e.f, e.grad_norm_sq, trace.f_star).is_some_and(|v| v <= eps))
        .map(|e| e.time)
        .fold(None, |m: Option<f64>, t| Some(m.map_or(t, |m| m.min(t))));
    best.map(VirtualTime::new).transpose()
}

/// `supp(x^k) ⊄ ∪_{j<=k} supp(g^j)` at step `k`: the offending coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ZeroViolation {
    pub step: usize,
    pub coords: Vec<usize>,
}

/// Checks that every query point lies in the span of coordinates touched
/// by earlier replies. Events without recorded supports are skipped.
pub fn check_zero_respecting(trace: &Trace) -> Vec<ZeroViolation> {
    let mut seen: Vec<bool> = Vec::new();
    let mut out = Vec::new();
    for e in &trace.events {
        if let Some(q) = &e.query_support {
            let bad: Vec<usize> = q.iter().copied().filter(|&c| !seen.get(c).copied().unwrap_or(false)).collect();
            if !bad.is_empty() {
                out.push(ZeroViolation { step: e.k, coords: bad });
            }
        }
        if let Some(g) = &e.grad_support {
            for &c in g {
                if c >= seen.len() {
                    seen.resize(c + 1, false);
                }
                seen[c] = true;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(k: usize, time: f64, g: f64) -> TraceEvent {
        TraceEvent {
            k,
            time,
            query_time: None,
            worker: None,
            event: EventKind::Step,
            f: 0.0,
            grad_norm_sq: g,
            prog: 0,
            delay: None,
            included: None,
            success: None,
            stored_prog: None,
            control: false,
            delivered: 0,
            query_support: None,
            grad_support: None,
            point: None,
        }
    }

    fn trace(events: Vec<TraceEvent>) -> Trace {
        Trace {
            source: TraceSource::Simulation,
            events,
            stop: StopReason::MaxSteps,
            f_star: None,
            delays: None,
            deliveries: 0,
            ignored: 0,
        }
    }

    #[test]
    fn time_to_epsilon_examples() {
        let t = trace(vec![ev(0, 0.0, 4.0), ev(1, 7.0, 0.5)]);
        assert_eq!(measure_time_to_epsilon(&t, Criterion::GradNormSq, 1.0).unwrap().unwrap().seconds(), 7.0);
        assert_eq!(measure_time_to_epsilon(&t, Criterion::GradNormSq, 5.0).unwrap().unwrap().seconds(), 0.0);
        assert_eq!(measure_time_to_epsilon(&t, Criterion::GradNormSq, 0.1).unwrap(), None);
        assert!(measure_time_to_epsilon(&t, Criterion::GradNormSq, 0.0).is_err());
        assert!(measure_time_to_epsilon(&t, Criterion::Suboptimality, 1.0).is_err());
    }

    #[test]
    fn zero_respecting_flags_injected_coordinate() {
        let mut a = ev(0, 0.0, 1.0);
        a.query_support = Some(vec![]);
        a.grad_support = Some(vec![0]);
        let mut b = ev(1, 1.0, 1.0);
        b.query_support = Some(vec![0, 3]);
        let v = check_zero_respecting(&trace(vec![a, b]));
        assert_eq!(v, vec![ZeroViolation { step: 1, coords: vec![3] }]);
    }

    #[test]
    fn stop_rule_validation() {
        assert!(matches!(StopRule::default().validate(), Err(Error::Unbounded)));
        assert!(StopRule::steps(3).validate().is_ok());
        assert!(StopRule::time(1.0).with_threshold(Criterion::GradNormSq, 0.0).validate().is_err());
    }
}
