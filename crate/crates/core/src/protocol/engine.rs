//! Protocol runners.
//!
//! Each step `k` the algorithm emits `(t^{k+1}, i^{k+1}, c^k, x^k)` from
//! the replies `g^1..g^k`, and oracle `i^{k+1}` answers with `g^{k+1}`.
//! Only the queried oracle's state changes.

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::hard::prog;
use crate::model::estimator::Estimator;
use crate::model::point::Point;
use crate::model::pool::WorkerPool;
use crate::model::problem::ProblemSpec;
use crate::model::rng::RngContract;
use crate::model::time::VirtualTime;
use crate::oracles::{
    delayed_oracle_step, interruptible_oracle_step, sync_oracle_step, Branch, OracleReply, OracleState,
};
use crate::protocol::trace::{EventKind, RecordOptions, StopReason, StopRule, Trace, TraceEvent, TraceSource};
use crate::scalar::Real;

/// One protocol step's output.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgorithmAction<T> {
    pub t_next: VirtualTime,
    /// Oracle to query; ignored by the synchronized oracle. May be omitted
    /// when there is a single worker.
    pub worker: Option<usize>,
    /// Interrupt bit, honoured only by interruptible oracles.
    pub control: bool,
    pub query: Point<T>,
}

impl<T> AlgorithmAction<T> {
    pub fn new(t_next: VirtualTime, worker: usize, query: Point<T>) -> Self {
        AlgorithmAction { t_next, worker: Some(worker), control: false, query }
    }
}

/// An algorithm in the time-oracle protocols: a sequence of maps
/// `A^k(g^1, ..., g^k)`. Implementations keep whatever history they need.
pub trait TimeAlgorithm<T: Real> {
    /// `reply` is `g^k`; `None` only at `k = 0`.
    fn act(&mut self, k: usize, reply: Option<&Point<T>>) -> AlgorithmAction<T>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    Delayed,
    Interruptible,
    Sync,
}

/// Everything a protocol run needs besides the algorithm.
pub struct ProtocolSetup<'a, T: Real> {
    pub pool: &'a WorkerPool,
    /// One estimator shared by all oracles, or one per worker.
    pub estimators: &'a [Estimator<T>],
    pub problem: &'a ProblemSpec<T>,
    pub oracle: OracleKind,
    pub stop: StopRule,
    pub seed: u64,
    pub record: RecordOptions,
}

impl<T: Real> ProtocolSetup<'_, T> {
    fn estimator(&self, i: usize) -> &Estimator<T> {
        if self.estimators.len() == 1 {
            &self.estimators[0]
        } else {
            &self.estimators[i]
        }
    }

    fn validate(&self) -> Result<()> {
        self.stop.validate()?;
        let n = self.pool.len();
        if self.estimators.len() != 1 && self.estimators.len() != n {
            return Err(param(format!("expected 1 or {n} estimators, got {}", self.estimators.len())));
        }
        if self.estimators.iter().any(|e| e.dim() != self.problem.dim()) {
            return Err(Error::InvalidDimension("estimator and problem dimensions differ".into()));
        }
        if self.oracle == OracleKind::Sync && self.estimators.len() != 1 {
            return Err(param("the synchronized oracle takes a single estimator"));
        }
        Ok(())
    }
}

fn event_kind(b: Branch) -> EventKind {
    match b {
        Branch::Start => EventKind::Start,
        Branch::Pending => EventKind::Pending,
        Branch::Deliver => EventKind::Deliver,
        Branch::Interrupt => EventKind::Interrupt,
        Branch::Wasted => EventKind::Wasted,
    }
}

/// Runs the time multiple-oracle protocol (or, with `OracleKind::Sync`, the
/// single synchronized oracle).
pub fn run_time_protocol<T: Real, A: TimeAlgorithm<T> + ?Sized>(
    algorithm: &mut A,
    setup: &ProtocolSetup<'_, T>,
) -> Result<Trace> {
    setup.validate()?;
    let n = setup.pool.len();
    let d = setup.problem.dim();
    let contract = RngContract::new(setup.seed);
    let mut rngs = contract.workers(n);
    let mut states: Vec<OracleState<T>> = vec![OracleState::idle(); n];
    let mut sync_state: OracleState<T> = OracleState::idle();
    let sorted = setup.pool.sorted();
    let f_star = setup.problem.optimum.map(|v| v.as_f64());

    let mut events = Vec::new();
    let mut t_k = VirtualTime::ZERO;
    let mut reply: Option<OracleReply<T>> = None;
    let mut delivered = 0u64;
    let mut k = 0usize;
    let stop = loop {
        let g = reply.as_ref().map(|r| r.dense(d));
        let action = algorithm.act(k, g.as_ref());
        if action.query.dim() != d {
            return Err(Error::ProtocolViolation { step: k, reason: format!("query has dimension {}", action.query.dim()) });
        }
        if action.t_next < t_k {
            return Err(Error::ProtocolViolation {
                step: k,
                reason: format!("time went backwards: t^{} = {} < t^{} = {}", k + 1, action.t_next, k, t_k),
            });
        }
        let mut ev = TraceEvent::at(k, t_k.seconds(), EventKind::Halt, setup.problem, &action.query);
        if setup.record.supports {
            ev.query_support = Some(action.query.support());
        }
        if setup.record.points {
            ev.point = Some(action.query.to_f64());
        }
        ev.query_time = Some(action.t_next.seconds());
        ev.control = action.control;
        ev.delivered = delivered;

        let halt = if setup.stop.threshold_hit(ev.f, ev.grad_norm_sq, f_star) {
            Some(StopReason::Threshold)
        } else if setup.stop.max_steps.is_some_and(|m| k >= m) {
            Some(StopReason::MaxSteps)
        } else if setup.stop.max_time.is_some_and(|m| action.t_next.seconds() > m) {
            Some(StopReason::MaxTime)
        } else {
            None
        };
        if let Some(reason) = halt {
            events.push(ev);
            break reason;
        }

        let r = match setup.oracle {
            OracleKind::Sync => {
                let s = std::mem::take(&mut sync_state);
                let (s, r) = sync_oracle_step(action.t_next, &action.query, s, &mut rngs, &sorted, setup.estimator(0))?;
                sync_state = s;
                r
            }
            kind => {
                let i = match action.worker {
                    Some(i) => i,
                    None if n == 1 => 0,
                    None => {
                        return Err(Error::ProtocolViolation { step: k, reason: "no worker index".into() });
                    }
                };
                if i >= n {
                    return Err(Error::ProtocolViolation {
                        step: k,
                        reason: format!("worker index {i} out of range 0..{n}"),
                    });
                }
                ev.worker = Some(i);
                let s = std::mem::take(&mut states[i]);
                let tau = setup.pool.tau(i);
                let est = setup.estimator(i);
                let (s, r) = if kind == OracleKind::Interruptible {
                    interruptible_oracle_step(action.t_next, &action.query, s, action.control, &mut rngs[i], tau, est)
                } else {
                    delayed_oracle_step(action.t_next, &action.query, s, &mut rngs[i], tau, est)
                };
                states[i] = s;
                r
            }
        };
        ev.event = event_kind(r.branch);
        if r.branch == Branch::Deliver {
            delivered += r.included as u64;
            ev.included = Some(r.included);
            ev.success = r.success;
            ev.stored_prog = r.stored_prog;
        }
        ev.delivered = delivered;
        if setup.record.supports {
            ev.grad_support = Some(r.grad.as_ref().map(|g| g.support()).unwrap_or_default());
        }
        events.push(ev);
        t_k = action.t_next;
        reply = Some(r);
        k += 1;
    };
    Ok(Trace {
        source: TraceSource::Protocol,
        events,
        stop,
        f_star,
        delays: Some(setup.pool.delays().to_vec()),
        deliveries: delivered,
        ignored: 0,
    })
}

/// An algorithm for the classical oracle protocol: `x^k = A^k(g^1..g^k)`.
pub trait ClassicalAlgorithm<T: Real> {
    fn next_point(&mut self, k: usize, grad: Option<&Point<T>>) -> Point<T>;
}

/// Classical protocol: every step queries the estimator at `x^k`. Times are
/// iteration counts. Requires `max_steps`.
pub fn run_classical_protocol<T: Real, A: ClassicalAlgorithm<T> + ?Sized>(
    algorithm: &mut A,
    est: &Estimator<T>,
    problem: &ProblemSpec<T>,
    stop: &StopRule,
    seed: u64,
    record: RecordOptions,
) -> Result<Trace> {
    stop.validate()?;
    let max = stop.max_steps.ok_or(Error::Unbounded)?;
    let mut rng = RngContract::new(seed).worker(0);
    let f_star = problem.optimum.map(|v| v.as_f64());
    let mut events = Vec::new();
    let mut g: Option<Point<T>> = None;
    let mut reason = StopReason::MaxSteps;
    for k in 0..=max {
        let x = algorithm.next_point(k, g.as_ref());
        let mut ev = TraceEvent::at(k, k as f64, EventKind::Halt, problem, &x);
        ev.delivered = k as u64;
        if record.supports {
            ev.query_support = Some(x.support());
        }
        if record.points {
            ev.point = Some(x.to_f64());
        }
        if stop.threshold_hit(ev.f, ev.grad_norm_sq, f_star) {
            reason = StopReason::Threshold;
            events.push(ev);
            break;
        }
        if k == max {
            events.push(ev);
            break;
        }
        let draw = est.draw(&x, &mut rng);
        ev.event = EventKind::Deliver;
        ev.included = Some(1);
        ev.success = draw.success;
        ev.stored_prog = Some(prog(&x));
        ev.delivered = k as u64 + 1;
        if record.supports {
            ev.grad_support = Some(draw.grad.support());
        }
        events.push(ev);
        g = Some(draw.grad);
    }
    let deliveries = events.last().map_or(0, |e| e.delivered);
    Ok(Trace { source: TraceSource::Classical, events, stop: reason, f_star, delays: None, deliveries, ignored: 0 })
}

/// Runs a classical algorithm against one delayed oracle:
/// even steps `k` query `A^{k/2}(g², g⁴, ...)` at time `τ⌊k/2⌋`, odd steps
/// collect the gradient at `τ(⌊k/2⌋ + 1)` with a zero query point.
pub struct TimeWrapped<A> {
    inner: A,
    tau: f64,
    last: Option<usize>,
}

impl<A> TimeWrapped<A> {
    pub fn new(inner: A, tau: f64) -> Self {
        TimeWrapped { inner, tau, last: None }
    }

    pub fn into_inner(self) -> A {
        self.inner
    }
}

impl<T: Real, A: ClassicalAlgorithm<T>> TimeAlgorithm<T> for TimeWrapped<A> {
    fn act(&mut self, k: usize, reply: Option<&Point<T>>) -> AlgorithmAction<T> {
        let half = k / 2;
        if k % 2 == 0 {
            // g^k with k even is the reply to the previous collection step
            let x = self.inner.next_point(half, if k == 0 { None } else { reply });
            self.last = Some(x.dim());
            let t = VirtualTime::new(self.tau * half as f64).expect("finite time");
            AlgorithmAction { t_next: t, worker: Some(0), control: false, query: x }
        } else {
            let d = self.last.expect("odd step follows an even one");
            let t = VirtualTime::new(self.tau * (half + 1) as f64).expect("finite time");
            AlgorithmAction { t_next: t, worker: Some(0), control: false, query: Point::zeros(d) }
        }
    }
}

/// Plain SGD `x^{k+1} = x^k − γ g^{k+1}` as a classical algorithm.
#[derive(Clone, Debug)]
pub struct ClassicalSgd<T> {
    pub x: Point<T>,
    pub gamma: T,
}

impl<T: Real> ClassicalAlgorithm<T> for ClassicalSgd<T> {
    fn next_point(&mut self, _k: usize, grad: Option<&Point<T>>) -> Point<T> {
        if let Some(g) = grad {
            self.x.axpy(-self.gamma, g);
        }
        self.x.clone()
    }
}

/// Classical minibatch SGD: every `batch` gradients, step with their mean.
/// Queries stay at the current iterate while a batch is being collected.
#[derive(Clone, Debug)]
pub struct ClassicalMinibatch<T> {
    pub x: Point<T>,
    pub gamma: T,
    pub batch: usize,
    acc: Option<Point<T>>,
    count: usize,
}

impl<T: Real> ClassicalMinibatch<T> {
    pub fn new(x: Point<T>, gamma: T, batch: usize) -> Self {
        ClassicalMinibatch { x, gamma, batch: batch.max(1), acc: None, count: 0 }
    }
}

impl<T: Real> ClassicalAlgorithm<T> for ClassicalMinibatch<T> {
    fn next_point(&mut self, _k: usize, grad: Option<&Point<T>>) -> Point<T> {
        if let Some(g) = grad {
            let s = T::one() / T::c(self.batch as f64);
            let acc = self.acc.get_or_insert_with(|| Point::zeros(g.dim()));
            acc.axpy(s, g);
            self.count += 1;
            if self.count == self.batch {
                let acc = self.acc.take().unwrap();
                self.x.axpy(-self.gamma, &acc);
                self.count = 0;
            }
        }
        self.x.clone()
    }
}
