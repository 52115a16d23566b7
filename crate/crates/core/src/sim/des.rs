use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::sync::Arc;

use crate::error::{param, Error, Result};
use crate::model::estimator::Estimator;
use crate::model::point::Point;
use crate::model::pool::WorkerPool;
use crate::model::problem::ProblemSpec;
use crate::model::rng::RngContract;
use crate::model::time::VirtualTime;
use crate::optimizers::{Assignment, Report, ServerLogic};
use crate::protocol::trace::{EventKind, StopReason, StopRule, Trace, TraceEvent, TraceSource};
use crate::scalar::Real;

pub struct DesSetup<'a, T: Real> {
    pub pool: &'a WorkerPool,
    /// One estimator for all workers, or one per worker.
    pub estimators: &'a [Estimator<T>],
    pub problem: &'a ProblemSpec<T>,
    pub stop: StopRule,
    pub seed: u64,
    /// Record every `record_every`-th server step (the initial point and the
    /// final step are always recorded).
    pub record_every: usize,
}

impl<'a, T: Real> DesSetup<'a, T> {
    pub fn new(
        pool: &'a WorkerPool,
        estimators: &'a [Estimator<T>],
        problem: &'a ProblemSpec<T>,
        stop: StopRule,
        seed: u64,
    ) -> Self {
        DesSetup { pool, estimators, problem, stop, seed, record_every: 1 }
    }
}

struct Slot<T> {
    point: Arc<Point<T>>,
    tag: usize,
}

/// Runs a server logic with every worker `i` taking exactly `τ_i` per
/// gradient. Completions are processed in (time, order scheduled) order.
///
/// Trace events are server steps; `k` is the iteration after the step and
/// metrics are evaluated at the server's output point.
pub fn des_run<T: Real, S: ServerLogic<T> + ?Sized>(server: &mut S, setup: &DesSetup<'_, T>) -> Result<Trace> {
    setup.stop.validate()?;
    let pool = setup.pool;
    let n = pool.len();
    let d = setup.problem.dim();
    if setup.estimators.len() != 1 && setup.estimators.len() != n {
        return Err(param(format!("expected 1 or {n} estimators")));
    }
    if setup.estimators.iter().any(|e| e.dim() != d) {
        return Err(Error::InvalidDimension("estimator and problem dimensions differ".into()));
    }
    let every = setup.record_every.max(1);
    let est = |i: usize| if setup.estimators.len() == 1 { &setup.estimators[0] } else { &setup.estimators[i] };
    let mut rngs = RngContract::new(setup.seed).workers(n);
    let f_star = setup.problem.optimum.map(|v| v.as_f64());

    let mut slots: Vec<Option<Slot<T>>> = (0..n).map(|_| None).collect();
    let mut heap: BinaryHeap<Reverse<(VirtualTime, u64, usize)>> = BinaryHeap::new();
    let mut seq = 0u64;
    let mut assign = |a: Assignment<T>, now: VirtualTime, slots: &mut Vec<Option<Slot<T>>>, heap: &mut BinaryHeap<_>| {
        if a.worker >= n {
            return Err(param(format!("assignment to worker {} of {n}", a.worker)));
        }
        if slots[a.worker].is_some() {
            return Err(param(format!("worker {} assigned while busy", a.worker)));
        }
        slots[a.worker] = Some(Slot { point: a.point, tag: a.tag });
        heap.push(Reverse((now + pool.tau(a.worker), seq, a.worker)));
        seq += 1;
        Ok(())
    };
    for a in server.start(pool)? {
        assign(a, VirtualTime::ZERO, &mut slots, &mut heap)?;
    }

    let mut events = vec![TraceEvent::at(0, 0.0, EventKind::Init, setup.problem, &server.output())];
    if setup.stop.threshold_hit(events[0].f, events[0].grad_norm_sq, f_star) {
        return Ok(finish(events, StopReason::Threshold, f_star, pool, 0, 0));
    }
    let mut deliveries = 0u64;
    let mut ignored = 0u64;
    // (time, worker, delay) of the latest step
    let mut last_step: Option<(f64, usize, Option<usize>)> = None;
    let stop = loop {
        if setup.stop.max_steps.is_some_and(|m| server.iteration() >= m) {
            break StopReason::MaxSteps;
        }
        let Some(Reverse((t, _, i))) = heap.pop() else {
            break StopReason::Exhausted;
        };
        if setup.stop.max_time.is_some_and(|m| t.seconds() > m) {
            break StopReason::MaxTime;
        }
        let slot = slots[i].take().expect("completion for an assigned worker");
        deliveries += 1;
        let grad = if server.accepts(i, slot.tag) {
            est(i).draw(&slot.point, &mut rngs[i]).grad
        } else {
            Point::zeros(d)
        };
        let reaction = server.on_report(Report { worker: i, tag: slot.tag, grad });
        if !reaction.accepted {
            ignored += 1;
        }
        for a in reaction.assignments {
            assign(a, t, &mut slots, &mut heap)?;
        }
        if !reaction.stepped {
            continue;
        }
        let k = server.iteration();
        last_step = Some((t.seconds(), i, reaction.delay));
        let last = setup.stop.max_steps.is_some_and(|m| k >= m);
        let watch = setup.stop.threshold.is_some();
        if k % every == 0 || last || watch {
            let mut ev = TraceEvent::at(k, t.seconds(), EventKind::Step, setup.problem, &server.output());
            ev.worker = Some(i);
            ev.delay = reaction.delay;
            ev.delivered = deliveries;
            let hit = setup.stop.threshold_hit(ev.f, ev.grad_norm_sq, f_star);
            if k % every == 0 || last || hit {
                events.push(ev);
            }
            if hit {
                break StopReason::Threshold;
            }
        }
    };
    if let Some((t, i, delay)) = last_step {
        if events.last().is_some_and(|e| e.k != server.iteration()) {
            let mut ev = TraceEvent::at(server.iteration(), t, EventKind::Step, setup.problem, &server.output());
            ev.worker = Some(i);
            ev.delay = delay;
            ev.delivered = deliveries;
            events.push(ev);
        }
    }
    Ok(finish(events, stop, f_star, pool, deliveries, ignored))
}

fn finish(
    events: Vec<TraceEvent>,
    stop: StopReason,
    f_star: Option<f64>,
    pool: &WorkerPool,
    deliveries: u64,
    ignored: u64,
) -> Trace {
    Trace {
        source: TraceSource::Simulation,
        events,
        stop,
        f_star,
        delays: Some(pool.delays().to_vec()),
        deliveries,
        ignored,
    }
}
