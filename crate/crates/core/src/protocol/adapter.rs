//! Server-style methods as protocol algorithms.
//!
//! The adapter knows the delays, so it can replay the worker loop in
//! virtual time: every assignment becomes a query that starts worker `i`
//! at the current time, and every completion at `s + τ_i` becomes a query
//! to worker `i` that collects the gradient. Completions are processed in
//! `(time, order of assignment)` order. Collection queries carry the
//! current iterate; the oracle ignores it.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use crate::error::Result;
use crate::model::point::Point;
use crate::model::pool::WorkerPool;
use crate::model::time::VirtualTime;
use crate::optimizers::{Assignment, Report, ServerLogic};
use crate::protocol::engine::{AlgorithmAction, TimeAlgorithm};
use crate::scalar::Real;

pub struct ServerAlgorithm<T, S> {
    server: S,
    pool: WorkerPool,
    starts: VecDeque<Assignment<T>>,
    heap: BinaryHeap<Reverse<(VirtualTime, u64, usize)>>,
    tags: Vec<Option<usize>>,
    seq: u64,
    now: VirtualTime,
    collecting: Option<usize>,
}

impl<T: Real, S: ServerLogic<T>> ServerAlgorithm<T, S> {
    pub fn new(mut server: S, pool: WorkerPool) -> Result<Self> {
        let starts = server.start(&pool)?.into();
        let n = pool.len();
        Ok(ServerAlgorithm {
            server,
            pool,
            starts,
            heap: BinaryHeap::new(),
            tags: vec![None; n],
            seq: 0,
            now: VirtualTime::ZERO,
            collecting: None,
        })
    }

    pub fn server(&self) -> &S {
        &self.server
    }

    pub fn into_server(self) -> S {
        self.server
    }
}

impl<T: Real, S: ServerLogic<T>> TimeAlgorithm<T> for ServerAlgorithm<T, S> {
    fn act(&mut self, _k: usize, reply: Option<&Point<T>>) -> AlgorithmAction<T> {
        if let (Some(i), Some(g)) = (self.collecting.take(), reply) {
            let tag = self.tags[i].take().expect("collected worker had a tag");
            let reaction = self.server.on_report(Report { worker: i, tag, grad: g.clone() });
            self.starts.extend(reaction.assignments);
        }
        if let Some(a) = self.starts.pop_front() {
            debug_assert!(self.tags[a.worker].is_none(), "worker {} is busy", a.worker);
            self.tags[a.worker] = Some(a.tag);
            let done = self.now + self.pool.tau(a.worker);
            self.heap.push(Reverse((done, self.seq, a.worker)));
            self.seq += 1;
            return AlgorithmAction::new(self.now, a.worker, (*a.point).clone());
        }
        match self.heap.pop() {
            Some(Reverse((t, _, i))) => {
                self.now = t;
                self.collecting = Some(i);
                AlgorithmAction::new(t, i, self.server.iterate().clone())
            }
            // nothing in flight: idle query at the current time
            None => AlgorithmAction::new(self.now, 0, self.server.iterate().clone()),
        }
    }
}
