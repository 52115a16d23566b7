//! Parallel SGD server logics.
//!
//! A server hands points to workers and reacts to their reports. The same
//! logic runs under the discrete-event simulator and, through
//! [`crate::protocol::ServerAlgorithm`], under the time-oracle protocol.

use std::sync::Arc;

use crate::error::Result;
use crate::model::point::Point;
use crate::model::pool::WorkerPool;
use crate::scalar::Real;

mod asynchronous;
mod hyper;
mod malenia;
mod minibatch;
mod rennala;
mod tuner;

pub use asynchronous::{AsyncSgd, StepsizeRule};
pub use hyper::{hyperparams_for, optimal_m, Constants, Hyperparams, Method};
pub use malenia::{harmonic_mean, Malenia};
pub use minibatch::{MMinibatch, SyncMinibatch};
pub use rennala::{AcceleratedRennala, Rennala};
pub use tuner::{grid_best, grid_evaluate, grid_search, powers_of_two, GridResult, APPENDIX_BATCHES};

/// Work order: compute a gradient at `point` and report it with `tag`.
#[derive(Clone, Debug, PartialEq)]
pub struct Assignment<T> {
    pub worker: usize,
    pub point: Arc<Point<T>>,
    pub tag: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report<T> {
    pub worker: usize,
    pub tag: usize,
    pub grad: Point<T>,
}

/// What the server did with a report.
#[derive(Clone, Debug, PartialEq)]
pub struct Reaction<T> {
    pub assignments: Vec<Assignment<T>>,
    /// The iterate changed.
    pub stepped: bool,
    /// The report contributed to an update (false for stale reports).
    pub accepted: bool,
    /// Iteration delay of the applied gradient, for methods that apply
    /// stale gradients.
    pub delay: Option<usize>,
}

impl<T> Reaction<T> {
    fn reassign(worker: usize, point: Arc<Point<T>>, tag: usize) -> Self {
        Reaction { assignments: vec![Assignment { worker, point, tag }], stepped: false, accepted: false, delay: None }
    }
}

pub trait ServerLogic<T: Real>: Send {
    fn name(&self) -> &'static str;

    /// Initial assignments; called once before any report.
    fn start(&mut self, pool: &WorkerPool) -> Result<Vec<Assignment<T>>>;

    /// Whether a report with this tag would be used. Executors may skip
    /// computing gradients that would be thrown away.
    fn accepts(&self, _worker: usize, _tag: usize) -> bool {
        true
    }

    fn on_report(&mut self, report: Report<T>) -> Reaction<T>;

    /// Current iterate `x^k`.
    fn iterate(&self) -> &Point<T>;

    /// Number of completed steps `k`.
    fn iteration(&self) -> usize;

    /// The point the method reports as its answer.
    fn output(&self) -> Point<T> {
        self.iterate().clone()
    }
}

impl<T: Real> ServerLogic<T> for Box<dyn ServerLogic<T>> {
    fn name(&self) -> &'static str {
        (**self).name()
    }
    fn start(&mut self, pool: &WorkerPool) -> Result<Vec<Assignment<T>>> {
        (**self).start(pool)
    }
    fn accepts(&self, worker: usize, tag: usize) -> bool {
        (**self).accepts(worker, tag)
    }
    fn on_report(&mut self, report: Report<T>) -> Reaction<T> {
        (**self).on_report(report)
    }
    fn iterate(&self) -> &Point<T> {
        (**self).iterate()
    }
    fn iteration(&self) -> usize {
        (**self).iteration()
    }
    fn output(&self) -> Point<T> {
        (**self).output()
    }
}

fn all_workers<T>(pool: &WorkerPool, point: &Arc<Point<T>>, tag: usize) -> Vec<Assignment<T>> {
    (0..pool.len()).map(|worker| Assignment { worker, point: point.clone(), tag }).collect()
}
