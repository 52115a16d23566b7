use std::sync::Arc;

use crate::error::{param, Result};
use crate::model::point::Point;
use crate::model::pool::WorkerPool;
use crate::optimizers::{all_workers, Assignment, Reaction, Report, ServerLogic};
use crate::scalar::Real;

/// `(1/n Σ 1/B_i)^{-1}`, taken to be 0 while some `B_i = 0`.
pub fn harmonic_mean(counts: &[usize]) -> f64 {
    if counts.is_empty() || counts.contains(&0) {
        return 0.0;
    }
    let inv: f64 = counts.iter().map(|&b| 1.0 / b as f64).sum();
    counts.len() as f64 / inv
}

/// Malenia SGD: per-worker sums `g_i` with counts `B_i`; steps with
/// `(1/n) Σ g_i / B_i` once the harmonic mean of the counts reaches `S/n`.
/// Stale reports are dropped as in Rennala.
#[derive(Clone, Debug)]
pub struct Malenia<T> {
    x: Arc<Point<T>>,
    gamma: T,
    s: usize,
    k: usize,
    acc: Vec<Point<T>>,
    counts: Vec<usize>,
}

impl<T: Real> Malenia<T> {
    pub fn new(x0: Point<T>, gamma: T, s: usize, n: usize) -> Result<Self> {
        if n == 0 || s == 0 {
            return Err(param("Malenia needs n >= 1 and S >= 1"));
        }
        if !(gamma > T::zero()) {
            return Err(param("stepsize must be positive"));
        }
        let d = x0.dim();
        Ok(Malenia { x: Arc::new(x0), gamma, s, k: 0, acc: vec![Point::zeros(d); n], counts: vec![0; n] })
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// The loop guard `(1/n Σ 1/B_i)^{-1} >= S/n`.
    pub fn ready(&self) -> bool {
        if self.counts.contains(&0) {
            return false;
        }
        // n / Σ(1/B_i) >= S/n  <=>  n² >= S Σ(1/B_i)
        let n = self.counts.len() as f64;
        let inv: f64 = self.counts.iter().map(|&b| 1.0 / b as f64).sum();
        n * n >= self.s as f64 * inv
    }
}

impl<T: Real> ServerLogic<T> for Malenia<T> {
    fn name(&self) -> &'static str {
        "malenia"
    }

    fn start(&mut self, pool: &WorkerPool) -> Result<Vec<Assignment<T>>> {
        if pool.len() != self.counts.len() {
            return Err(param(format!("Malenia built for {} workers, pool has {}", self.counts.len(), pool.len())));
        }
        Ok(all_workers(pool, &self.x, self.k))
    }

    fn accepts(&self, _worker: usize, tag: usize) -> bool {
        tag == self.k
    }

    fn on_report(&mut self, r: Report<T>) -> Reaction<T> {
        if r.tag != self.k {
            return Reaction::reassign(r.worker, self.x.clone(), self.k);
        }
        self.acc[r.worker].axpy(T::one(), &r.grad);
        self.counts[r.worker] += 1;
        let stepped = self.ready();
        if stepped {
            let n = T::c(self.counts.len() as f64);
            let mut next = (*self.x).clone();
            for (g, &b) in self.acc.iter_mut().zip(&self.counts) {
                next.axpy(-self.gamma / (n * T::c(b as f64)), g);
                g.scale(T::zero());
            }
            self.counts.iter_mut().for_each(|b| *b = 0);
            self.x = Arc::new(next);
            self.k += 1;
        }
        let mut out = Reaction::reassign(r.worker, self.x.clone(), self.k);
        out.stepped = stepped;
        out.accepted = true;
        out
    }

    fn iterate(&self) -> &Point<T> {
        &self.x
    }

    fn iteration(&self) -> usize {
        self.k
    }
}
