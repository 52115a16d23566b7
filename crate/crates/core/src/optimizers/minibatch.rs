use std::sync::Arc;

use crate::error::{param, Result};
use crate::model::point::Point;
use crate::model::pool::WorkerPool;
use crate::model::time::VirtualTime;
use crate::optimizers::{Assignment, Reaction, Report, ServerLogic};
use crate::protocol::{AlgorithmAction, TimeAlgorithm};
use crate::scalar::Real;

/// m-Minibatch SGD: each round sends `x^k` to the `m` fastest workers and
/// steps with the mean of their `m` gradients. `m = n` is Minibatch SGD.
#[derive(Clone, Debug)]
pub struct MMinibatch<T> {
    x: Arc<Point<T>>,
    gamma: T,
    m: usize,
    k: usize,
    acc: Point<T>,
    count: usize,
    members: Vec<usize>,
}

impl<T: Real> MMinibatch<T> {
    pub fn new(x0: Point<T>, gamma: T, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(param("m must be >= 1"));
        }
        if !(gamma > T::zero()) {
            return Err(param("stepsize must be positive"));
        }
        let d = x0.dim();
        Ok(MMinibatch { x: Arc::new(x0), gamma, m, k: 0, acc: Point::zeros(d), count: 0, members: Vec::new() })
    }

    fn round(&self) -> Vec<Assignment<T>> {
        self.members.iter().map(|&worker| Assignment { worker, point: self.x.clone(), tag: self.k }).collect()
    }
}

impl<T: Real> ServerLogic<T> for MMinibatch<T> {
    fn name(&self) -> &'static str {
        "minibatch"
    }

    fn start(&mut self, pool: &WorkerPool) -> Result<Vec<Assignment<T>>> {
        if self.m > pool.len() {
            return Err(param(format!("m = {} exceeds the {} workers", self.m, pool.len())));
        }
        self.members = pool.order()[..self.m].to_vec();
        Ok(self.round())
    }

    fn on_report(&mut self, r: Report<T>) -> Reaction<T> {
        debug_assert_eq!(r.tag, self.k);
        self.acc.axpy(T::one() / T::c(self.m as f64), &r.grad);
        self.count += 1;
        if self.count < self.m {
            return Reaction { assignments: Vec::new(), stepped: false, accepted: true, delay: None };
        }
        let mut next = (*self.x).clone();
        next.axpy(-self.gamma, &self.acc);
        self.x = Arc::new(next);
        self.acc.scale(T::zero());
        self.count = 0;
        self.k += 1;
        Reaction { assignments: self.round(), stepped: true, accepted: true, delay: None }
    }

    fn iterate(&self) -> &Point<T> {
        &self.x
    }

    fn iteration(&self) -> usize {
        self.k
    }
}

/// m-Minibatch SGD against the synchronized oracle: start a round at `x^k`,
/// collect at `s + τ_m` and step with the reply divided by the number of
/// included draws `#{i : τ_i <= τ_m}`.
#[derive(Clone, Debug)]
pub struct SyncMinibatch<T> {
    x: Point<T>,
    gamma: T,
    tau_m: f64,
    included: usize,
    now: f64,
}

impl<T: Real> SyncMinibatch<T> {
    /// `sorted_taus` ascending; `m` is 1-based.
    pub fn new(x0: Point<T>, gamma: T, m: usize, sorted_taus: &[f64]) -> Result<Self> {
        if m == 0 || m > sorted_taus.len() {
            return Err(param(format!("m = {m} out of range 1..={}", sorted_taus.len())));
        }
        let tau_m = sorted_taus[m - 1];
        let included = sorted_taus.iter().filter(|&&t| t <= tau_m).count();
        Ok(SyncMinibatch { x: x0, gamma, tau_m, included, now: 0.0 })
    }

    pub fn iterate(&self) -> &Point<T> {
        &self.x
    }
}

impl<T: Real> TimeAlgorithm<T> for SyncMinibatch<T> {
    fn act(&mut self, k: usize, reply: Option<&Point<T>>) -> AlgorithmAction<T> {
        if k % 2 == 1 {
            self.now += self.tau_m;
        } else if let Some(g) = reply {
            self.x.axpy(-self.gamma / T::c(self.included as f64), g);
        }
        let t = VirtualTime::new(self.now).expect("finite time");
        AlgorithmAction { t_next: t, worker: None, control: false, query: self.x.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_waits_for_all_members() {
        let mut mb = MMinibatch::new(Point::from(vec![0.0]), 1.0, 2).unwrap();
        let a = mb.start(&WorkerPool::new(vec![4.0, 1.0, 2.0]).unwrap()).unwrap();
        assert_eq!(a.iter().map(|a| a.worker).collect::<Vec<_>>(), vec![1, 2]);
        assert!(!mb.on_report(Report { worker: 1, tag: 0, grad: Point::from(vec![1.0]) }).stepped);
        let r = mb.on_report(Report { worker: 2, tag: 0, grad: Point::from(vec![3.0]) });
        assert!(r.stepped);
        assert_eq!(r.assignments.len(), 2);
        assert_eq!(mb.iterate().to_f64(), vec![-2.0]);
    }

    #[test]
    fn m_out_of_range() {
        let mut mb = MMinibatch::new(Point::from(vec![0.0]), 1.0, 3).unwrap();
        assert!(mb.start(&WorkerPool::constant(2, 1.0).unwrap()).is_err());
        assert!(SyncMinibatch::new(Point::from(vec![0.0]), 1.0, 0, &[1.0]).is_err());
    }
}
