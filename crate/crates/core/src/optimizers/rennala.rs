use std::sync::Arc;

use crate::error::{param, Result};
use crate::model::point::Point;
use crate::model::pool::WorkerPool;
use crate::optimizers::{all_workers, Assignment, Reaction, Report, ServerLogic};
use crate::scalar::Real;

/// Rennala SGD: collect `S` gradients computed at the current iterate,
/// drop everything tagged with an older iteration, then step.
///
/// The worker whose report completes a batch is handed the new iterate.
#[derive(Clone, Debug)]
pub struct Rennala<T> {
    x: Arc<Point<T>>,
    gamma: T,
    batch: usize,
    k: usize,
    acc: Point<T>,
    count: usize,
    /// `Σ_{k<K} x^k` when the averaged output is requested.
    sum: Option<Point<T>>,
}

impl<T: Real> Rennala<T> {
    pub fn new(x0: Point<T>, gamma: T, batch: usize) -> Result<Self> {
        if batch == 0 {
            return Err(param("batch size S must be >= 1"));
        }
        if !(gamma > T::zero()) {
            return Err(param("stepsize must be positive"));
        }
        let d = x0.dim();
        Ok(Rennala { x: Arc::new(x0), gamma, batch, k: 0, acc: Point::zeros(d), count: 0, sum: None })
    }

    /// Report `x̂^K = (1/K) Σ_{k<K} x^k` as the output.
    pub fn averaged(mut self) -> Self {
        self.sum = Some(Point::zeros(self.x.dim()));
        self
    }

    pub fn batch(&self) -> usize {
        self.batch
    }

    /// Fresh gradients collected for the current iteration.
    pub fn collected(&self) -> usize {
        self.count
    }
}

impl<T: Real> ServerLogic<T> for Rennala<T> {
    fn name(&self) -> &'static str {
        if self.sum.is_some() {
            "rennala_avg"
        } else {
            "rennala"
        }
    }

    fn start(&mut self, pool: &WorkerPool) -> Result<Vec<Assignment<T>>> {
        Ok(all_workers(pool, &self.x, self.k))
    }

    fn accepts(&self, _worker: usize, tag: usize) -> bool {
        tag == self.k
    }

    fn on_report(&mut self, r: Report<T>) -> Reaction<T> {
        if r.tag != self.k {
            return Reaction::reassign(r.worker, self.x.clone(), self.k);
        }
        self.acc.axpy(T::one() / T::c(self.batch as f64), &r.grad);
        self.count += 1;
        let stepped = self.count == self.batch;
        if stepped {
            if let Some(s) = &mut self.sum {
                s.axpy(T::one(), &self.x);
            }
            let mut next = (*self.x).clone();
            next.axpy(-self.gamma, &self.acc);
            self.x = Arc::new(next);
            self.acc.scale(T::zero());
            self.count = 0;
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

    fn output(&self) -> Point<T> {
        match &self.sum {
            Some(s) if self.k > 0 => {
                let mut avg = s.clone();
                avg.scale(T::one() / T::c(self.k as f64));
                avg
            }
            _ => (*self.x).clone(),
        }
    }
}

/// Rennala batching with the accelerated three-sequence update
///
/// ```text
/// γ_{k+1} = γ(k+1),  α_{k+1} = 2/(k+2)
/// y^{k+1} = (1 − α_{k+1}) x^k + α_{k+1} u^k
/// u^{k+1} = u^k − γ_{k+1} g_k
/// x^{k+1} = (1 − α_{k+1}) x^k + α_{k+1} u^{k+1}
/// ```
///
/// where `g_k` averages `S` gradients computed at `y^{k+1}`.
#[derive(Clone, Debug)]
pub struct AcceleratedRennala<T> {
    x: Point<T>,
    u: Point<T>,
    y: Arc<Point<T>>,
    gamma: T,
    batch: usize,
    k: usize,
    acc: Point<T>,
    count: usize,
}

impl<T: Real> AcceleratedRennala<T> {
    pub fn new(x0: Point<T>, gamma: T, batch: usize) -> Result<Self> {
        if batch == 0 {
            return Err(param("batch size S must be >= 1"));
        }
        if !(gamma > T::zero()) {
            return Err(param("stepsize must be positive"));
        }
        let d = x0.dim();
        // α_1 = 1, so y^1 = u^0 = x^0
        Ok(AcceleratedRennala {
            y: Arc::new(x0.clone()),
            u: x0.clone(),
            x: x0,
            gamma,
            batch,
            k: 0,
            acc: Point::zeros(d),
            count: 0,
        })
    }

    fn alpha(k: usize) -> T {
        T::c(2.0 / (k as f64 + 2.0))
    }

    /// The point gradients are currently requested at, `y^{k+1}`.
    pub fn query_point(&self) -> &Point<T> {
        &self.y
    }

    pub fn auxiliary(&self) -> &Point<T> {
        &self.u
    }
}

impl<T: Real> ServerLogic<T> for AcceleratedRennala<T> {
    fn name(&self) -> &'static str {
        "accelerated_rennala"
    }

    fn start(&mut self, pool: &WorkerPool) -> Result<Vec<Assignment<T>>> {
        Ok(all_workers(pool, &self.y, self.k))
    }

    fn accepts(&self, _worker: usize, tag: usize) -> bool {
        tag == self.k
    }

    fn on_report(&mut self, r: Report<T>) -> Reaction<T> {
        if r.tag != self.k {
            return Reaction::reassign(r.worker, self.y.clone(), self.k);
        }
        self.acc.axpy(T::one() / T::c(self.batch as f64), &r.grad);
        self.count += 1;
        let stepped = self.count == self.batch;
        if stepped {
            let k1 = self.k + 1;
            let a = Self::alpha(self.k);
            let g = self.gamma * T::c(k1 as f64);
            self.u.axpy(-g, &self.acc);
            self.x.scale(T::one() - a);
            self.x.axpy(a, &self.u);
            let a_next = Self::alpha(k1);
            let mut y = self.x.clone();
            y.scale(T::one() - a_next);
            y.axpy(a_next, &self.u);
            self.y = Arc::new(y);
            self.acc.scale(T::zero());
            self.count = 0;
            self.k = k1;
        }
        let mut out = Reaction::reassign(r.worker, self.y.clone(), self.k);
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

#[cfg(test)]
mod tests {
    use super::*;

    fn report(worker: usize, tag: usize, g: Vec<f64>) -> Report<f64> {
        Report { worker, tag, grad: Point::from(g) }
    }

    #[test]
    fn stale_report_is_ignored_and_reassigned() {
        let mut r = Rennala::new(Point::from(vec![1.0]), 0.5, 1).unwrap();
        r.start(&WorkerPool::constant(2, 1.0).unwrap()).unwrap();
        r.on_report(report(0, 0, vec![1.0]));
        let re = r.on_report(report(1, 0, vec![1.0]));
        assert!(!re.accepted && !re.stepped);
        assert_eq!(re.assignments[0].tag, 1);
        assert_eq!(*re.assignments[0].point, Point::from(vec![0.5]));
    }

    #[test]
    fn batch_of_two_averages() {
        let mut r = Rennala::new(Point::from(vec![0.0, 0.0]), 1.0, 2).unwrap();
        assert!(!r.on_report(report(0, 0, vec![1.0, 0.0])).stepped);
        assert!(r.on_report(report(1, 0, vec![3.0, 2.0])).stepped);
        assert_eq!(r.iterate().to_f64(), vec![-2.0, -1.0]);
    }

    #[test]
    fn averaged_output_excludes_current_iterate() {
        let mut r = Rennala::new(Point::from(vec![4.0]), 1.0, 1).unwrap().averaged();
        r.on_report(report(0, 0, vec![2.0]));
        r.on_report(report(0, 1, vec![2.0]));
        // x^0 = 4, x^1 = 2, x^2 = 0
        assert_eq!(r.output().to_f64(), vec![3.0]);
        assert_eq!(r.iterate().to_f64(), vec![0.0]);
    }

    #[test]
    fn accelerated_first_step() {
        let mut a = AcceleratedRennala::new(Point::from(vec![1.0]), 0.25, 1).unwrap();
        assert_eq!(a.query_point().to_f64(), vec![1.0]);
        a.on_report(report(0, 0, vec![2.0]));
        // u¹ = 1 − 0.25·2, α₁ = 1 so x¹ = u¹
        assert_eq!(a.auxiliary().to_f64(), vec![0.5]);
        assert_eq!(a.iterate().to_f64(), vec![0.5]);
        // y² = (1/3) x¹ + (2/3) u¹
        assert!((a.query_point()[0] - 0.5).abs() < 1e-15);
    }
}
