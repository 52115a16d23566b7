use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::model::point::Point;
use crate::model::pool::WorkerPool;
use crate::optimizers::{all_workers, Assignment, Reaction, Report, ServerLogic};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum StepsizeRule {
    Constant { gamma: f64 },
    /// `γ_k = min{γ_base, c_a / (L (δ_k + 1))}`.
    DelayAdaptive { base: f64, c_a: f64, smoothness: f64 },
}

impl StepsizeRule {
    pub fn delay_adaptive(base: f64, smoothness: f64) -> Self {
        StepsizeRule::DelayAdaptive { base, c_a: 0.25, smoothness }
    }

    pub fn gamma(&self, delay: usize) -> f64 {
        match *self {
            StepsizeRule::Constant { gamma } => gamma,
            StepsizeRule::DelayAdaptive { base, c_a, smoothness } => {
                base.min(c_a / (smoothness * (delay as f64 + 1.0)))
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            StepsizeRule::Constant { gamma } => gamma > 0.0 && gamma.is_finite(),
            StepsizeRule::DelayAdaptive { base, c_a, smoothness } => {
                base > 0.0 && c_a > 0.0 && smoothness > 0.0 && base.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(param(format!("invalid stepsize rule {self:?}")))
        }
    }
}

/// Asynchronous SGD: every arriving gradient is applied at once,
/// `x^{k+1} = x^k − γ_k g(x^{k−δ_k})`, and the worker gets `x^{k+1}`.
#[derive(Clone, Debug)]
pub struct AsyncSgd<T> {
    x: Arc<Point<T>>,
    rule: StepsizeRule,
    k: usize,
}

impl<T: Real> AsyncSgd<T> {
    pub fn new(x0: Point<T>, rule: StepsizeRule) -> Result<Self> {
        rule.validate()?;
        Ok(AsyncSgd { x: Arc::new(x0), rule, k: 0 })
    }
}

impl<T: Real> ServerLogic<T> for AsyncSgd<T> {
    fn name(&self) -> &'static str {
        "async"
    }

    fn start(&mut self, pool: &WorkerPool) -> Result<Vec<Assignment<T>>> {
        Ok(all_workers(pool, &self.x, self.k))
    }

    fn on_report(&mut self, r: Report<T>) -> Reaction<T> {
        let delay = self.k - r.tag;
        let mut next = (*self.x).clone();
        next.axpy(-T::c(self.rule.gamma(delay)), &r.grad);
        self.x = Arc::new(next);
        self.k += 1;
        let mut out = Reaction::reassign(r.worker, self.x.clone(), self.k);
        out.stepped = true;
        out.accepted = true;
        out.delay = Some(delay);
        out
    }

    fn iterate(&self) -> &Point<T> {
        &self.x
    }

    fn iteration(&self) -> usize {
        self.k
    }
}
