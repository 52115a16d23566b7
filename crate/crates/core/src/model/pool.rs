use serde::{Deserialize, Serialize};

use crate::error::{param, Result};

/// Fixed per-worker computation times `τ_i`.
///
/// Worker indices refer to the order given at construction; `sorted()` is the
/// view with `τ_1 <= ... <= τ_n` that the formulas use.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct WorkerPool {
    delays: Vec<f64>,
    order: Vec<usize>,
}

impl TryFrom<Vec<f64>> for WorkerPool {
    type Error = crate::Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        WorkerPool::new(v)
    }
}

impl From<WorkerPool> for Vec<f64> {
    fn from(p: WorkerPool) -> Self {
        p.delays
    }
}

impl WorkerPool {
    pub fn new(delays: Vec<f64>) -> Result<Self> {
        if delays.is_empty() {
            return Err(param("worker pool is empty"));
        }
        if let Some((i, t)) = delays
            .iter()
            .enumerate()
            .find(|(_, t)| !(t.is_finite() && **t > 0.0))
        {
            return Err(param(format!("tau[{i}] = {t} must be positive and finite")));
        }
        let mut order: Vec<usize> = (0..delays.len()).collect();
        order.sort_by(|&a, &b| delays[a].total_cmp(&delays[b]).then(a.cmp(&b)));
        Ok(WorkerPool { delays, order })
    }

    /// `τ_i = sqrt(i)`, `i = 1..n`.
    pub fn sqrt_index(n: usize) -> Result<Self> {
        Self::new((1..=n).map(|i| (i as f64).sqrt()).collect())
    }

    pub fn constant(n: usize, tau: f64) -> Result<Self> {
        Self::new(vec![tau; n])
    }

    pub fn len(&self) -> usize {
        self.delays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delays.is_empty()
    }

    pub fn tau(&self, worker: usize) -> f64 {
        self.delays[worker]
    }

    pub fn delays(&self) -> &[f64] {
        &self.delays
    }

    /// Worker indices from fastest to slowest (stable on ties).
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn sorted(&self) -> Vec<f64> {
        self.order.iter().map(|&i| self.delays[i]).collect()
    }

    pub fn tau_max(&self) -> f64 {
        self.delays[*self.order.last().unwrap()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sorted_view() {
        let p = WorkerPool::new(vec![3.0, 1.0, 2.0, 1.0]).unwrap();
        assert_eq!(p.sorted(), vec![1.0, 1.0, 2.0, 3.0]);
        assert_eq!(p.order(), &[1, 3, 2, 0]);
        assert_eq!(p.tau_max(), 3.0);
        assert!(WorkerPool::new(vec![]).is_err());
        assert!(WorkerPool::new(vec![1.0, 0.0]).is_err());
        assert_eq!(WorkerPool::sqrt_index(4).unwrap().tau(3), 2.0);
    }
}
