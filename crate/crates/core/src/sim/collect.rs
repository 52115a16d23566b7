use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::model::pool::WorkerPool;
use crate::model::time::VirtualTime;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollectionRegime {
    /// Every worker starts a fresh gradient at time 0.
    Fresh,
    /// Every worker first finishes a gradient for the previous iteration,
    /// so its `b`-th fresh gradient lands at `τ_i (1 + b)`.
    WorstCase,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CollectionProfile {
    pub time: f64,
    /// Fresh gradients each worker contributed.
    pub per_worker: Vec<usize>,
    /// Stale gradients finished before `time`.
    pub stale: usize,
}

/// Simulates collecting `s` fresh gradients for one iteration.
pub fn collection_profile(pool: &WorkerPool, s: usize, regime: CollectionRegime) -> Result<CollectionProfile> {
    if s == 0 {
        return Err(param("batch size must be >= 1"));
    }
    let n = pool.len();
    let mut heap: BinaryHeap<Reverse<(VirtualTime, u64, usize, bool)>> = BinaryHeap::new();
    let stale_first = regime == CollectionRegime::WorstCase;
    for i in 0..n {
        heap.push(Reverse((VirtualTime::ZERO + pool.tau(i), i as u64, i, stale_first)));
    }
    let mut seq = n as u64;
    let mut per_worker = vec![0; n];
    let mut stale = 0;
    let mut got = 0;
    loop {
        let Reverse((t, _, i, is_stale)) = heap.pop().expect("workers never stop");
        if is_stale {
            stale += 1;
        } else {
            per_worker[i] += 1;
            got += 1;
            if got == s {
                return Ok(CollectionProfile { time: t.seconds(), per_worker, stale });
            }
        }
        heap.push(Reverse((t + pool.tau(i), seq, i, false)));
        seq += 1;
    }
}

pub fn measure_collection_time(pool: &WorkerPool, s: usize, regime: CollectionRegime) -> Result<VirtualTime> {
    VirtualTime::new(collection_profile(pool, s, regime)?.time)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let one = WorkerPool::new(vec![1.0]).unwrap();
        assert_eq!(measure_collection_time(&one, 2, CollectionRegime::Fresh).unwrap().seconds(), 2.0);
        assert_eq!(measure_collection_time(&one, 2, CollectionRegime::WorstCase).unwrap().seconds(), 3.0);
        let two = WorkerPool::new(vec![1.0, 4.0]).unwrap();
        let p = collection_profile(&two, 2, CollectionRegime::WorstCase).unwrap();
        assert_eq!(p.time, 3.0);
        assert_eq!(p.per_worker, vec![2, 0]);
    }
}
