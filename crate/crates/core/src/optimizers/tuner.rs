use rayon::prelude::*;
use serde::Serialize;

use crate::error::{param, Result};

/// Batch sizes tried for Rennala in the quadratic experiments.
pub const APPENDIX_BATCHES: [usize; 10] = [1, 5, 10, 20, 40, 80, 100, 200, 500, 1000];

/// Default stepsize grid `{2^i : i in [lo, hi]}`.
pub fn powers_of_two(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|i| 2f64.powi(i)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridResult {
    /// Chosen value on each axis.
    pub best: Vec<f64>,
    pub score: f64,
    /// Per axis: the choice sits at either end of a grid with more than one
    /// value.
    pub boundary: Vec<bool>,
    /// Every evaluated point in row-major order with its score.
    pub evaluated: Vec<(Vec<f64>, Option<f64>)>,
}

fn grid_index(axes: &[Vec<f64>], mut flat: usize) -> Vec<usize> {
    let mut idx = vec![0; axes.len()];
    for (d, a) in axes.iter().enumerate().rev() {
        idx[d] = flat % a.len();
        flat /= a.len();
    }
    idx
}

/// Scores every point of the product of `axes` (in parallel), row-major.
/// NaN scores count as missing.
pub fn grid_evaluate<F>(axes: &[Vec<f64>], score: F) -> Result<Vec<(Vec<f64>, Option<f64>)>>
where
    F: Fn(&[f64]) -> Option<f64> + Sync,
{
    if axes.is_empty() || axes.iter().any(|a| a.is_empty()) {
        return Err(param("empty grid"));
    }
    let total: usize = axes.iter().map(|a| a.len()).product();
    Ok((0..total)
        .into_par_iter()
        .map(|flat| {
            let p: Vec<f64> = grid_index(axes, flat).iter().zip(axes).map(|(&i, a)| a[i]).collect();
            let s = score(&p).filter(|v| !v.is_nan());
            (p, s)
        })
        .collect())
}

/// Smallest score among evaluated points; ties go to the first point in
/// row-major order. `None` when nothing scored.
pub fn grid_best(axes: &[Vec<f64>], evaluated: Vec<(Vec<f64>, Option<f64>)>) -> Option<GridResult> {
    let (flat, s) = evaluated
        .iter()
        .enumerate()
        .filter_map(|(i, (_, s))| s.map(|s| (i, s)))
        .fold(None, |acc: Option<(usize, f64)>, (i, s)| match acc {
            Some((_, b)) if b <= s => acc,
            _ => Some((i, s)),
        })?;
    let idx = grid_index(axes, flat);
    let boundary = idx.iter().zip(axes).map(|(&i, a)| a.len() > 1 && (i == 0 || i + 1 == a.len())).collect();
    Some(GridResult { best: evaluated[flat].0.clone(), score: s, boundary, evaluated })
}

/// Evaluates `score` over the product of `axes` and keeps the smallest
/// score. `None` scores (diverged, target never reached) never win.
pub fn grid_search<F>(axes: &[Vec<f64>], score: F) -> Result<GridResult>
where
    F: Fn(&[f64]) -> Option<f64> + Sync,
{
    let evaluated = grid_evaluate(axes, score)?;
    grid_best(axes, evaluated).ok_or_else(|| param("no grid point produced a score"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn picks_interior_minimum() {
        let g = powers_of_two(-3, 3);
        let r = grid_search(&[g], |p| Some((p[0].log2() - 1.0).powi(2))).unwrap();
        assert_eq!(r.best, vec![2.0]);
        assert_eq!(r.boundary, vec![false]);
    }

    #[test]
    fn flags_boundary_and_ties() {
        let r = grid_search(&[vec![1.0, 2.0], vec![5.0, 6.0]], |p| Some(p[0])).unwrap();
        assert_eq!(r.best, vec![1.0, 5.0]);
        assert_eq!(r.boundary, vec![true, true]);
        assert!(grid_search(&[vec![]], |_| Some(0.0)).is_err());
        assert!(grid_search(&[vec![1.0]], |_| None).is_err());
    }
}
