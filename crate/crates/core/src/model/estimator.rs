//! Stochastic gradient estimators.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::hard::prog;
use crate::model::point::{dist_sq, Point};
use crate::model::problem::{FiniteSum, Objective};
use crate::model::rng::RngContract;
use crate::scalar::Real;

/// Which coordinates the Bernoulli mask protects.
///
/// The mask leaves coordinates `j <= progress(x)` (1-based) untouched and
/// multiplies the rest by `ξ/p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum ProgressRule {
    /// `progress(x) = prog(x)`.
    Global,
    /// `progress(x) = start + prog(x[start..start+len])`, for functions that
    /// only read one block of coordinates.
    Block { start: usize, len: usize },
}

impl ProgressRule {
    pub fn progress<T: Real>(&self, x: &[T]) -> usize {
        match *self {
            ProgressRule::Global => prog(x),
            ProgressRule::Block { start, len } => start + prog(&x[start..start + len]),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Distribution {
    Exact,
    /// `∇f(x) + N(0, (σ²/d) I)`
    Gaussian { variance: f64 },
    /// `[g]_j = ∇_j f(x) (1 + 1[j > progress(x)] (ξ/p − 1))`, `ξ ~ Bernoulli(p)`.
    Bernoulli { p: f64, rule: ProgressRule },
    /// Mean of `batch` summands drawn without replacement.
    Minibatch { batch: usize },
}

/// One draw: the gradient estimate, plus the Bernoulli outcome when the
/// estimator has one.
#[derive(Clone, Debug, PartialEq)]
pub struct Draw<T> {
    pub grad: Point<T>,
    pub success: Option<bool>,
}

/// A stochastic gradient estimator for one target function.
#[derive(Clone)]
pub struct Estimator<T: Real> {
    target: Arc<dyn Objective<T>>,
    sampler: Option<Arc<dyn FiniteSum<T>>>,
    dist: Distribution,
    variance_bound: f64,
}

impl<T: Real> fmt::Debug for Estimator<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Estimator")
            .field("dist", &self.dist)
            .field("variance_bound", &self.variance_bound)
            .finish()
    }
}

/// Multiplies coordinates `j > progress` (1-based) by `ξ/p`.
pub(crate) fn sparsify_in_place<T: Real>(g: &mut [T], success: bool, p: T, progress: usize) {
    let factor = if success { T::one() / p } else { T::zero() };
    for v in g.iter_mut().skip(progress) {
        *v = *v * factor;
    }
}

impl<T: Real> Estimator<T> {
    pub fn exact(target: Arc<dyn Objective<T>>) -> Self {
        Estimator { target, sampler: None, dist: Distribution::Exact, variance_bound: 0.0 }
    }

    pub fn gaussian(target: Arc<dyn Objective<T>>, variance: f64) -> Result<Self> {
        if !(variance >= 0.0 && variance.is_finite()) {
            return Err(param("gaussian variance must be finite and >= 0"));
        }
        Ok(Estimator {
            target,
            sampler: None,
            dist: Distribution::Gaussian { variance },
            variance_bound: variance,
        })
    }

    /// `variance_bound` is what the construction guarantees (e.g. `σ²` for the
    /// hard instances); pass `None` when there is no global bound.
    pub fn bernoulli(
        target: Arc<dyn Objective<T>>,
        p: f64,
        rule: ProgressRule,
        variance_bound: Option<f64>,
    ) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(param(format!("bernoulli p must lie in (0, 1], got {p}")));
        }
        if let ProgressRule::Block { start, len } = rule {
            if start + len > target.dim() {
                return Err(param("progress block exceeds the dimension"));
            }
        }
        Ok(Estimator {
            target,
            sampler: None,
            dist: Distribution::Bernoulli { p, rule },
            variance_bound: variance_bound.unwrap_or(if p == 1.0 { 0.0 } else { f64::INFINITY }),
        })
    }

    /// Variance bound unknown in general; reported as infinite unless the
    /// batch is the full sum.
    pub fn minibatch(sampler: Arc<dyn FiniteSum<T>>, batch: usize) -> Result<Self> {
        if batch == 0 || batch > sampler.samples() {
            return Err(param(format!(
                "batch size {batch} must lie in 1..={}",
                sampler.samples()
            )));
        }
        let bound = if batch == sampler.samples() { 0.0 } else { f64::INFINITY };
        let target: Arc<dyn Objective<T>> = sampler.clone();
        Ok(Estimator {
            target,
            sampler: Some(sampler),
            dist: Distribution::Minibatch { batch },
            variance_bound: bound,
        })
    }

    pub fn distribution(&self) -> &Distribution {
        &self.dist
    }

    pub fn variance_bound(&self) -> f64 {
        self.variance_bound
    }

    pub fn target(&self) -> &Arc<dyn Objective<T>> {
        &self.target
    }

    pub fn dim(&self) -> usize {
        self.target.dim()
    }

    pub fn draw<R: Rng + ?Sized>(&self, x: &[T], rng: &mut R) -> Draw<T> {
        let d = self.dim();
        let mut g = Point::zeros(d);
        let mut success = None;
        match &self.dist {
            Distribution::Exact => self.target.gradient_into(x, &mut g),
            Distribution::Gaussian { variance } => {
                self.target.gradient_into(x, &mut g);
                if *variance > 0.0 {
                    let s = (variance / d as f64).sqrt();
                    for v in g.iter_mut() {
                        let z: f64 = rng.sample(StandardNormal);
                        *v = *v + T::c(s * z);
                    }
                }
            }
            Distribution::Bernoulli { p, rule } => {
                self.target.gradient_into(x, &mut g);
                let xi = rng.random_bool(*p);
                sparsify_in_place(&mut g, xi, T::c(*p), rule.progress(x));
                success = Some(xi);
            }
            Distribution::Minibatch { batch } => {
                let s = self.sampler.as_ref().expect("minibatch has a sampler");
                for i in rand::seq::index::sample(rng, s.samples(), *batch) {
                    s.add_sample_gradient(x, i, &mut g);
                }
                g.scale(T::one() / T::c(*batch as f64));
            }
        }
        Draw { grad: g, success }
    }

    /// Exact mean and `E‖g − ∇f(x)‖²` where they have a closed form.
    /// The Bernoulli case enumerates both outcomes of `ξ`.
    pub fn exact_moments(&self, x: &[T]) -> Option<(Point<T>, f64)> {
        let grad = self.target.gradient(x);
        match &self.dist {
            Distribution::Exact => Some((grad, 0.0)),
            Distribution::Gaussian { variance } => Some((grad, *variance)),
            Distribution::Bernoulli { p, rule } => {
                let k = rule.progress(x);
                let pt = T::c(*p);
                let mut hit = grad.clone();
                sparsify_in_place(&mut hit, true, pt, k);
                let mut miss = grad.clone();
                sparsify_in_place(&mut miss, false, pt, k);
                let mut mean = hit.clone();
                mean.scale(pt);
                mean.axpy(T::one() - pt, &miss);
                let var = p * dist_sq(&hit, &grad).as_f64() + (1.0 - p) * dist_sq(&miss, &grad).as_f64();
                Some((mean, var))
            }
            Distribution::Minibatch { .. } => None,
        }
    }
}

/// Empirical mean of `draws` estimates and their mean squared deviation
/// from the true gradient.
pub fn estimator_moments<T: Real>(est: &Estimator<T>, x: &[T], draws: usize, seed: u64) -> (Point<T>, f64) {
    assert!(draws >= 1, "draws must be positive");
    let mut rng = RngContract::new(seed).auxiliary(0);
    let truth = est.target().gradient(x);
    let mut sum = vec![0.0f64; x.len()];
    let mut dev = 0.0f64;
    for _ in 0..draws {
        let g = est.draw(x, &mut rng).grad;
        for (s, v) in sum.iter_mut().zip(g.iter()) {
            *s += v.as_f64();
        }
        dev += dist_sq(&g, &truth).as_f64();
    }
    let mean: Vec<T> = sum.into_iter().map(|s| T::c(s / draws as f64)).collect();
    (Point::from(mean), dev / draws as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::quadratic::quadratic_problem;

    #[test]
    fn exact_has_zero_moment() {
        let p = quadratic_problem::<f64>(4).unwrap();
        let est = Estimator::exact(p.objective.clone());
        let x = [0.3, -1.0, 2.0, 0.1];
        let (m, v) = estimator_moments(&est, &x, 1, 1);
        assert_eq!(m, p.gradient(&x));
        assert_eq!(v, 0.0);
        // averaging many copies only adds summation rounding
        let (m, v) = estimator_moments(&est, &x, 10, 1);
        assert!(dist_sq(&m, &p.gradient(&x)) < 1e-28);
        assert_eq!(v, 0.0);
    }

    #[test]
    fn bernoulli_p_one_is_exact() {
        let p = quadratic_problem::<f64>(5).unwrap();
        let est = Estimator::bernoulli(p.objective.clone(), 1.0, ProgressRule::Global, None).unwrap();
        let x = [0.3, -1.0, 0.0, 0.0, 0.0];
        let mut rng = RngContract::new(3).worker(0);
        for _ in 0..5 {
            let d = est.draw(&x, &mut rng);
            assert_eq!(d.grad, p.gradient(&x));
            assert_eq!(d.success, Some(true));
        }
        assert_eq!(est.variance_bound(), 0.0);
    }

    #[test]
    fn bernoulli_enumeration_is_unbiased() {
        let p = quadratic_problem::<f64>(6).unwrap();
        let est = Estimator::bernoulli(p.objective.clone(), 0.2, ProgressRule::Global, None).unwrap();
        let x = [1.0, 0.5, 0.0, 0.0, 0.0, 0.0];
        let (mean, var) = est.exact_moments(&x).unwrap();
        let g = p.gradient(&x);
        assert!(dist_sq(&mean, &g) < 1e-30);
        // only coordinate 3 is masked and non-zero
        assert!((var - g[2] * g[2] * 0.8 / 0.2).abs() < 1e-15);
    }

    #[test]
    fn gaussian_moment_matches() {
        let p = quadratic_problem::<f64>(10).unwrap();
        let est = Estimator::gaussian(p.objective.clone(), 2.0).unwrap();
        let (_, v) = estimator_moments(&est, &[0.0; 10], 20_000, 5);
        assert!((v - 2.0).abs() < 0.1, "{v}");
    }

    #[test]
    fn bad_parameters() {
        let p = quadratic_problem::<f64>(3).unwrap();
        assert!(Estimator::bernoulli(p.objective.clone(), 0.0, ProgressRule::Global, None).is_err());
        assert!(Estimator::bernoulli(p.objective.clone(), 1.5, ProgressRule::Global, None).is_err());
        assert!(Estimator::gaussian(p.objective.clone(), -1.0).is_err());
    }
}
