//! Instances for the heterogeneous regime, where worker `i` samples only
//! its own function `f_i` and `f = (1/n) Σ f_i`.

use std::sync::Arc;

use crate::error::{param, Error, Result};
use crate::hard::chain::ScaledChain;
use crate::hard::{DELTA0, GAMMA_INF, L1};
use crate::model::estimator::{Estimator, ProgressRule};
use crate::model::point::Point;
use crate::model::problem::{MeanObjective, Objective, ProblemSpec, Zero};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HeterogPart {
    /// Only worker `n` holds a non-zero function; exact gradients.
    Slowest,
    /// One chain block per worker with Bernoulli-masked estimators.
    Blocks,
}

#[derive(Clone)]
pub struct HeterogHard<T: Real> {
    pub part: HeterogPart,
    pub n: usize,
    /// Block length `T`.
    pub t: usize,
    pub lambdas: Vec<T>,
    pub probs: Vec<f64>,
    pub smoothness: T,
    pub gap: T,
    pub variance: T,
    locals: Vec<Arc<dyn Objective<T>>>,
    rules: Vec<ProgressRule>,
}

fn check_common<T: Real>(n: usize, l: T, delta: T, sigma2: T, eps: T) -> Result<()> {
    if n == 0 {
        return Err(param("need n >= 1"));
    }
    if !(l > T::zero() && delta > T::zero() && eps > T::zero() && sigma2 >= T::zero()) {
        return Err(param("need L, Δ, ε > 0 and σ² >= 0"));
    }
    Ok(())
}

fn floor_t<T: Real>(v: T, what: &str) -> Result<usize> {
    let t = v.floor();
    if t < T::one() {
        return Err(Error::InstanceTooSmall(format!("{what} = {t} < 1")));
    }
    t.to_usize().ok_or_else(|| param("T does not fit in usize"))
}

/// `f_i = 0` for `i < n`, `f_n = (nLλ²/l₁) F_T(x/λ)` with `λ = l₁√ε/L` and
/// `T = ⌊ΔL/(l₁εΔ⁰)⌋`.
pub fn make_heterog_hard_part1<T: Real>(n: usize, l: T, delta: T, eps: T) -> Result<HeterogHard<T>> {
    check_common(n, l, delta, T::zero(), eps)?;
    let l1 = T::c(L1);
    let lambda = l1 * eps.sqrt() / l;
    let t = floor_t(delta * l / (l1 * eps * T::c(DELTA0)), "T = ⌊ΔL/(l₁εΔ⁰)⌋")?;
    let nt = T::c(n as f64);
    let mut locals: Vec<Arc<dyn Objective<T>>> = (0..n - 1).map(|_| Arc::new(Zero { dim: t }) as _).collect();
    locals.push(Arc::new(ScaledChain { dim: t, start: 0, t, lambda, scale: nt * l * lambda * lambda / l1 }));
    Ok(HeterogHard {
        part: HeterogPart::Slowest,
        n,
        t,
        lambdas: vec![lambda],
        probs: vec![1.0; n],
        smoothness: l,
        gap: delta,
        variance: T::zero(),
        locals,
        rules: vec![ProgressRule::Global; n],
    })
}

/// Block construction with `η = 4`:
/// `λ_i = l₁√(ηετ_i)/(L√Στ)`, `T = ⌊ΔL/(ηεl₁Δ⁰)⌋`,
/// `p_i = min{n²γ_∞²ηετ_i/(σ²Στ), 1}`.
pub fn make_heterog_hard<T: Real>(
    n: usize,
    l: T,
    delta: T,
    sigma2: T,
    eps: T,
    taus: &[f64],
) -> Result<HeterogHard<T>> {
    check_common(n, l, delta, sigma2, eps)?;
    if taus.len() != n {
        return Err(param(format!("expected {n} delays, got {}", taus.len())));
    }
    if taus.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
        return Err(param("degenerate delays: every τ_i must be positive and finite"));
    }
    let eta = T::c(4.0);
    let l1 = T::c(L1);
    let sum_tau = T::c(taus.iter().sum::<f64>());
    let nt = T::c(n as f64);
    let t = floor_t(delta * l / (eta * eps * l1 * T::c(DELTA0)), "T = ⌊ΔL/(ηεl₁Δ⁰)⌋")?;
    let dim = n * t;
    let mut lambdas = Vec::with_capacity(n);
    let mut probs = Vec::with_capacity(n);
    let mut locals: Vec<Arc<dyn Objective<T>>> = Vec::with_capacity(n);
    let mut rules = Vec::with_capacity(n);
    for (i, &tau) in taus.iter().enumerate() {
        let tau = T::c(tau);
        let lambda = l1 * (eta * eps * tau).sqrt() / (l * sum_tau.sqrt());
        let p = if sigma2.is_zero() {
            1.0
        } else {
            (nt * nt * T::c(GAMMA_INF * GAMMA_INF) * eta * eps * tau / (sigma2 * sum_tau))
                .as_f64()
                .min(1.0)
        };
        lambdas.push(lambda);
        probs.push(p);
        locals.push(Arc::new(ScaledChain {
            dim,
            start: i * t,
            t,
            lambda,
            scale: nt * l * lambda * lambda / l1,
        }));
        rules.push(ProgressRule::Block { start: i * t, len: t });
    }
    Ok(HeterogHard {
        part: HeterogPart::Blocks,
        n,
        t,
        lambdas,
        probs,
        smoothness: l,
        gap: delta,
        variance: sigma2,
        locals,
        rules,
    })
}

impl<T: Real> HeterogHard<T> {
    pub fn dim(&self) -> usize {
        self.locals[0].dim()
    }

    pub fn local(&self, i: usize) -> &Arc<dyn Objective<T>> {
        &self.locals[i]
    }

    pub fn objective(&self) -> Arc<dyn Objective<T>> {
        Arc::new(MeanObjective::new(self.locals.clone()).expect("non-empty"))
    }

    /// One estimator per worker, each targeting its own `f_i`.
    pub fn estimators(&self) -> Vec<Estimator<T>> {
        (0..self.n)
            .map(|i| {
                Estimator::bernoulli(self.locals[i].clone(), self.probs[i], self.rules[i], Some(self.variance.as_f64()))
                    .expect("valid p")
            })
            .collect()
    }

    pub fn problem(&self) -> ProblemSpec<T> {
        ProblemSpec::new("heterog_hard", self.objective(), self.smoothness, Point::zeros(self.dim()), None, Some(self.gap))
            .expect("valid constants")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn part1_only_last_worker_matters() {
        let h = make_heterog_hard_part1(3, 1.0f64, 1.0, 1e-4).unwrap();
        assert_eq!(h.t, (1.0 / (152.0 * 1e-4 * 12.0)) as usize);
        let x = vec![0.0; h.t];
        assert!(h.local(0).gradient(&x).is_zero());
        let g = h.objective().gradient(&x);
        let gn = h.local(2).gradient(&x);
        for (a, b) in g.iter().zip(gn.iter()) {
            assert!((a - b / 3.0).abs() < 1e-15);
        }
        assert!(g.norm_sq() > 1e-4);
    }

    #[test]
    fn blocks_are_disjoint() {
        let taus = [1.0, 2.0, 4.0];
        let h = make_heterog_hard(3, 1.0f64, 1.0, 0.5, 1e-4, &taus).unwrap();
        assert_eq!(h.dim(), 3 * h.t);
        let x = vec![0.0; h.dim()];
        for i in 0..3 {
            let g = h.local(i).gradient(&x);
            assert_eq!(g.support(), vec![i * h.t]);
        }
        assert!(h.probs.iter().all(|&p| p > 0.0 && p <= 1.0));
        assert!(make_heterog_hard(3, 1.0f64, 1.0, 0.5, 1e-4, &[1.0, 0.0, 1.0]).is_err());
    }
}
