use std::sync::Arc;

use crate::error::{param, Error, Result};
use crate::hard::chain::ScaledChain;
use crate::hard::{DELTA0, GAMMA_INF, L1};
use crate::model::estimator::{Estimator, ProgressRule};
use crate::model::point::Point;
use crate::model::problem::{Objective, ProblemSpec};
use crate::scalar::Real;

/// `f(x) = (Lλ²/l₁) F_T(x/λ)` with the Bernoulli-masked estimator.
#[derive(Clone, Debug)]
pub struct NonconvexHard<T> {
    pub t: usize,
    pub lambda: T,
    pub smoothness: T,
    pub gap: T,
    pub variance: T,
    pub eps: T,
    /// Success probability of each draw.
    pub p: f64,
    function: ScaledChain<T>,
}

/// `λ = √(2ε) l₁ / L`, `T = ⌊ΔL / (2ε l₁ Δ⁰)⌋`, `p = min{2εγ_∞²/σ², 1}`.
pub fn make_nonconvex_hard<T: Real>(l: T, delta: T, sigma2: T, eps: T) -> Result<NonconvexHard<T>> {
    if !(l > T::zero() && delta > T::zero() && eps > T::zero() && sigma2 >= T::zero()) {
        return Err(param("need L, Δ, ε > 0 and σ² >= 0"));
    }
    let l1 = T::c(L1);
    let two = T::c(2.0);
    let lambda = (two * eps).sqrt() * l1 / l;
    let t = (delta * l / (two * eps * l1 * T::c(DELTA0))).floor();
    if t < T::one() {
        return Err(Error::InstanceTooSmall(format!(
            "T = ⌊ΔL/(2εl₁Δ⁰)⌋ = {t} < 1; decrease ε or increase ΔL"
        )));
    }
    let t = t.to_usize().ok_or_else(|| param("T does not fit in usize"))?;
    let p = if sigma2.is_zero() {
        1.0
    } else {
        (two * eps * T::c(GAMMA_INF * GAMMA_INF) / sigma2).as_f64().min(1.0)
    };
    let function = ScaledChain { dim: t, start: 0, t, lambda, scale: l * lambda * lambda / l1 };
    Ok(NonconvexHard { t, lambda, smoothness: l, gap: delta, variance: sigma2, eps, p, function })
}

impl<T: Real> NonconvexHard<T> {
    pub fn objective(&self) -> Arc<dyn Objective<T>> {
        Arc::new(self.function.clone())
    }

    pub fn function(&self) -> &ScaledChain<T> {
        &self.function
    }

    pub fn estimator(&self) -> Estimator<T> {
        Estimator::bernoulli(self.objective(), self.p, ProgressRule::Global, Some(self.variance.as_f64()))
            .expect("p in (0, 1]")
    }

    /// Started at the origin; `Δ` is the construction's bound, not the exact gap.
    pub fn problem(&self) -> ProblemSpec<T> {
        ProblemSpec::new("ft", self.objective(), self.smoothness, Point::zeros(self.t), None, Some(self.gap))
            .expect("valid constants")
    }

    /// `‖∇f(x)‖_∞² (1 − p) / p`.
    pub fn variance_formula(&self, x: &[T]) -> f64 {
        let g = self.function.gradient(x).norm_inf().as_f64();
        g * g * (1.0 - self.p) / self.p
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants() {
        let h = make_nonconvex_hard(1.0f64, 1.0, 0.2645, 2.5e-5).unwrap();
        assert_eq!(h.t, (1.0 / (2.0 * 2.5e-5 * 152.0 * 12.0)) as usize);
        assert!((h.lambda - (5e-5f64).sqrt() * 152.0).abs() < 1e-12);
        assert!((h.p - 2.0 * 2.5e-5 * 529.0 / 0.2645).abs() < 1e-12);
        let z = make_nonconvex_hard(1.0f64, 1.0, 0.0, 2.5e-5).unwrap();
        assert_eq!(z.p, 1.0);
    }

    #[test]
    fn too_small() {
        assert!(matches!(make_nonconvex_hard(1.0f64, 1.0, 1.0, 1.0), Err(Error::InstanceTooSmall(_))));
        assert!(make_nonconvex_hard(0.0f64, 1.0, 1.0, 1e-6).is_err());
    }
}
