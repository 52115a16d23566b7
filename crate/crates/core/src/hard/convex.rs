//! Convex construction: the Moreau envelope of a max of affine functions,
//!
//! ```text
//! f̃(y)  = max_{r=1..T+1} (l y_r − 5l²(r−1)/η)
//! f(x)  = min_y f̃(y) + (η/2)‖y − x‖²
//! ```
//!
//! The prox point comes from the dual: `y = x − (l/η)λ` with `λ` the
//! Euclidean projection of `a/κ` onto the simplex, where
//! `a_r = l x_r − 5l²(r−1)/η` and `κ = l²/η`.

use std::sync::Arc;

use crate::error::{param, Error, Result};
use crate::model::estimator::{Estimator, ProgressRule};
use crate::model::point::{dist_sq, Point};
use crate::model::problem::{ConvexInfo, Objective, ProblemSpec};
use crate::scalar::Real;

/// Euclidean projection onto `{λ >= 0, Σλ = 1}` (sort-based).
pub fn project_simplex<T: Real>(v: &[T]) -> Vec<T> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).expect("finite input"));
    let mut cum = T::zero();
    let mut theta = T::zero();
    for (j, &uj) in u.iter().enumerate() {
        cum = cum + uj;
        let t = (cum - T::one()) / T::c((j + 1) as f64);
        if uj - t > T::zero() {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(T::zero())).collect()
}

fn offsets<T: Real>(l: T, eta: T, r: usize) -> T {
    T::c(5.0) * l * l * T::c(r as f64) / eta
}

/// Dual weights `λ` of the prox problem at `x`.
fn dual<T: Real>(x: &[T], l: T, eta: T) -> Vec<T> {
    let kappa = l * l / eta;
    let a: Vec<T> = x.iter().enumerate().map(|(r, &xr)| (l * xr - offsets(l, eta, r)) / kappa).collect();
    project_simplex(&a)
}

/// `y(x) = argmin_y f̃(y) + (η/2)‖y − x‖²`.
pub fn convex_prox<T: Real>(x: &[T], l: T, eta: T) -> Result<Point<T>> {
    if !(l > T::zero() && eta > T::zero()) {
        return Err(param("need l, η > 0"));
    }
    let lam = dual(x, l, eta);
    Ok(Point::from(x.iter().zip(&lam).map(|(&xi, &li)| xi - l / eta * li).collect::<Vec<_>>()))
}

fn max_affine<T: Real>(y: &[T], l: T, eta: T) -> T {
    y.iter()
        .enumerate()
        .map(|(r, &yr)| l * yr - offsets(l, eta, r))
        .fold(T::neg_infinity(), T::max)
}

/// Optimality residual of `y = convex_prox(x)`: the larger of the gap
/// between active pieces and the max, and any violation of `Σλ = 1`, `λ >= 0`.
pub fn prox_kkt_residual<T: Real>(x: &[T], l: T, eta: T) -> T {
    let lam = dual(x, l, eta);
    let y: Vec<T> = x.iter().zip(&lam).map(|(&xi, &li)| xi - l / eta * li).collect();
    let m = max_affine(&y, l, eta);
    let mut res = (lam.iter().copied().sum::<T>() - T::one()).abs();
    for (r, (&yr, &lr)) in y.iter().zip(&lam).enumerate() {
        res = res.max((-lr).max(T::zero()));
        if lr > T::zero() {
            res = res.max((m - (l * yr - offsets(l, eta, r))).abs());
        }
    }
    res
}

/// `R · f_{l,η}(x/R)`: Lipschitz constant `l`, smoothness `η/R`.
#[derive(Clone, Debug)]
pub struct MaxAffineEnvelope<T> {
    pub dim: usize,
    pub l: T,
    pub eta: T,
    pub radius: T,
}

impl<T: Real> Objective<T> for MaxAffineEnvelope<T> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[T]) -> T {
        let z: Vec<T> = x.iter().map(|&v| v / self.radius).collect();
        let lam = dual(&z, self.l, self.eta);
        let y: Vec<T> = z.iter().zip(&lam).map(|(&zi, &li)| zi - self.l / self.eta * li).collect();
        self.radius * (max_affine(&y, self.l, self.eta) + T::c(0.5) * self.eta * dist_sq(&y, &z))
    }

    fn gradient_into(&self, x: &[T], out: &mut [T]) {
        let z: Vec<T> = x.iter().map(|&v| v / self.radius).collect();
        // ∇f = η(z − y) = lλ
        for (o, li) in out.iter_mut().zip(dual(&z, self.l, self.eta)) {
            *o = self.l * li;
        }
    }
}

#[derive(Clone, Debug)]
pub struct ConvexHard<T> {
    pub t: usize,
    pub l: T,
    pub eta: T,
    pub radius: T,
    pub lipschitz: T,
    pub smoothness: T,
    pub eps: T,
    pub variance: T,
    pub p: f64,
    function: MaxAffineEnvelope<T>,
}

/// Unit-radius instance: `T = min{⌊M²/(64ε²) − 1⌋, ⌊√L/(√80 √ε) − 1⌋}`,
/// `l = min{M, L/(10(T+1)^{3/2})}`, `η = 10(T+1)^{3/2} l`, `p = min{l²/σ², 1}`.
pub fn make_convex_hard<T: Real>(m: T, l: T, eps: T, sigma2: T) -> Result<ConvexHard<T>> {
    make_convex_hard_with_radius(m, l, eps, sigma2, T::one())
}

/// Radius-`R` instance `x ↦ R f(x/R)`, where `f` is the unit instance built
/// for `(M, LR, ε/R)`. It is `M`-Lipschitz and `L`-smooth, and its values
/// scale by `R`, so the unit-radius guarantees carry over with `ε`.
pub fn make_convex_hard_with_radius<T: Real>(m: T, l: T, eps: T, sigma2: T, radius: T) -> Result<ConvexHard<T>> {
    if !(m > T::zero() && l > T::zero() && eps > T::zero() && radius > T::zero() && sigma2 >= T::zero()) {
        return Err(param("need M, L, ε, R > 0 and σ² >= 0"));
    }
    let lu = l * radius;
    let eu = eps / radius;
    let t1 = (m * m / (T::c(64.0) * eu * eu) - T::one()).floor();
    let t2 = (lu.sqrt() / (T::c(80f64.sqrt()) * eu.sqrt()) - T::one()).floor();
    let t = t1.min(t2);
    if t < T::one() {
        return Err(Error::InstanceTooSmall(format!("T = {t} < 1; decrease ε")));
    }
    let t = t.to_usize().ok_or_else(|| param("T does not fit in usize"))?;
    let tp = T::c((t + 1) as f64).powf(T::c(1.5));
    let lc = m.min(lu / (T::c(10.0) * tp));
    let eta = T::c(10.0) * tp * lc;
    let p = if sigma2.is_zero() { 1.0 } else { (lc * lc / sigma2).as_f64().min(1.0) };
    Ok(ConvexHard {
        t,
        l: lc,
        eta,
        radius,
        lipschitz: m,
        smoothness: l,
        eps,
        variance: sigma2,
        p,
        function: MaxAffineEnvelope { dim: t + 1, l: lc, eta, radius },
    })
}

impl<T: Real> ConvexHard<T> {
    pub fn dim(&self) -> usize {
        self.t + 1
    }

    pub fn function(&self) -> &MaxAffineEnvelope<T> {
        &self.function
    }

    pub fn objective(&self) -> Arc<dyn Objective<T>> {
        Arc::new(self.function.clone())
    }

    pub fn estimator(&self) -> Estimator<T> {
        Estimator::bernoulli(self.objective(), self.p, ProgressRule::Global, Some(self.variance.as_f64()))
            .expect("p in (0, 1]")
    }

    /// `−(R/√(T+1))·1`, where the unit instance attains `f <= −l/√(T+1)`.
    pub fn witness(&self) -> Point<T> {
        let v = -self.radius / T::c((self.t + 1) as f64).sqrt();
        Point::from(vec![v; self.dim()])
    }

    /// Upper bound on the minimum over the radius-`R` ball: `−R l/√(T+1)`.
    pub fn min_upper_bound(&self) -> T {
        -self.radius * self.l / T::c((self.t + 1) as f64).sqrt()
    }

    /// Started at the origin. `f* ` is unknown; the gap uses the bound above.
    pub fn problem(&self) -> ProblemSpec<T> {
        let obj = self.objective();
        let gap = obj.value(&Point::zeros(self.dim())) - self.min_upper_bound();
        ProblemSpec::new("convex_hard", obj, self.smoothness, Point::zeros(self.dim()), None, Some(gap))
            .expect("valid constants")
            .with_convex(ConvexInfo { lipschitz: Some(self.lipschitz), radius: Some(self.radius) })
    }
}
