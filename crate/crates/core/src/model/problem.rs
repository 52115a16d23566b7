use std::fmt;
use std::sync::Arc;

use crate::error::{param, Result};
use crate::model::point::{dist_sq, norm_sq, Point};
use crate::scalar::Real;

/// A differentiable objective `f: R^d -> R`.
pub trait Objective<T: Real>: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[T]) -> T;

    /// Writes `∇f(x)` into `out` (overwrites).
    fn gradient_into(&self, x: &[T], out: &mut [T]);

    fn gradient(&self, x: &[T]) -> Point<T> {
        let mut g = Point::zeros(self.dim());
        self.gradient_into(x, &mut g);
        g
    }
}

/// Objective of the form `(1/N) Σ f_s(x)` whose summands can be sampled.
pub trait FiniteSum<T: Real>: Objective<T> {
    fn samples(&self) -> usize;

    /// Adds `∇f_s(x)` to `out`.
    fn add_sample_gradient(&self, x: &[T], s: usize, out: &mut [T]);
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConvexInfo<T> {
    /// Lipschitz constant `M` of `f`, if bounded.
    pub lipschitz: Option<T>,
    /// `R >= ||x0 - x*||`.
    pub radius: Option<T>,
}

/// A problem instance: objective, start point and the constants the
/// theorem-prescribed hyperparameters need.
#[derive(Clone)]
pub struct ProblemSpec<T: Real> {
    pub name: String,
    pub objective: Arc<dyn Objective<T>>,
    /// Smoothness constant `L`.
    pub smoothness: T,
    pub start: Point<T>,
    /// `f*`, when known.
    pub optimum: Option<T>,
    /// `Δ >= f(x0) - f*`.
    pub gap: T,
    pub convex: Option<ConvexInfo<T>>,
}

impl<T: Real> fmt::Debug for ProblemSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("dim", &self.dim())
            .field("smoothness", &self.smoothness)
            .field("optimum", &self.optimum)
            .field("gap", &self.gap)
            .field("convex", &self.convex)
            .finish()
    }
}

impl<T: Real> ProblemSpec<T> {
    /// With `optimum` known the gap is computed as `f(x0) - f*`; otherwise
    /// `gap` must be supplied.
    pub fn new(
        name: impl Into<String>,
        objective: Arc<dyn Objective<T>>,
        smoothness: T,
        start: Point<T>,
        optimum: Option<T>,
        gap: Option<T>,
    ) -> Result<Self> {
        if !(smoothness > T::zero() && smoothness.is_finite()) {
            return Err(param("smoothness L must be positive and finite"));
        }
        if start.dim() != objective.dim() {
            return Err(crate::Error::InvalidDimension(format!(
                "start point has dimension {}, objective {}",
                start.dim(),
                objective.dim()
            )));
        }
        if !start.is_finite() {
            return Err(param("start point is not finite"));
        }
        let gap = match (gap, optimum) {
            (Some(g), _) => g,
            (None, Some(fs)) => objective.value(&start) - fs,
            (None, None) => return Err(param("either the gap or f* must be given")),
        };
        if gap < T::zero() {
            return Err(param("gap Δ must be non-negative"));
        }
        Ok(ProblemSpec {
            name: name.into(),
            objective,
            smoothness,
            start,
            optimum,
            gap,
            convex: None,
        })
    }

    pub fn with_convex(mut self, info: ConvexInfo<T>) -> Self {
        self.convex = Some(info);
        self
    }

    /// Replaces the start point; recomputes the gap when `f*` is known.
    pub fn with_start(mut self, start: Point<T>) -> Result<Self> {
        if start.dim() != self.dim() {
            return Err(crate::Error::InvalidDimension(format!(
                "start point has dimension {}, problem {}",
                start.dim(),
                self.dim()
            )));
        }
        if let Some(fs) = self.optimum {
            self.gap = self.objective.value(&start) - fs;
        }
        self.start = start;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.objective.dim()
    }

    pub fn value(&self, x: &[T]) -> T {
        self.objective.value(x)
    }

    pub fn gradient(&self, x: &[T]) -> Point<T> {
        self.objective.gradient(x)
    }
}

/// Central finite-difference gradient with step `h` per coordinate.
pub fn finite_difference<T: Real>(f: &dyn Objective<T>, x: &[T], h: T) -> Vec<T> {
    let mut y = x.to_vec();
    let two = T::c(2.0);
    (0..x.len())
        .map(|i| {
            let xi = y[i];
            y[i] = xi + h;
            let up = f.value(&y);
            y[i] = xi - h;
            let down = f.value(&y);
            y[i] = xi;
            (up - down) / (two * h)
        })
        .collect()
}

/// `||∇f(x) - FD(f, x)||` together with the tolerance
/// `tol · (1 + ||∇f(x)||)` it should not exceed.
pub fn gradient_check<T: Real>(f: &dyn Objective<T>, x: &[T], h: T, tol: T) -> (T, T) {
    let g = f.gradient(x);
    let fd = finite_difference(f, x, h);
    (dist_sq(&g, &fd).sqrt(), tol * (T::one() + norm_sq(&g).sqrt()))
}

/// `(1/n) Σ f_i`.
#[derive(Clone)]
pub struct MeanObjective<T: Real> {
    parts: Vec<Arc<dyn Objective<T>>>,
}

impl<T: Real> MeanObjective<T> {
    pub fn new(parts: Vec<Arc<dyn Objective<T>>>) -> Result<Self> {
        let d = parts.first().map(|p| p.dim()).ok_or_else(|| param("no component functions"))?;
        if parts.iter().any(|p| p.dim() != d) {
            return Err(crate::Error::InvalidDimension("component dimensions differ".into()));
        }
        Ok(MeanObjective { parts })
    }
}

impl<T: Real> Objective<T> for MeanObjective<T> {
    fn dim(&self) -> usize {
        self.parts[0].dim()
    }

    fn value(&self, x: &[T]) -> T {
        let s: T = self.parts.iter().map(|p| p.value(x)).sum();
        s / T::c(self.parts.len() as f64)
    }

    fn gradient_into(&self, x: &[T], out: &mut [T]) {
        out.iter_mut().for_each(|o| *o = T::zero());
        let mut buf = vec![T::zero(); out.len()];
        for p in &self.parts {
            p.gradient_into(x, &mut buf);
            for (o, &b) in out.iter_mut().zip(&buf) {
                *o = *o + b;
            }
        }
        let n = T::c(self.parts.len() as f64);
        out.iter_mut().for_each(|o| *o = *o / n);
    }
}

/// The constant zero function on `R^d`.
#[derive(Clone, Copy, Debug)]
pub struct Zero {
    pub dim: usize,
}

impl<T: Real> Objective<T> for Zero {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, _: &[T]) -> T {
        T::zero()
    }

    fn gradient_into(&self, _: &[T], out: &mut [T]) {
        out.iter_mut().for_each(|o| *o = T::zero());
    }
}

/// `f(x) = M (sqrt(1 + ||x - c||²) - 1)`: convex, `M`-Lipschitz,
/// `M`-smooth, minimised at `c` with value 0.
#[derive(Clone, Debug)]
pub struct PseudoHuber<T> {
    center: Vec<T>,
    scale: T,
}

impl<T: Real> PseudoHuber<T> {
    pub fn new(center: Vec<T>, scale: T) -> Result<Self> {
        if center.is_empty() {
            return Err(crate::Error::InvalidDimension("empty center".into()));
        }
        if !(scale > T::zero()) {
            return Err(param("scale must be positive"));
        }
        Ok(PseudoHuber { center, scale })
    }
}

impl<T: Real> Objective<T> for PseudoHuber<T> {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn value(&self, x: &[T]) -> T {
        self.scale * ((T::one() + dist_sq(x, &self.center)).sqrt() - T::one())
    }

    fn gradient_into(&self, x: &[T], out: &mut [T]) {
        let r = (T::one() + dist_sq(x, &self.center)).sqrt();
        for ((o, &xi), &ci) in out.iter_mut().zip(x).zip(&self.center) {
            *o = self.scale * (xi - ci) / r;
        }
    }
}

/// Pseudo-Huber problem started at `start`, with `M = L = scale` and
/// `R = ||start - center||`.
pub fn pseudo_huber_problem<T: Real>(center: Vec<T>, scale: T, start: Point<T>) -> Result<ProblemSpec<T>> {
    let radius = dist_sq(&start, &center).sqrt();
    let obj = PseudoHuber::new(center, scale)?;
    Ok(ProblemSpec::new("pseudo_huber", Arc::new(obj), scale, start, Some(T::zero()), None)?
        .with_convex(ConvexInfo { lipschitz: Some(scale), radius: Some(radius) }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pseudo_huber_gradient_matches_fd() {
        let p = pseudo_huber_problem(vec![1.0, -2.0, 0.5], 3.0, Point::from(vec![4.0, 0.0, 0.0])).unwrap();
        for x in [[0.0, 0.0, 0.0], [1.0, -2.0, 0.5], [10.0, 3.0, -7.0]] {
            let (err, tol) = gradient_check(p.objective.as_ref(), &x, 1e-6, 1e-5);
            assert!(err <= tol, "{err} > {tol}");
            assert!(p.gradient(&x).norm() <= 3.0 + 1e-12);
        }
        assert_eq!(p.value(&[1.0, -2.0, 0.5]), 0.0);
        assert!((p.gap - 3.0 * ((1.0f64 + 13.25).sqrt() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_constants() {
        let obj = Arc::new(PseudoHuber::new(vec![0.0], 1.0).unwrap());
        assert!(ProblemSpec::new("x", obj.clone(), 0.0, Point::zeros(1), Some(0.0), None).is_err());
        assert!(ProblemSpec::new("x", obj.clone(), 1.0, Point::zeros(2), Some(0.0), None).is_err());
        assert!(ProblemSpec::new("x", obj, 1.0, Point::zeros(1), None, None).is_err());
    }
}
