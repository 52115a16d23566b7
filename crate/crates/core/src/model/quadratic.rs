//! Quadratics `½ xᵀAx − bᵀx` with a symmetric tridiagonal Toeplitz `A`.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::point::{dot, Point};
use crate::model::problem::{ConvexInfo, Objective, ProblemSpec};
use crate::scalar::Real;

#[derive(Clone, Debug)]
pub struct TridiagQuadratic<T> {
    diag: T,
    off: T,
    b: Vec<T>,
}

impl<T: Real> TridiagQuadratic<T> {
    pub fn new(diag: T, off: T, b: Vec<T>) -> Result<Self> {
        if b.len() < 2 {
            return Err(Error::InvalidDimension(format!("need d >= 2, got {}", b.len())));
        }
        Ok(TridiagQuadratic { diag, off, b })
    }

    /// `A = ¼ tridiag(−1, 2, −1)` with linear term `b`.
    pub fn quarter_laplacian(b: Vec<T>) -> Result<Self> {
        Self::new(T::c(0.5), T::c(-0.25), b)
    }

    pub fn b(&self) -> &[T] {
        &self.b
    }

    /// `y = A x`
    pub fn apply(&self, x: &[T], y: &mut [T]) {
        let d = x.len();
        for i in 0..d {
            let mut v = self.diag * x[i];
            if i > 0 {
                v = v + self.off * x[i - 1];
            }
            if i + 1 < d {
                v = v + self.off * x[i + 1];
            }
            y[i] = v;
        }
    }

    /// Eigenvalues are `diag + 2·off·cos(kπ/(d+1))`, `k = 1..d`.
    pub fn lambda_max(&self) -> T {
        let c = (PI / (self.b.len() as f64 + 1.0)).cos();
        self.diag + T::c(2.0) * self.off.abs() * T::c(c)
    }

    pub fn lambda_min(&self) -> T {
        let c = (PI / (self.b.len() as f64 + 1.0)).cos();
        self.diag - T::c(2.0) * self.off.abs() * T::c(c)
    }

    /// Solves `A x = b` by the Thomas algorithm. Requires `A` nonsingular
    /// with no zero pivots, which holds for positive definite `A`.
    pub fn minimizer(&self) -> Point<T> {
        let d = self.b.len();
        let mut cp = vec![T::zero(); d];
        let mut dp = vec![T::zero(); d];
        cp[0] = self.off / self.diag;
        dp[0] = self.b[0] / self.diag;
        for i in 1..d {
            let m = self.diag - self.off * cp[i - 1];
            cp[i] = self.off / m;
            dp[i] = (self.b[i] - self.off * dp[i - 1]) / m;
        }
        let mut x = vec![T::zero(); d];
        x[d - 1] = dp[d - 1];
        for i in (0..d - 1).rev() {
            x[i] = dp[i] - cp[i] * x[i + 1];
        }
        Point::from(x)
    }

    /// `f* = −½ bᵀx*`
    pub fn optimum(&self) -> T {
        -T::c(0.5) * dot(&self.b, &self.minimizer())
    }
}

impl<T: Real> Objective<T> for TridiagQuadratic<T> {
    fn dim(&self) -> usize {
        self.b.len()
    }

    fn value(&self, x: &[T]) -> T {
        let d = x.len();
        let mut quad = T::zero();
        for i in 0..d {
            quad = quad + self.diag * x[i] * x[i];
            if i + 1 < d {
                quad = quad + T::c(2.0) * self.off * x[i] * x[i + 1];
            }
        }
        T::c(0.5) * quad - dot(&self.b, x)
    }

    fn gradient_into(&self, x: &[T], out: &mut [T]) {
        self.apply(x, out);
        for (o, &bi) in out.iter_mut().zip(&self.b) {
            *o = *o - bi;
        }
    }
}

fn first_coordinate_b<T: Real>(d: usize) -> Vec<T> {
    let mut b = vec![T::zero(); d];
    if d > 0 {
        b[0] = T::c(-0.25);
    }
    b
}

fn spec_from<T: Real>(name: &str, q: TridiagQuadratic<T>) -> Result<ProblemSpec<T>> {
    let d = q.dim();
    let x_star = q.minimizer();
    let fs = q.optimum();
    let l = q.lambda_max();
    let start = Point::zeros(d);
    let radius = x_star.norm();
    Ok(ProblemSpec::new(name, Arc::new(q), l, start, Some(fs), None)?
        .with_convex(ConvexInfo { lipschitz: None, radius: Some(radius) }))
}

/// The tridiagonal test quadratic: `A = ¼ tridiag(−1, 2, −1)`,
/// `b = ¼(−1, 0, ..., 0)`, started at the origin.
pub fn quadratic_problem<T: Real>(d: usize) -> Result<ProblemSpec<T>> {
    if d < 2 {
        return Err(Error::InvalidDimension(format!("need d >= 2, got {d}")));
    }
    spec_from("quadratic", TridiagQuadratic::quarter_laplacian(first_coordinate_b(d))?)
}

/// Same matrix with an arbitrary linear term. Used to build heterogeneous
/// per-worker objectives whose average is [`quadratic_problem`].
pub fn quadratic_with_linear<T: Real>(b: Vec<T>) -> Result<ProblemSpec<T>> {
    spec_from("quadratic", TridiagQuadratic::quarter_laplacian(b)?)
}

/// Splits `b = ¼(−1, 0, ..., 0)` into `n` linear terms `b_i` with mean `b`.
/// Worker `i` gets an extra `±shift` on coordinate `i mod d` (paired so the
/// perturbations cancel).
pub fn heterogeneous_linear_terms<T: Real>(d: usize, n: usize, shift: T) -> Vec<Vec<T>> {
    let base: Vec<T> = first_coordinate_b(d);
    let mut out = vec![base; n];
    for pair in 0..n / 2 {
        let j = pair % d;
        out[2 * pair][j] = out[2 * pair][j] + shift;
        out[2 * pair + 1][j] = out[2 * pair + 1][j] - shift;
    }
    out
}
