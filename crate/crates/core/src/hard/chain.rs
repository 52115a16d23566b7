//! The zero-chain function `F_T`.
//!
//! ```text
//! F_T(x) = −Ψ(1)Φ(x₁) + Σ_{i=2..T} [Ψ(−x_{i−1})Φ(−x_i) − Ψ(x_{i−1})Φ(x_i)]
//! Ψ(x)   = 0                    for x <= 1/2
//!          exp(1 − 1/(2x−1)²)   for x > 1/2
//! Φ(x)   = √e ∫_{−∞}^x e^{−t²/2} dt
//! ```

use std::f64::consts::{E, PI};

use crate::error::{param, Result};
use crate::model::point::Point;
use crate::model::problem::Objective;
use crate::scalar::Real;

pub fn psi<T: Real>(x: T) -> T {
    let half = T::c(0.5);
    if x <= half {
        return T::zero();
    }
    let u = T::c(2.0) * x - T::one();
    // u² may underflow near 1/2; 1/0 = inf and exp(-inf) = 0 is the right limit
    (T::one() - T::one() / (u * u)).exp()
}

pub fn psi_prime<T: Real>(x: T) -> T {
    let v = psi(x);
    if v.is_zero() {
        return T::zero();
    }
    let u = T::c(2.0) * x - T::one();
    v * T::c(4.0) / (u * u * u)
}

pub fn phi<T: Real>(x: T) -> T {
    T::c(E.sqrt() * (PI / 2.0).sqrt()) * (T::one() + (x / T::c(2f64.sqrt())).erf())
}

pub fn phi_prime<T: Real>(x: T) -> T {
    T::c(E.sqrt()) * (-(x * x) / T::c(2.0)).exp()
}

fn check(x: &[impl Real]) -> Result<()> {
    if x.is_empty() {
        return Err(crate::Error::InvalidDimension("F_T needs T >= 1".into()));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(param("F_T input is not finite"));
    }
    Ok(())
}

fn value_unchecked<T: Real>(x: &[T]) -> T {
    let mut s = -psi(T::one()) * phi(x[0]);
    for i in 1..x.len() {
        s = s + psi(-x[i - 1]) * phi(-x[i]) - psi(x[i - 1]) * phi(x[i]);
    }
    s
}

fn grad_unchecked<T: Real>(x: &[T], g: &mut [T]) {
    let t = x.len();
    for j in 0..t {
        let mut v = if j == 0 {
            -psi(T::one()) * phi_prime(x[0])
        } else {
            -psi(-x[j - 1]) * phi_prime(-x[j]) - psi(x[j - 1]) * phi_prime(x[j])
        };
        if j + 1 < t {
            v = v - psi_prime(-x[j]) * phi(-x[j + 1]) - psi_prime(x[j]) * phi(x[j + 1]);
        }
        g[j] = v;
    }
}

/// `F_T(x)` with `T = x.len()`.
pub fn ft_value<T: Real>(x: &[T]) -> Result<T> {
    check(x)?;
    Ok(value_unchecked(x))
}

pub fn ft_grad<T: Real>(x: &[T]) -> Result<Point<T>> {
    check(x)?;
    let mut g = Point::zeros(x.len());
    grad_unchecked(x, &mut g);
    Ok(g)
}

/// `F_T` as an [`Objective`].
#[derive(Clone, Copy, Debug)]
pub struct Chain {
    pub t: usize,
}

impl<T: Real> Objective<T> for Chain {
    fn dim(&self) -> usize {
        self.t
    }

    fn value(&self, x: &[T]) -> T {
        value_unchecked(x)
    }

    fn gradient_into(&self, x: &[T], out: &mut [T]) {
        grad_unchecked(x, out)
    }
}

/// `scale · F_T(x_B / λ)` where `x_B` is the block `[start, start + t)` of a
/// `dim`-dimensional input.
#[derive(Clone, Debug)]
pub struct ScaledChain<T> {
    pub dim: usize,
    pub start: usize,
    pub t: usize,
    pub lambda: T,
    pub scale: T,
}

impl<T: Real> ScaledChain<T> {
    fn block(&self, x: &[T]) -> Vec<T> {
        x[self.start..self.start + self.t].iter().map(|&v| v / self.lambda).collect()
    }
}

impl<T: Real> Objective<T> for ScaledChain<T> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[T]) -> T {
        self.scale * value_unchecked(&self.block(x))
    }

    fn gradient_into(&self, x: &[T], out: &mut [T]) {
        out.iter_mut().for_each(|o| *o = T::zero());
        let z = self.block(x);
        let g = &mut out[self.start..self.start + self.t];
        grad_unchecked(&z, g);
        let c = self.scale / self.lambda;
        for v in g.iter_mut() {
            *v = *v * c;
        }
    }
}
