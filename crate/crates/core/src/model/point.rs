use std::ops::{Deref, DerefMut};

use crate::error::{param, Result};
use crate::scalar::Real;

/// Dense coordinate vector. Iterates, query points and gradients all use it.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Point<T>(Vec<T>);

impl<T: Real> Point<T> {
    pub fn zeros(d: usize) -> Self {
        Point(vec![T::zero(); d])
    }

    /// Builds a point, rejecting non-finite entries.
    pub fn new(coords: Vec<T>) -> Result<Self> {
        if let Some(i) = coords.iter().position(|v| !v.is_finite()) {
            return Err(param(format!("coordinate {i} is not finite")));
        }
        Ok(Point(coords))
    }

    /// `e_i` scaled by `v` (0-based `i`).
    pub fn basis(d: usize, i: usize, v: T) -> Self {
        let mut p = Self::zeros(d);
        p.0[i] = v;
        p
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_vec(self) -> Vec<T> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn norm_sq(&self) -> T {
        norm_sq(&self.0)
    }

    pub fn norm(&self) -> T {
        self.norm_sq().sqrt()
    }

    pub fn norm_inf(&self) -> T {
        self.0.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn dot(&self, other: &[T]) -> T {
        dot(&self.0, other)
    }

    /// `self += a * x`
    pub fn axpy(&mut self, a: T, x: &[T]) {
        axpy(&mut self.0, a, x)
    }

    pub fn scale(&mut self, a: T) {
        for v in &mut self.0 {
            *v = *v * a;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|v| v.is_zero())
    }

    /// 0-based indices of non-zero coordinates.
    pub fn support(&self) -> Vec<usize> {
        support(&self.0)
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|v| v.as_f64()).collect()
    }
}

impl<T> From<Vec<T>> for Point<T> {
    /// Unchecked; use [`Point::new`] for untrusted input.
    fn from(v: Vec<T>) -> Self {
        Point(v)
    }
}

impl<T> Deref for Point<T> {
    type Target = [T];
    fn deref(&self) -> &[T] {
        &self.0
    }
}

impl<T> DerefMut for Point<T> {
    fn deref_mut(&mut self) -> &mut [T] {
        &mut self.0
    }
}

pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(T::zero(), |s, (&x, &y)| s + x * y)
}

pub fn norm_sq<T: Real>(a: &[T]) -> T {
    a.iter().fold(T::zero(), |s, &x| s + x * x)
}

pub fn axpy<T: Real>(y: &mut [T], a: T, x: &[T]) {
    debug_assert_eq!(y.len(), x.len());
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi = *yi + a * xi;
    }
}

pub fn dist_sq<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |s, (&x, &y)| s + (x - y) * (x - y))
}

pub fn support<T: Real>(a: &[T]) -> Vec<usize> {
    a.iter()
        .enumerate()
        .filter(|(_, v)| !v.is_zero())
        .map(|(i, _)| i)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_algebra() {
        let mut p = Point::new(vec![1.0, -2.0, 0.0]).unwrap();
        assert_eq!(p.norm_sq(), 5.0);
        assert_eq!(p.norm_inf(), 2.0);
        assert_eq!(p.support(), vec![0, 1]);
        p.axpy(2.0, &[1.0, 1.0, 1.0]);
        assert_eq!(&*p, &[3.0, 0.0, 2.0]);
        p.scale(0.5);
        assert_eq!(p.dot(&[1.0, 1.0, 1.0]), 2.5);
        assert!(Point::new(vec![f64::NAN]).is_err());
        assert_eq!(&*Point::basis(3, 1, 4.0f32), &[0.0, 4.0, 0.0]);
    }
}
