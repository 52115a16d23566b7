use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::dataset::Dataset;
use crate::model::point::{dot, norm_sq, Point};
use crate::model::problem::{FiniteSum, Objective, ProblemSpec};
use crate::scalar::Real;

/// `(1/N) Σ_s [softplus(a_sᵀw) − y_s a_sᵀw] + (reg/2)‖w‖²`
#[derive(Clone, Debug)]
pub struct LogisticRegression<T> {
    rows: Vec<Vec<T>>,
    labels: Vec<T>,
    reg: T,
}

fn softplus<T: Real>(z: T) -> T {
    // log(1 + e^z) without overflow
    if z > T::zero() {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid<T: Real>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

impl<T: Real> LogisticRegression<T> {
    pub fn new(data: &Dataset, reg: T) -> Result<Self> {
        if data.is_empty() || data.dim() == 0 {
            return Err(Error::EmptyDataset);
        }
        if let Some(l) = data.labels.iter().find(|&&l| l != 0.0 && l != 1.0) {
            return Err(Error::InvalidParameter(format!("label {l} is not in {{0, 1}}")));
        }
        if reg < T::zero() {
            return Err(Error::InvalidParameter("regularization must be non-negative".into()));
        }
        Ok(LogisticRegression {
            rows: data.features.iter().map(|r| r.iter().map(|&v| T::c(v)).collect()).collect(),
            labels: data.labels.iter().map(|&v| T::c(v)).collect(),
            reg,
        })
    }

    /// `‖A‖_F² / (4N) + reg`, an upper bound on the Hessian norm.
    pub fn smoothness_bound(&self) -> T {
        let fro: T = self.rows.iter().map(|r| norm_sq(r)).sum();
        fro / (T::c(4.0) * T::c(self.rows.len() as f64)) + self.reg
    }
}

impl<T: Real> Objective<T> for LogisticRegression<T> {
    fn dim(&self) -> usize {
        self.rows[0].len()
    }

    fn value(&self, x: &[T]) -> T {
        let n = T::c(self.rows.len() as f64);
        let loss: T = self
            .rows
            .iter()
            .zip(&self.labels)
            .map(|(a, &y)| {
                let z = dot(a, x);
                softplus(z) - y * z
            })
            .sum();
        loss / n + T::c(0.5) * self.reg * norm_sq(x)
    }

    fn gradient_into(&self, x: &[T], out: &mut [T]) {
        out.iter_mut().for_each(|o| *o = T::zero());
        for s in 0..self.rows.len() {
            self.add_sample_gradient(x, s, out);
        }
        let n = T::c(self.rows.len() as f64);
        for o in out.iter_mut() {
            *o = *o / n;
        }
    }
}

impl<T: Real> FiniteSum<T> for LogisticRegression<T> {
    fn samples(&self) -> usize {
        self.rows.len()
    }

    fn add_sample_gradient(&self, x: &[T], s: usize, out: &mut [T]) {
        let a = &self.rows[s];
        let r = sigmoid(dot(a, x)) - self.labels[s];
        for ((o, &ai), &xi) in out.iter_mut().zip(a).zip(x) {
            *o = *o + r * ai + self.reg * xi;
        }
    }
}

/// Logistic regression started at `w = 0`. `f* >= 0`, so `Δ` is set to
/// `f(0) = ln 2`, an upper bound.
pub fn logreg_problem<T: Real>(data: &Dataset, reg: T) -> Result<(ProblemSpec<T>, Arc<LogisticRegression<T>>)> {
    let obj = Arc::new(LogisticRegression::new(data, reg)?);
    let d = obj.dim();
    let l = obj.smoothness_bound();
    let l = if l > T::zero() { l } else { T::one() };
    let start = Point::zeros(d);
    let gap = obj.value(&start);
    let spec = ProblemSpec::new("logreg", obj.clone(), l, start, None, Some(gap))?;
    Ok((spec, obj))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::problem::gradient_check;

    fn data() -> Dataset {
        Dataset::parse("1,0.5,-1,2\n0,1,0.3,-0.2\n1,-0.7,0.1,0.9\n0,0.2,0.2,0.2\n").unwrap()
    }

    #[test]
    fn single_sample_at_zero_is_ln2() {
        let d = Dataset::parse("1,3,4\n").unwrap();
        let (p, _) = logreg_problem::<f64>(&d, 0.0).unwrap();
        assert!((p.value(&[0.0, 0.0]) - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn gradient_matches_fd() {
        let (p, _) = logreg_problem::<f64>(&data(), 0.1).unwrap();
        for x in [[0.3, -0.2, 0.8], [5.0, 4.0, -3.0], [-40.0, 2.0, 1.0]] {
            let g = p.gradient(&x);
            let fd = crate::model::problem::finite_difference(p.objective.as_ref(), &x, 1e-6);
            for (a, b) in g.iter().zip(&fd) {
                assert!((a - b).abs() <= 1e-6 * (1.0 + a.abs()), "{a} vs {b}");
            }
            let (e, t) = gradient_check(p.objective.as_ref(), &x, 1e-6, 1e-5);
            assert!(e <= t);
        }
    }

    #[test]
    fn rejects_bad_labels_and_empty() {
        let d = Dataset::parse("2,1\n").unwrap();
        assert!(logreg_problem::<f64>(&d, 0.0).is_err());
        let empty = Dataset { features: vec![], labels: vec![] };
        assert!(matches!(logreg_problem::<f64>(&empty, 0.0), Err(Error::EmptyDataset)));
    }
}
