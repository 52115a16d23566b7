//! Closed-form time complexities and the two delay lemmas.
//!
//! Universal constants are dropped everywhere: values are meant for ratios
//! and trends, not absolute predictions. All argmins return the smallest
//! 1-based minimizer.

use num_traits::ToPrimitive;
use serde::Serialize;

use crate::error::{param, Result};
use crate::scalar::{Field, Real};

fn check_sorted<F: Field>(taus: &[F]) -> Result<()> {
    if taus.is_empty() {
        return Err(param("empty delay list"));
    }
    if taus.iter().any(|t| *t <= F::zero()) {
        return Err(param("delays must be positive"));
    }
    if taus.windows(2).any(|w| w[0] > w[1]) {
        return Err(param("delays must be sorted ascending"));
    }
    Ok(())
}

/// `Σ_{i<=m} 1/τ_i` for `m = 1..=n`.
fn inverse_prefix<F: Field>(taus: &[F]) -> Vec<F> {
    let mut acc = F::zero();
    taus.iter()
        .map(|t| {
            acc = acc.clone() + F::one() / t.clone();
            acc.clone()
        })
        .collect()
}

/// Smallest-index minimizer of `f(m)` over `m = 1..=n`.
fn argmin<F: Field>(n: usize, mut f: impl FnMut(usize) -> F) -> (F, usize) {
    let mut best = (f(1), 1);
    for m in 2..=n {
        let v = f(m);
        if v < best.0 {
            best = (v, m);
        }
    }
    best
}

/// `t′(j) = (Σ_{i<=j} 1/τ_i)^{-1} (S + j)`, with 1-based `j`.
pub fn t_prime<F: Field>(taus: &[F], s: &F, j: usize) -> Result<F> {
    check_sorted(taus)?;
    if j == 0 || j > taus.len() {
        return Err(param(format!("j = {j} out of range 1..={}", taus.len())));
    }
    if *s < F::one() {
        return Err(param("S must be >= 1"));
    }
    let inv = inverse_prefix(&taus[..j]).pop().unwrap();
    Ok((s.clone() + F::from_usize_exact(j)) / inv)
}

/// `min_j t′(j)` and the smallest minimizing `j`.
pub fn t_prime_min<F: Field>(taus: &[F], s: &F) -> Result<(F, usize)> {
    check_sorted(taus)?;
    if *s < F::one() {
        return Err(param("S must be >= 1"));
    }
    let inv = inverse_prefix(taus);
    Ok(argmin(taus.len(), |j| (s.clone() + F::from_usize_exact(j)) / inv[j - 1].clone()))
}

/// Both sides of the delay lemma for batch collection, `S >= 1/4`:
///
/// * `t₁ = S (Σ_{i<=j*} 1/τ_i)^{-1}`, where `j*` is the first `m` with
///   `S (Σ_{i<=m} 1/τ_i)^{-1} < τ_{m+1}` and `τ_{n+1} = ∞`;
/// * `t₂ = min_j (Σ_{i<=j} 1/τ_i)^{-1} (S + j)`.
///
/// The lemma states `t₁ <= t₂ <= 6 t₁`.
pub fn lemma_tau_check<F: Field>(taus: &[F], s: &F) -> Result<(F, F)> {
    check_sorted(taus)?;
    if *s < F::lit(0.25) {
        return Err(param("S must be >= 1/4"));
    }
    let n = taus.len();
    let inv = inverse_prefix(taus);
    let j1 = (1..=n)
        .find(|&m| m == n || s.clone() / inv[m - 1].clone() < taus[m])
        .expect("m = n always qualifies");
    let t1 = s.clone() / inv[j1 - 1].clone();
    let (t2, _) = argmin(n, |j| (s.clone() + F::from_usize_exact(j)) / inv[j - 1].clone());
    Ok((t1, t2))
}

/// Both sides of the synchronized delay lemma, `η >= 1`:
/// `t₁ = η min_{m<=η} τ_m/m` and `t₂ = min_{m<=n} τ_m (1 + η/m)`, with the
/// first range cut at `n` when `η > n`. The lemma states
/// `t₁ <= t₂ <= 2 t₁`.
pub fn lemma_tau_sync_check<F: Field>(taus: &[F], eta: usize) -> Result<(F, F)> {
    check_sorted(taus)?;
    if eta == 0 {
        return Err(param("eta must be a positive integer"));
    }
    let n = taus.len();
    let e = F::from_usize_exact(eta);
    let (m1, _) = argmin(eta.min(n), |m| taus[m - 1].clone() / F::from_usize_exact(m));
    let t1 = e.clone() * m1;
    let (t2, _) = argmin(n, |m| taus[m - 1].clone() * (F::one() + e.clone() / F::from_usize_exact(m)));
    Ok((t1, t2))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Entry {
    pub name: String,
    pub value: f64,
    /// Optimizing `m` (or `j`) for expressions that minimize over workers.
    pub argmin: Option<usize>,
}

/// Evaluated complexity expressions, without universal constants.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComplexityReport {
    pub setting: String,
    pub constants: &'static str,
    pub entries: Vec<Entry>,
}

impl ComplexityReport {
    fn new(setting: &str) -> Self {
        ComplexityReport { setting: setting.into(), constants: "omitted", entries: Vec::new() }
    }

    fn push<F: ToPrimitive>(&mut self, name: &str, value: F, argmin: Option<usize>) {
        let value = value.to_f64().unwrap_or(f64::NAN);
        self.entries.push(Entry { name: name.into(), value, argmin });
    }

    pub fn get(&self, name: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn value(&self, name: &str) -> f64 {
        self.get(name).map_or(f64::NAN, |e| e.value)
    }

    pub fn to_table(&self) -> String {
        let w = self.entries.iter().map(|e| e.name.len()).max().unwrap_or(4).max(4);
        let mut out = format!("{} (constants {})\n", self.setting, self.constants);
        out += &format!("{:<w$}  {:>14}  {:>6}\n", "name", "value", "argmin");
        for e in &self.entries {
            let a = e.argmin.map(|m| m.to_string()).unwrap_or_else(|| "-".into());
            out += &format!("{:<w$}  {:>14.6e}  {:>6}\n", e.name, e.value, a);
        }
        out
    }
}

/// Nonconvex smooth expressions with `A = LΔ/ε`, `B = σ²LΔ/ε²`:
///
/// * `minibatch`: `τ_n (A + B/n)`
/// * `async`: `(1/n Σ 1/τ_i)^{-1} (A + B/n)`
/// * `homogeneous` (Rennala and the lower bound): `min_m (1/m Σ_{i<=m} 1/τ_i)^{-1} (A + B/m)`
/// * `heterogeneous` (Malenia and its lower bound): `τ_n A + (1/n Σ τ_i) B/n`
/// * `sync` (m-Minibatch and its lower bound): `min_m τ_m (A + B/m)`
pub fn time_bounds<F: Field + ToPrimitive>(taus: &[F], l: F, delta: F, sigma2: F, eps: F) -> Result<ComplexityReport> {
    check_sorted(taus)?;
    for (name, v) in [("L", &l), ("delta", &delta), ("eps", &eps)] {
        if *v <= F::zero() {
            return Err(param(format!("{name} must be positive")));
        }
    }
    if sigma2 < F::zero() {
        return Err(param("sigma2 must be >= 0"));
    }
    let n = taus.len();
    let nf = F::from_usize_exact(n);
    let a = l.clone() * delta.clone() / eps.clone();
    let b = sigma2 * l * delta / (eps.clone() * eps);
    let inv = inverse_prefix(taus);
    let stat = |m: usize| a.clone() + b.clone() / F::from_usize_exact(m);
    let tau_n = taus[n - 1].clone();
    let mut r = ComplexityReport::new("nonconvex");
    r.push("minibatch", tau_n.clone() * stat(n), None);
    r.push("async", nf.clone() / inv[n - 1].clone() * stat(n), None);
    let (h, hm) = argmin(n, |m| F::from_usize_exact(m) / inv[m - 1].clone() * stat(m));
    r.push("homogeneous", h, Some(hm));
    let mean_tau = taus.iter().fold(F::zero(), |s, t| s + t.clone()) / nf.clone();
    r.push("heterogeneous", tau_n * a.clone() + mean_tau * b.clone() / nf, None);
    let (s, sm) = argmin(n, |m| taus[m - 1].clone() * stat(m));
    r.push("sync", s, Some(sm));
    Ok(r)
}

/// Convex expressions with `C = min{√L R/√ε, M²R²/ε²}` (a missing `L` or `M`
/// drops its term) and `V = σ²R²/ε²`:
///
/// * `minibatch`: `τ_n (C + V/n)`
/// * `async`: `(1/n Σ 1/τ_i)^{-1} (LR²/ε + V/n)`, when `L` is given
/// * `homogeneous` (Rennala and the lower bound): `min_m (1/m Σ_{i<=m} 1/τ_i)^{-1} (C + V/m)`
/// * `graph_oracle`: `τ_1 C + (1/n Σ 1/τ_i)^{-1} V/n`
pub fn convex_bounds<T: Real>(
    taus: &[T],
    l: Option<T>,
    m_lip: Option<T>,
    r: T,
    sigma2: T,
    eps: T,
) -> Result<ComplexityReport> {
    check_sorted(taus)?;
    if !(r > T::zero() && eps > T::zero() && sigma2 >= T::zero()) {
        return Err(param("R and eps must be positive, sigma2 >= 0"));
    }
    let smooth = l.map(|l| l.sqrt() * r / eps.sqrt());
    let nonsmooth = m_lip.filter(|m| m.is_finite()).map(|m| m * m * r * r / (eps * eps));
    let c = match (smooth, nonsmooth) {
        (Some(a), Some(b)) => a.min(b),
        (Some(a), None) | (None, Some(a)) => a,
        (None, None) => return Err(param("need L or M")),
    };
    let v = sigma2 * r * r / (eps * eps);
    let n = taus.len();
    let nf = T::c(n as f64);
    let inv = inverse_prefix(taus);
    let mut rep = ComplexityReport::new("convex");
    rep.push("minibatch", taus[n - 1] * (c + v / nf), None);
    if let Some(l) = l {
        rep.push("async", nf / inv[n - 1] * (l * r * r / eps + v / nf), None);
    }
    let (h, hm) = argmin(n, |m| {
        let mf = T::c(m as f64);
        mf / inv[m - 1] * (c + v / mf)
    });
    rep.push("homogeneous", h, Some(hm));
    rep.push("graph_oracle", taus[0] * c + nf / inv[n - 1] * v / nf, None);
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    fn q(v: f64) -> BigRational {
        BigRational::lit(v)
    }

    #[test]
    fn t_prime_examples() {
        let taus = [q(1.0), q(4.0)];
        assert_eq!(t_prime(&taus, &q(2.0), 1).unwrap(), q(3.0));
        assert_eq!(t_prime(&taus, &q(2.0), 2).unwrap(), q(16.0) / q(5.0));
        assert_eq!(t_prime_min(&taus, &q(2.0)).unwrap(), (q(3.0), 1));
        let eq = [2.0f64; 4];
        assert_eq!(t_prime_min(&eq, &4.0).unwrap(), (4.0, 4));
        assert_eq!(t_prime(&[3.0f64], &5.0, 1).unwrap(), 18.0);
        assert!(t_prime(&[2.0f64, 1.0], &1.0, 1).is_err());
    }

    #[test]
    fn lemma_examples() {
        let (t1, t2) = lemma_tau_check(&[q(1.0), q(1.0)], &q(1.0)).unwrap();
        assert_eq!((t1, t2), (q(0.5), q(1.5)));
        let (t1, t2) = lemma_tau_check(&[q(2.0)], &q(0.25)).unwrap();
        assert_eq!((t1, t2), (q(0.5), q(2.5)));
        let (t1, t2) = lemma_tau_sync_check(&[q(1.0), q(3.0)], 1).unwrap();
        assert_eq!((t1, t2), (q(1.0), q(2.0)));
        assert!(lemma_tau_check(&[1.0f64], &0.2).is_err());
        assert!(lemma_tau_sync_check(&[1.0f64], 0).is_err());
    }

    #[test]
    fn nonconvex_examples() {
        let r = time_bounds(&[q(1.0), q(1.0)], q(1.0), q(1.0), q(1.0), q(1.0)).unwrap();
        assert_eq!(r.value("async"), 1.5);
        assert_eq!(r.value("homogeneous"), 1.5);
        assert_eq!(r.get("homogeneous").unwrap().argmin, Some(2));
        let r = time_bounds(&[2.0, 3.0, 5.0], 1.0, 1.0, 0.0, 0.5).unwrap();
        assert_eq!(r.value("homogeneous"), 4.0);
        assert_eq!(r.get("homogeneous").unwrap().argmin, Some(1));
        let r = time_bounds(&[3.0; 4], 1.0, 2.0, 1.0, 0.5).unwrap();
        assert!((r.value("heterogeneous") - 3.0 * (4.0 + 8.0 / 4.0)).abs() < 1e-12);
    }

    #[test]
    fn convex_min_structure() {
        let r = convex_bounds(&[1.0, 2.0], Some(4.0), Some(f64::INFINITY), 1.0, 0.0, 1.0).unwrap();
        assert_eq!(r.value("minibatch"), 2.0 * 2.0);
        let r = convex_bounds(&[3.0], Some(4.0), Some(1.0), 1.0, 1.0, 1.0).unwrap();
        // n = 1: C = 1, V = 1
        assert_eq!(r.value("homogeneous"), 6.0);
        assert_eq!(r.value("graph_oracle"), 6.0);
    }
}
