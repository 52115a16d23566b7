use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Rennala,
    /// Rennala on convex Lipschitz problems, reporting the averaged iterate.
    RennalaConvex,
    Accelerated,
    Malenia,
    Minibatch,
    Async,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Rennala => "rennala",
            Method::RennalaConvex => "rennala_convex",
            Method::Accelerated => "accelerated",
            Method::Malenia => "malenia",
            Method::Minibatch => "minibatch",
            Method::Async => "async",
        }
    }
}

/// Problem constants a prescription may need.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Constants {
    pub eps: f64,
    pub sigma2: f64,
    pub smoothness: Option<f64>,
    pub gap: Option<f64>,
    pub lipschitz: Option<f64>,
    pub radius: Option<f64>,
    pub n: usize,
    /// Workers per round for m-Minibatch; defaults to `n`.
    pub m: Option<usize>,
    /// Iteration budget, when fixed in advance.
    pub iterations: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub gamma: f64,
    pub batch: usize,
    pub iterations: usize,
    pub m: Option<usize>,
}

fn need(v: Option<f64>, name: &str, method: Method) -> Result<f64> {
    match v {
        Some(x) if x > 0.0 && x.is_finite() => Ok(x),
        Some(x) => Err(param(format!("{name} = {x} must be positive for {}", method.as_str()))),
        None => Err(Error::InvalidConfig(format!("{} needs {name}", method.as_str()))),
    }
}

fn ceil_count(x: f64) -> Result<usize> {
    if !x.is_finite() || x > 1e15 {
        return Err(param(format!("count {x} is not representable")));
    }
    Ok((x.ceil() as usize).max(1))
}

/// `min{1/L, εS/(2Lσ²)}`, with the second term absent when `σ² = 0`.
fn nonconvex_gamma(l: f64, eps: f64, s: f64, sigma2: f64) -> f64 {
    if sigma2 == 0.0 {
        1.0 / l
    } else {
        (1.0 / l).min(eps * s / (2.0 * l * sigma2))
    }
}

/// Stepsize, batch size and iteration count prescribed by the convergence
/// theorem for `method`.
pub fn hyperparams_for(method: Method, c: &Constants) -> Result<Hyperparams> {
    if !(c.eps > 0.0 && c.eps.is_finite()) {
        return Err(param("eps must be positive"));
    }
    if !(c.sigma2 >= 0.0 && c.sigma2.is_finite()) {
        return Err(param("sigma2 must be >= 0"));
    }
    let (eps, sigma2) = (c.eps, c.sigma2);
    let batch_over = |v: f64| ((sigma2 / v).ceil() as usize).max(1);
    match method {
        Method::Rennala | Method::Malenia => {
            let l = need(c.smoothness, "smoothness", method)?;
            let delta = need(c.gap, "gap", method)?;
            let mut s = batch_over(eps);
            if method == Method::Malenia {
                if c.n == 0 {
                    return Err(Error::InvalidConfig("malenia needs n".into()));
                }
                s = s.max(c.n);
            }
            Ok(Hyperparams {
                gamma: nonconvex_gamma(l, eps, s as f64, sigma2),
                batch: s,
                iterations: c.iterations.unwrap_or(ceil_count(24.0 * delta * l / eps)?),
                m: None,
            })
        }
        Method::Minibatch => {
            let l = need(c.smoothness, "smoothness", method)?;
            let delta = need(c.gap, "gap", method)?;
            let m = c.m.unwrap_or(c.n);
            if m == 0 || (c.n > 0 && m > c.n) {
                return Err(param(format!("m = {m} out of range for n = {}", c.n)));
            }
            let mf = m as f64;
            let k = 12.0 * delta * l / eps + 12.0 * delta * l * sigma2 / (eps * eps * mf);
            Ok(Hyperparams {
                gamma: nonconvex_gamma(l, eps, mf, sigma2),
                batch: m,
                iterations: c.iterations.unwrap_or(ceil_count(k)?),
                m: Some(m),
            })
        }
        Method::RennalaConvex => {
            let mm = need(c.lipschitz, "lipschitz", method)?;
            let r = need(c.radius, "radius", method)?;
            let s = batch_over(mm * mm);
            Ok(Hyperparams {
                gamma: eps / (mm * mm + sigma2 / s as f64),
                batch: s,
                iterations: c.iterations.unwrap_or(ceil_count(2.0 * mm * mm * r * r / (eps * eps))?),
                m: None,
            })
        }
        Method::Accelerated => {
            let l = need(c.smoothness, "smoothness", method)?;
            let r = need(c.radius, "radius", method)?;
            let s = ((sigma2 * r / (eps.powf(1.5) * l.sqrt())).ceil() as usize).max(1);
            let k = c.iterations.unwrap_or(ceil_count(8.0 * l.sqrt() * r / eps.sqrt())?);
            let kf = k as f64;
            let mut gamma = 1.0 / (4.0 * l);
            if sigma2 > 0.0 {
                let noise = (3.0 * r * r * s as f64 / (4.0 * sigma2 * (kf + 1.0) * (kf + 2.0).powi(2))).sqrt();
                gamma = gamma.min(noise);
            }
            Ok(Hyperparams { gamma, batch: s, iterations: k, m: None })
        }
        Method::Async => Err(Error::InvalidConfig(
            "async has no prescribed hyperparameters; give a stepsize rule".into(),
        )),
    }
}

/// Smallest 1-based `m` minimizing `τ_m (1 + σ²/(mε))` over sorted delays.
pub fn optimal_m(sorted_taus: &[f64], sigma2: f64, eps: f64) -> Result<usize> {
    if sorted_taus.is_empty() {
        return Err(param("empty pool"));
    }
    if sorted_taus.windows(2).any(|w| w[0] > w[1]) {
        return Err(param("delays must be sorted ascending"));
    }
    let mut best = (f64::INFINITY, 0);
    for (i, &tau) in sorted_taus.iter().enumerate() {
        let m = (i + 1) as f64;
        let v = tau * (1.0 + sigma2 / (m * eps));
        if v < best.0 {
            best = (v, i + 1);
        }
    }
    Ok(best.1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base(eps: f64, sigma2: f64) -> Constants {
        Constants { eps, sigma2, smoothness: Some(1.0), gap: Some(1.0), n: 1, ..Default::default() }
    }

    #[test]
    fn rennala_examples() {
        let h = hyperparams_for(Method::Rennala, &base(0.1, 1.0)).unwrap();
        assert_eq!(h.batch, 10);
        assert_eq!(h.gamma, 0.5);
        assert_eq!(h.iterations, 240);
        let h = hyperparams_for(Method::Rennala, &base(0.1, 0.0)).unwrap();
        assert_eq!((h.batch, h.gamma), (1, 1.0));
    }

    #[test]
    fn malenia_floor_is_n() {
        let mut c = base(0.25, 1.0);
        c.n = 8;
        assert_eq!(hyperparams_for(Method::Malenia, &c).unwrap().batch, 8);
    }

    #[test]
    fn missing_constants() {
        let c = Constants { eps: 0.1, sigma2: 1.0, ..Default::default() };
        assert!(matches!(hyperparams_for(Method::Rennala, &c), Err(Error::InvalidConfig(_))));
        assert!(hyperparams_for(Method::RennalaConvex, &c).is_err());
        assert!(hyperparams_for(Method::Async, &base(0.1, 1.0)).is_err());
    }

    #[test]
    fn optimal_m_examples() {
        assert_eq!(optimal_m(&[1.0, 10.0], 100.0, 1.0).unwrap(), 1);
        assert_eq!(optimal_m(&[1.0, 2.0, 3.0], 0.0, 1.0).unwrap(), 1);
        assert_eq!(optimal_m(&[2.0; 5], 1.0, 1.0).unwrap(), 5);
        assert!(optimal_m(&[], 1.0, 1.0).is_err());
    }
}
