//! Oracle state machines.
//!
//! A delayed oracle holds `(s_t, s_x, s_q)`: when its computation started,
//! the point being processed and a busy bit. Querying it at time `t`:
//!
//! * idle: store `(t, x, 1)` and return 0;
//! * busy, `t < s_t + τ`: nothing changes, return 0;
//! * busy, `t >= s_t + τ`: reset and return a draw at the stored `s_x`.
//!
//! The zero vector is returned as `grad: None`.

use rand::Rng;

use crate::error::{config, param, Result};
use crate::hard::prog;
use crate::model::estimator::{sparsify_in_place, Estimator};
use crate::model::point::Point;
use crate::model::time::VirtualTime;
use crate::scalar::Real;

/// `(s_t, s_x, s_q)`, with `s_q = 1` iff `point` is present. An idle state
/// is always `(0, 0, 0)`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct OracleState<T> {
    start: VirtualTime,
    point: Option<Point<T>>,
}

/// The synchronized oracle keeps one triple for all workers.
pub type SyncOracleState<T> = OracleState<T>;

impl<T: Real> OracleState<T> {
    pub fn idle() -> Self {
        OracleState { start: VirtualTime::ZERO, point: None }
    }

    pub fn busy(start: VirtualTime, point: Point<T>) -> Self {
        OracleState { start, point: Some(point) }
    }

    pub fn is_busy(&self) -> bool {
        self.point.is_some()
    }

    pub fn start(&self) -> VirtualTime {
        self.start
    }

    pub fn point(&self) -> Option<&Point<T>> {
        self.point.as_ref()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// Idle oracle started a computation.
    Start,
    /// Busy and not finished.
    Pending,
    /// Finished; the reply carries the gradient.
    Deliver,
    /// Control bit set; state discarded.
    Interrupt,
    /// Synchronized oracle queried before its fastest worker finished.
    Wasted,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleReply<T> {
    pub branch: Branch,
    /// `None` stands for the zero vector.
    pub grad: Option<Point<T>>,
    /// Bernoulli outcome of the draw(s), when the estimator has one. For the
    /// synchronized oracle, whether any included draw succeeded.
    pub success: Option<bool>,
    /// Number of draws summed into `grad`.
    pub included: usize,
    /// `prog` of the point the delivered gradient was computed at.
    pub stored_prog: Option<usize>,
}

impl<T: Real> OracleReply<T> {
    fn zero(branch: Branch) -> Self {
        OracleReply { branch, grad: None, success: None, included: 0, stored_prog: None }
    }

    pub fn dense(&self, d: usize) -> Point<T> {
        self.grad.clone().unwrap_or_else(|| Point::zeros(d))
    }
}

fn finished(s: VirtualTime, tau: f64, t: VirtualTime) -> bool {
    s.seconds() + tau <= t.seconds()
}

pub fn delayed_oracle_step<T: Real, R: Rng + ?Sized>(
    t: VirtualTime,
    x: &Point<T>,
    s: OracleState<T>,
    xi: &mut R,
    tau: f64,
    est: &Estimator<T>,
) -> (OracleState<T>, OracleReply<T>) {
    match s.point {
        None => (OracleState::busy(t, x.clone()), OracleReply::zero(Branch::Start)),
        Some(_) if !finished(s.start, tau, t) => (s, OracleReply::zero(Branch::Pending)),
        Some(stored) => {
            let draw = est.draw(&stored, xi);
            let reply = OracleReply {
                branch: Branch::Deliver,
                grad: Some(draw.grad),
                success: draw.success,
                included: 1,
                stored_prog: Some(prog(&stored)),
            };
            (OracleState::idle(), reply)
        }
    }
}

/// `c = true` discards any in-flight computation.
pub fn interruptible_oracle_step<T: Real, R: Rng + ?Sized>(
    t: VirtualTime,
    x: &Point<T>,
    s: OracleState<T>,
    c: bool,
    xi: &mut R,
    tau: f64,
    est: &Estimator<T>,
) -> (OracleState<T>, OracleReply<T>) {
    if c {
        (OracleState::idle(), OracleReply::zero(Branch::Interrupt))
    } else {
        delayed_oracle_step(t, x, s, xi, tau, est)
    }
}

/// All workers start together at `s_t`. Queried at `t` with
/// `t ∈ [s_t + τ_m, s_t + τ_{m+1})`, returns the sum of the `m` finished
/// draws and resets; `m = 0` also resets. Draw `i` uses `xis[i]`.
pub fn sync_oracle_step<T: Real, R: Rng>(
    t: VirtualTime,
    x: &Point<T>,
    s: SyncOracleState<T>,
    xis: &mut [R],
    taus: &[f64],
    est: &Estimator<T>,
) -> Result<(SyncOracleState<T>, OracleReply<T>)> {
    if taus.windows(2).any(|w| w[0] > w[1]) {
        return Err(config("sync oracle delays must be sorted ascending"));
    }
    if xis.len() < taus.len() {
        return Err(param("one sample stream per worker required"));
    }
    let Some(stored) = s.point else {
        return Ok((OracleState::busy(t, x.clone()), OracleReply::zero(Branch::Start)));
    };
    let m = taus.iter().take_while(|&&tau| finished(s.start, tau, t)).count();
    if m == 0 {
        return Ok((OracleState::idle(), OracleReply::zero(Branch::Wasted)));
    }
    let mut sum = Point::zeros(x.dim());
    let mut any = None;
    for rng in xis.iter_mut().take(m) {
        let d = est.draw(&stored, rng);
        sum.axpy(T::one(), &d.grad);
        if let Some(ok) = d.success {
            any = Some(any.unwrap_or(false) || ok);
        }
    }
    let reply = OracleReply {
        branch: Branch::Deliver,
        grad: Some(sum),
        success: any,
        included: m,
        stored_prog: Some(prog(&stored)),
    };
    Ok((OracleState::idle(), reply))
}

/// `[g]_j = base_j (1 + 1[j > progress] (ξ/p − 1))` for 1-based `j`.
pub fn bernoulli_sparsified_grad<T: Real>(
    x: &[T],
    xi: bool,
    p: f64,
    base_grad: &[T],
    progress: usize,
) -> Result<Point<T>> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(param(format!("p must lie in (0, 1], got {p}")));
    }
    if x.len() != base_grad.len() {
        return Err(crate::Error::InvalidDimension("x and base gradient differ in length".into()));
    }
    let mut g = Point::from(base_grad.to_vec());
    sparsify_in_place(&mut g, xi, T::c(p), progress);
    Ok(g)
}
