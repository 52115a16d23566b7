use std::cmp::Ordering;
use std::fmt;
use std::ops::Add;

use serde::{Deserialize, Serialize};

use crate::error::{param, Result};

/// Non-negative, finite point on the simulated clock, in seconds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VirtualTime(f64);

impl VirtualTime {
    pub const ZERO: VirtualTime = VirtualTime(0.0);

    pub fn new(seconds: f64) -> Result<Self> {
        if seconds.is_finite() && seconds >= 0.0 {
            // normalise -0.0 so equal times hash and print the same
            Ok(VirtualTime(seconds + 0.0))
        } else {
            Err(param(format!("virtual time must be finite and >= 0, got {seconds}")))
        }
    }

    pub fn seconds(self) -> f64 {
        self.0
    }
}

impl Eq for VirtualTime {}

impl PartialOrd for VirtualTime {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for VirtualTime {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl Add<f64> for VirtualTime {
    type Output = VirtualTime;

    /// Panics if the result leaves the valid range.
    fn add(self, rhs: f64) -> VirtualTime {
        VirtualTime::new(self.0 + rhs).expect("time overflow")
    }
}

impl fmt::Display for VirtualTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl TryFrom<f64> for VirtualTime {
    type Error = crate::Error;
    fn try_from(v: f64) -> Result<Self> {
        VirtualTime::new(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_values() {
        assert!(VirtualTime::new(-1.0).is_err());
        assert!(VirtualTime::new(f64::NAN).is_err());
        assert!(VirtualTime::new(f64::INFINITY).is_err());
        assert_eq!(VirtualTime::new(-0.0).unwrap(), VirtualTime::ZERO);
    }

    #[test]
    fn ordering_is_total() {
        let mut v: Vec<VirtualTime> = [3.0, 0.5, 2.0, 0.5]
            .iter()
            .map(|&s| VirtualTime::new(s).unwrap())
            .collect();
        v.sort();
        assert_eq!(v.iter().map(|t| t.seconds()).collect::<Vec<_>>(), vec![0.5, 0.5, 2.0, 3.0]);
        assert_eq!((VirtualTime::ZERO + 1.5).seconds(), 1.5);
    }
}
