//! Worst-case constructions.

pub mod chain;
pub mod convex;
pub mod heterog;
pub mod nonconvex;

pub use chain::{ft_grad, ft_value, phi, phi_prime, psi, psi_prime, Chain, ScaledChain};
pub use convex::{convex_prox, make_convex_hard, make_convex_hard_with_radius, project_simplex, ConvexHard, MaxAffineEnvelope};
pub use heterog::{make_heterog_hard, make_heterog_hard_part1, HeterogHard, HeterogPart};
pub use nonconvex::{make_nonconvex_hard, NonconvexHard};

use crate::scalar::Real;

/// `Δ⁰`: `F_T(0) − inf F_T <= Δ⁰ T`.
pub const DELTA0: f64 = 12.0;
/// `l₁`: smoothness constant of `F_T`.
pub const L1: f64 = 152.0;
/// `γ_∞`: bound on `‖∇F_T‖_∞`.
pub const GAMMA_INF: f64 = 23.0;

/// Largest 1-based index of a non-zero coordinate; 0 for the zero vector.
pub fn prog<T: Real>(x: &[T]) -> usize {
    x.iter().rposition(|v| !v.is_zero()).map_or(0, |i| i + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prog_examples() {
        assert_eq!(prog(&[0.0, 0.0, 0.0]), 0);
        assert_eq!(prog(&[1.0, 2.0, 0.0]), 2);
        assert_eq!(prog(&[0.0, 0.0, 5.0]), 3);
        assert_eq!(prog::<f64>(&[]), 0);
        assert_eq!(prog(&[-0.0, 0.0]), 0);
    }
}
