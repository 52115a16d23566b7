use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use timelab::model::{estimator_moments, quadratic_problem, Estimator, Point, ProgressRule, VirtualTime};
use timelab::oracles::{
    bernoulli_sparsified_grad, delayed_oracle_step, interruptible_oracle_step, sync_oracle_step, Branch, OracleState,
};
use timelab::Problem64;

fn t(v: f64) -> VirtualTime {
    VirtualTime::new(v).unwrap()
}

fn quad(d: usize) -> Problem64 {
    quadratic_problem(d).unwrap()
}

fn rng() -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(5)
}

#[test]
fn delayed_oracle_three_branches() {
    let p = quad(3);
    let est = Estimator::exact(p.objective.clone());
    let x0 = Point::new(vec![0.5, -1.0, 2.0]).unwrap();
    let mut r = rng();

    let (s, g) = delayed_oracle_step(t(0.0), &x0, OracleState::idle(), &mut r, 5.0, &est);
    assert_eq!(g.branch, Branch::Start);
    assert!(g.grad.is_none());
    assert_eq!(s, OracleState::busy(t(0.0), x0.clone()));

    let other = Point::zeros(3);
    let (s, g) = delayed_oracle_step(t(3.0), &other, s, &mut r, 5.0, &est);
    assert_eq!(g.branch, Branch::Pending);
    assert!(g.grad.is_none());
    assert_eq!(s, OracleState::busy(t(0.0), x0.clone()));

    // the boundary t = s_t + τ delivers, at the stored point
    let (s, g) = delayed_oracle_step(t(5.0), &other, s, &mut r, 5.0, &est);
    assert_eq!(g.branch, Branch::Deliver);
    assert_eq!(g.grad.unwrap(), p.gradient(&x0));
    assert_eq!(s, OracleState::idle());
    assert!(!s.is_busy());
}

#[test]
fn interrupt_discards_and_restarts() {
    let p = quad(2);
    let est = Estimator::exact(p.objective.clone());
    let x0 = Point::new(vec![1.0, 0.0]).unwrap();
    let x1 = Point::new(vec![0.0, 1.0]).unwrap();
    let mut r = rng();
    let busy = OracleState::busy(t(0.0), x0);
    let (s, g) = interruptible_oracle_step(t(1.0), &x1, busy, true, &mut r, 2.0, &est);
    assert_eq!(g.branch, Branch::Interrupt);
    assert!(g.grad.is_none());
    assert_eq!(s, OracleState::idle());
    let (s, g) = interruptible_oracle_step(t(1.0), &x1, s, false, &mut r, 2.0, &est);
    assert_eq!(g.branch, Branch::Start);
    assert_eq!(s, OracleState::busy(t(1.0), x1.clone()));
    let (_, g) = interruptible_oracle_step(t(3.0), &Point::zeros(2), s, false, &mut r, 2.0, &est);
    assert_eq!(g.grad.unwrap(), p.gradient(&x1));
}

#[test]
fn sync_oracle_counts_finished_workers() {
    let p = quad(2);
    let est = Estimator::exact(p.objective.clone());
    let x0 = Point::new(vec![1.0, 2.0]).unwrap();
    let g0 = p.gradient(&x0);
    let taus = [1.0, 3.0];
    let mut xis = vec![rng(), rng()];

    let (s, g) = sync_oracle_step(t(0.0), &x0, OracleState::idle(), &mut xis, &taus, &est).unwrap();
    assert_eq!(g.branch, Branch::Start);
    let (s2, g) = sync_oracle_step(t(2.0), &x0, s.clone(), &mut xis, &taus, &est).unwrap();
    assert_eq!(g.included, 1);
    assert_eq!(g.grad.unwrap(), g0);
    assert_eq!(s2, OracleState::idle());

    let (_, g) = sync_oracle_step(t(0.5), &x0, s.clone(), &mut xis, &taus, &est).unwrap();
    assert_eq!(g.branch, Branch::Wasted);
    assert!(g.grad.is_none());

    let (_, g) = sync_oracle_step(t(3.0), &x0, s, &mut xis, &taus, &est).unwrap();
    assert_eq!(g.included, 2);
    let mut both = g0.clone();
    both.axpy(1.0, &g0);
    assert_eq!(g.grad.unwrap(), both);

    assert!(sync_oracle_step(t(0.0), &x0, OracleState::idle(), &mut xis, &[3.0, 1.0], &est).is_err());
}

#[test]
fn sparsified_gradient_examples() {
    let x = [0.0, 0.0];
    let base = [2.0, 4.0];
    assert_eq!(bernoulli_sparsified_grad(&x, false, 0.5, &base, 0).unwrap().into_vec(), vec![0.0, 0.0]);
    assert_eq!(bernoulli_sparsified_grad(&x, true, 0.5, &base, 0).unwrap().into_vec(), vec![4.0, 8.0]);
    assert_eq!(bernoulli_sparsified_grad(&x, false, 0.5, &base, 1).unwrap().into_vec(), vec![2.0, 0.0]);
    assert!(bernoulli_sparsified_grad(&x, true, 0.0, &base, 0).is_err());
    assert!(bernoulli_sparsified_grad(&x, true, 1.5, &base, 0).is_err());
}

#[test]
fn exact_and_unit_p_estimators_agree() {
    let p = quad(5);
    let exact = Estimator::exact(p.objective.clone());
    let unit = Estimator::bernoulli(p.objective.clone(), 1.0, ProgressRule::Global, None).unwrap();
    let x = Point::new(vec![0.3, -0.2, 0.0, 1.0, 0.0]).unwrap();
    let mut r1 = rng();
    let mut r2 = rng();
    for _ in 0..20 {
        assert_eq!(exact.draw(&x, &mut r1).grad, unit.draw(&x, &mut r2).grad);
    }
    let (mean, moment) = estimator_moments(&exact, &x, 100, 1);
    for (m, g) in mean.iter().zip(p.gradient(&x).iter()) {
        assert!((m - g).abs() < 1e-12);
    }
    assert!(moment < 1e-24);
}

#[test]
fn gaussian_moment_is_within_three_sigma() {
    let d = 10;
    let p = quad(d);
    let est = Estimator::gaussian(p.objective.clone(), 1.0).unwrap();
    let x = Point::zeros(d);
    let draws = 100_000;
    let (mean, moment) = estimator_moments(&est, &x, draws, 2);
    // ‖ξ‖² is σ²/d times a χ²_d variable: variance 2σ⁴/d
    let sd = (2.0 / d as f64 / draws as f64).sqrt();
    assert!((moment - 1.0).abs() <= 3.0 * sd, "moment {moment}");
    let g = p.gradient(&x);
    let coord_sd = (0.1 / draws as f64).sqrt();
    for (m, gi) in mean.iter().zip(g.iter()) {
        assert!((m - gi).abs() <= 4.0 * coord_sd);
    }
}

proptest! {
    /// Two-outcome enumeration: the mean is the gradient and the variance is
    /// `(1 − p)/p` times the squared tail beyond the progress index.
    #[test]
    fn bernoulli_exact_moments(
        coords in prop::collection::vec(-3.0f64..3.0, 2..9),
        cut in 0usize..9,
        p in 0.01f64..1.0,
    ) {
        let d = coords.len();
        let mut x = coords;
        for v in x.iter_mut().skip(cut.min(d)) {
            *v = 0.0;
        }
        let problem = quad(d);
        let est = Estimator::bernoulli(problem.objective.clone(), p, ProgressRule::Global, None).unwrap();
        let (mean, var) = est.exact_moments(&x).unwrap();
        let g = problem.gradient(&x);
        for (m, gi) in mean.iter().zip(g.iter()) {
            prop_assert!((m - gi).abs() <= 1e-12 * (1.0 + gi.abs()));
        }
        let k = x.iter().rposition(|v| *v != 0.0).map_or(0, |i| i + 1);
        let tail: f64 = g.iter().skip(k).map(|v| v * v).sum();
        let expected = tail * (1.0 - p) / p;
        prop_assert!((var - expected).abs() <= 1e-9 * (1.0 + expected));
    }

    /// Coordinates up to the progress index are untouched by the mask.
    #[test]
    fn mask_protects_the_prefix(
        base in prop::collection::vec(-5.0f64..5.0, 1..8),
        progress in 0usize..8,
        xi: bool,
        p in 0.05f64..1.0,
    ) {
        let x = vec![0.0; base.len()];
        let g = bernoulli_sparsified_grad(&x, xi, p, &base, progress).unwrap();
        for (j, (gj, bj)) in g.iter().zip(&base).enumerate() {
            if j < progress {
                prop_assert_eq!(gj, bj);
            } else if xi {
                prop_assert!((gj - bj / p).abs() <= 1e-12 * (1.0 + gj.abs()));
            } else {
                prop_assert_eq!(*gj, 0.0);
            }
        }
    }
}
