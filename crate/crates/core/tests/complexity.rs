use num_traits::{One, ToPrimitive, Zero};
use proptest::prelude::*;
use timelab::complexity::{
    convex_bounds, lemma_tau_check, lemma_tau_sync_check, t_prime, t_prime_min, time_bounds,
};
use timelab::experiments::verify::graph_oracle_ratio;
use timelab::model::WorkerPool;
use timelab::optimizers::{hyperparams_for, optimal_m, Constants, Method};
use timelab::sim::{collection_profile, measure_collection_time, CollectionRegime};
use timelab::Rational;

fn q(num: i64, den: i64) -> Rational {
    Rational::new(num.into(), den.into())
}

fn sorted_rationals() -> impl Strategy<Value = Vec<Rational>> {
    prop::collection::vec((1i64..60, 1i64..12), 1..20).prop_map(|v| {
        let mut t: Vec<Rational> = v.into_iter().map(|(a, b)| q(a, b)).collect();
        t.sort();
        t
    })
}

fn sorted_f64(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..20.0, 1..max_len).prop_map(|mut v| {
        v.sort_by(f64::total_cmp);
        v
    })
}

#[test]
fn t_prime_worked_example() {
    let taus = [q(1, 1), q(4, 1)];
    assert_eq!(t_prime(&taus, &q(2, 1), 1).unwrap(), q(3, 1));
    assert_eq!(t_prime(&taus, &q(2, 1), 2).unwrap(), q(16, 5));
    assert_eq!(t_prime_min(&taus, &q(2, 1)).unwrap(), (q(3, 1), 1));
}

#[test]
fn collection_time_examples() {
    let one = WorkerPool::new(vec![1.0]).unwrap();
    assert_eq!(measure_collection_time(&one, 2, CollectionRegime::Fresh).unwrap().seconds(), 2.0);
    assert_eq!(measure_collection_time(&one, 2, CollectionRegime::WorstCase).unwrap().seconds(), 3.0);
    let two = WorkerPool::new(vec![1.0, 4.0]).unwrap();
    let t = measure_collection_time(&two, 2, CollectionRegime::WorstCase).unwrap().seconds();
    let (tp, j) = t_prime_min(&[1.0, 4.0], &2.0).unwrap();
    assert_eq!((tp, j), (3.0, 1));
    assert!(t <= 2.0 * tp);
}

#[test]
fn prescription_examples() {
    let c = Constants { eps: 0.1, sigma2: 1.0, smoothness: Some(1.0), gap: Some(1.0), n: 1, ..Default::default() };
    let h = hyperparams_for(Method::Rennala, &c).unwrap();
    assert_eq!((h.batch, h.gamma), (10, 0.5));
    assert_eq!(h.iterations, 240);

    let m = Constants { eps: 0.25, n: 8, ..c.clone() };
    assert_eq!(hyperparams_for(Method::Malenia, &m).unwrap().batch, 8);

    let z = Constants { sigma2: 0.0, ..c.clone() };
    let h = hyperparams_for(Method::Rennala, &z).unwrap();
    assert_eq!((h.batch, h.gamma), (1, 1.0));

    // K = 12ΔL/ε + 12ΔLσ²/(ε²m) with m = n = 4
    let mb = Constants { n: 4, ..c.clone() };
    let h = hyperparams_for(Method::Minibatch, &mb).unwrap();
    assert_eq!(h.m, Some(4));
    assert_eq!(h.iterations, 420);
    assert_eq!(h.gamma, 1.0f64.min(0.1 * 4.0 / 2.0));

    assert_eq!(optimal_m(&[1.0, 10.0], 100.0, 1.0).unwrap(), 1);
    assert_eq!(optimal_m(&[1.0, 2.0, 5.0], 0.0, 0.3).unwrap(), 1);
    assert_eq!(optimal_m(&[3.0; 6], 2.0, 0.5).unwrap(), 6);
}

#[test]
fn graph_oracle_ratio_grows_like_fourth_root() {
    let r: Vec<f64> = [16, 256, 4096].iter().map(|&n| graph_oracle_ratio(n).unwrap()).collect();
    assert!(r[1] / r[0] >= 1.7 && r[2] / r[1] >= 1.7, "{r:?}");
    assert!(r[1] / r[0] <= 2.0 && r[2] / r[1] <= 2.0, "{r:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    /// `t₁ <= t₂ <= 6t₁` for the batch-collection lemma, in exact arithmetic.
    #[test]
    fn lemma_tau_holds_exactly(taus in sorted_rationals(), s4 in 1i64..4000) {
        let s = q(s4, 4);
        let (t1, t2) = lemma_tau_check(&taus, &s).unwrap();
        prop_assert!(t1 <= t2);
        prop_assert!(t2 <= q(6, 1) * t1);
    }

    /// `t₁ <= t₂ <= 2t₁` for the synchronized lemma, including `η > n`.
    #[test]
    fn lemma_tau_sync_holds_exactly(taus in sorted_rationals(), eta in 1usize..64) {
        let (t1, t2) = lemma_tau_sync_check(&taus, eta).unwrap();
        prop_assert!(t1 <= t2);
        prop_assert!(t2 <= q(2, 1) * t1);
    }

    /// `min_j t′(j)` against a direct evaluation of every `j`.
    #[test]
    fn t_prime_min_is_the_smallest_argmin(taus in sorted_rationals(), s in 1i64..200) {
        let s = q(s, 1);
        let mut best: Option<(Rational, usize)> = None;
        let mut inv = Rational::zero();
        for (j, t) in taus.iter().enumerate() {
            inv += Rational::one() / t;
            let v = (s.clone() + q(j as i64 + 1, 1)) / inv.clone();
            if best.as_ref().is_none_or(|b| v < b.0) {
                best = Some((v, j + 1));
            }
        }
        prop_assert_eq!(t_prime_min(&taus, &s).unwrap(), best.unwrap());
    }

    /// Worst-case collection time lies in `[S (Σ1/τ)^{-1}, 2 min_j t′(j)]`
    /// and the fresh regime is never slower.
    #[test]
    fn collection_sandwich(taus in prop::collection::vec(0.05f64..20.0, 1..32), s in 1usize..1000) {
        let pool = WorkerPool::new(taus).unwrap();
        let sorted = pool.sorted();
        let rate: f64 = sorted.iter().map(|t| 1.0 / t).sum();
        let worst = collection_profile(&pool, s, CollectionRegime::WorstCase).unwrap();
        let fresh = collection_profile(&pool, s, CollectionRegime::Fresh).unwrap();
        let (tp, _) = t_prime_min(&sorted, &(s as f64)).unwrap();
        let tol = 1e-9 * worst.time;
        prop_assert!(worst.time >= s as f64 / rate - tol);
        prop_assert!(worst.time <= 2.0 * tp + tol);
        prop_assert!(fresh.time <= worst.time + tol);
        prop_assert_eq!(worst.per_worker.iter().sum::<usize>(), s);
    }

    /// Bounds are positive; adding a slower worker never raises the
    /// homogeneous bound, and the homogeneous bound never exceeds the
    /// minibatch or asynchronous ones.
    #[test]
    fn time_bounds_are_consistent(
        taus in sorted_f64(12),
        extra in 0.0f64..10.0,
        sigma2 in 0.0f64..10.0,
        eps in 0.01f64..1.0,
    ) {
        let r = time_bounds(&taus, 1.0, 1.0, sigma2, eps).unwrap();
        for e in &r.entries {
            prop_assert!(e.value > 0.0 && e.value.is_finite(), "{}", e.name);
        }
        let h = r.value("homogeneous");
        let slack = 1.0 + 1e-12;
        prop_assert!(h <= r.value("minibatch") * slack);
        prop_assert!(h <= r.value("async") * slack);
        prop_assert!(r.value("sync") <= r.value("minibatch") * slack);

        let mut more = taus.clone();
        more.push(taus.last().unwrap() + extra);
        let r2 = time_bounds(&more, 1.0, 1.0, sigma2, eps).unwrap();
        prop_assert!(r2.value("homogeneous") <= h * slack);
        prop_assert!(r2.value("sync") <= r.value("sync") * slack);
    }

    /// The homogeneous argmin matches a brute-force scan.
    #[test]
    fn homogeneous_argmin_matches_scan(taus in sorted_f64(16), sigma2 in 0.0f64..10.0) {
        let eps = 0.1;
        let r = time_bounds(&taus, 1.0, 1.0, sigma2, eps).unwrap();
        let (a, b) = (1.0 / eps, sigma2 / (eps * eps));
        let mut inv = 0.0;
        let mut best = (f64::INFINITY, 0);
        for (i, t) in taus.iter().enumerate() {
            inv += 1.0 / t;
            let m = (i + 1) as f64;
            let v = m / inv * (a + b / m);
            if v < best.0 {
                best = (v, i + 1);
            }
        }
        let e = r.get("homogeneous").unwrap();
        prop_assert!((e.value - best.0).abs() <= 1e-9 * best.0);
        let v_at = |m: usize| {
            let inv: f64 = taus[..m].iter().map(|t| 1.0 / t).sum();
            m as f64 / inv * (a + b / m as f64)
        };
        prop_assert!((v_at(e.argmin.unwrap()) - best.0).abs() <= 1e-9 * best.0);
    }

    /// Exact and floating evaluations of the same bound agree.
    #[test]
    fn rational_and_float_bounds_agree(taus in sorted_rationals(), s2 in 0i64..20) {
        let (l, d, e) = (q(1, 1), q(3, 1), q(1, 10));
        let sigma2 = q(s2, 2);
        let exact = time_bounds(&taus, l, d, sigma2.clone(), e).unwrap();
        let tf: Vec<f64> = taus.iter().map(|t| t.to_f64().unwrap()).collect();
        let float = time_bounds(&tf, 1.0, 3.0, sigma2.to_f64().unwrap(), 0.1).unwrap();
        for (a, b) in exact.entries.iter().zip(&float.entries) {
            prop_assert!((a.value - b.value).abs() <= 1e-9 * a.value.abs());
        }
    }

    #[test]
    fn convex_bounds_min_structure(taus in sorted_f64(10), m_lip in 0.1f64..100.0) {
        let with_m = convex_bounds(&taus, Some(1.0), Some(m_lip), 1.0, 1.0, 0.01).unwrap();
        let smooth = convex_bounds(&taus, Some(1.0), None, 1.0, 1.0, 0.01).unwrap();
        prop_assert!(with_m.value("homogeneous") <= smooth.value("homogeneous") * (1.0 + 1e-12));
        prop_assert!(with_m.value("homogeneous") <= with_m.value("minibatch") * (1.0 + 1e-12));
    }
}

#[test]
fn huge_lipschitz_constant_selects_the_smooth_term() {
    let taus = [1.0, 2.0];
    let a = convex_bounds(&taus, Some(4.0), Some(1e12), 1.0, 0.0, 0.01).unwrap();
    let b = convex_bounds(&taus, Some(4.0), None, 1.0, 0.0, 0.01).unwrap();
    assert_eq!(a.value("graph_oracle"), b.value("graph_oracle"));
    assert_eq!(b.value("graph_oracle"), 2.0 / 0.1);
}
