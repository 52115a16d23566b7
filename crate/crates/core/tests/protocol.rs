use std::sync::Arc;

use proptest::prelude::*;
use rand::Rng;
use timelab::hard::make_nonconvex_hard;
use timelab::model::{quadratic_problem, Estimator, Point, RngContract, VirtualTime, WorkerPool};
use timelab::optimizers::Rennala;
use timelab::protocol::{
    check_zero_respecting, run_classical_protocol, run_time_protocol, success_ledger, AlgorithmAction,
    ClassicalMinibatch, ClassicalSgd, EventKind, OracleKind, ProtocolSetup, RecordOptions, ServerAlgorithm,
    StopRule, TimeAlgorithm, TimeWrapped,
};
use timelab::sim::{des_run, DesSetup};
use timelab::{Error, Problem64};

fn quad(d: usize) -> Problem64 {
    quadratic_problem(d).unwrap()
}

fn gaussian(p: &Problem64, v: f64) -> Estimator<f64> {
    Estimator::gaussian(p.objective.clone(), v).unwrap()
}

/// Replays a fixed list of `(t, worker, query)` actions, repeating the last.
struct Script(Vec<(f64, usize, Point<f64>)>);

impl TimeAlgorithm<f64> for Script {
    fn act(&mut self, k: usize, _reply: Option<&Point<f64>>) -> AlgorithmAction<f64> {
        let (t, i, x) = self.0[k.min(self.0.len() - 1)].clone();
        AlgorithmAction::new(VirtualTime::new(t).unwrap(), i, x)
    }
}

fn setup<'a>(
    pool: &'a WorkerPool,
    est: &'a [Estimator<f64>],
    p: &'a Problem64,
    oracle: OracleKind,
    steps: usize,
) -> ProtocolSetup<'a, f64> {
    ProtocolSetup {
        pool,
        estimators: est,
        problem: p,
        oracle,
        stop: StopRule::steps(steps),
        seed: 3,
        record: RecordOptions { supports: true, points: true },
    }
}

#[test]
fn time_travel_names_the_step() {
    let p = quad(3);
    let est = [gaussian(&p, 0.0)];
    let pool = WorkerPool::new(vec![1.0]).unwrap();
    let x = p.start.clone();
    let mut alg = Script(vec![(5.0, 0, x.clone()), (3.0, 0, x)]);
    match run_time_protocol(&mut alg, &setup(&pool, &est, &p, OracleKind::Delayed, 4)) {
        Err(Error::ProtocolViolation { step, .. }) => assert_eq!(step, 1),
        other => panic!("expected a violation, got {other:?}"),
    }
}

#[test]
fn worker_out_of_range_is_rejected() {
    let p = quad(3);
    let est = [gaussian(&p, 0.0)];
    let pool = WorkerPool::new(vec![1.0, 2.0]).unwrap();
    let mut alg = Script(vec![(0.0, 2, p.start.clone())]);
    assert!(run_time_protocol(&mut alg, &setup(&pool, &est, &p, OracleKind::Delayed, 4)).is_err());
}

#[test]
fn injected_coordinate_is_a_zero_respecting_violation() {
    let p = quad(5);
    let est = [Estimator::exact(p.objective.clone())];
    let pool = WorkerPool::new(vec![1.0]).unwrap();
    let mut alg = Script(vec![(0.0, 0, Point::zeros(5)), (0.5, 0, Point::basis(5, 3, 1.0))]);
    let trace = run_time_protocol(&mut alg, &setup(&pool, &est, &p, OracleKind::Delayed, 3)).unwrap();
    let v = check_zero_respecting(&trace);
    assert!(!v.is_empty());
    assert_eq!(v[0].step, 1);
    assert_eq!(v[0].coords, vec![3]);
}

#[test]
fn zero_gradients_keep_the_origin() {
    let p = quad(4);
    let zero = Arc::new(timelab::model::Zero { dim: 4 });
    let est = [Estimator::exact(zero)];
    let mut sgd = TimeWrapped::new(ClassicalSgd { x: Point::zeros(4), gamma: 1.0 }, 1.0);
    let pool = WorkerPool::new(vec![1.0]).unwrap();
    let trace = run_time_protocol(&mut sgd, &setup(&pool, &est, &p, OracleKind::Delayed, 20)).unwrap();
    assert!(check_zero_respecting(&trace).is_empty());
    assert!(trace.events.iter().all(|e| e.prog == 0));
}

/// A classical algorithm run through the time wrapper visits the same
/// iterates as in the classical protocol, at times `τk`.
#[test]
fn wrapped_classical_sgd_matches_classical_protocol() {
    let p = quad(6);
    let est = gaussian(&p, 0.3);
    let tau = 2.5;
    let classical = run_classical_protocol(
        &mut ClassicalSgd { x: p.start.clone(), gamma: 0.7 },
        &est,
        &p,
        &StopRule::steps(30),
        9,
        RecordOptions { supports: false, points: true },
    )
    .unwrap();
    let pool = WorkerPool::new(vec![tau]).unwrap();
    let ests = [est];
    let mut wrapped = TimeWrapped::new(ClassicalSgd { x: p.start.clone(), gamma: 0.7 }, tau);
    let mut s = setup(&pool, &ests, &p, OracleKind::Delayed, 60);
    s.seed = 9;
    let timed = run_time_protocol(&mut wrapped, &s).unwrap();
    let evens: Vec<_> = timed.events.iter().filter(|e| e.k % 2 == 0).collect();
    assert_eq!(evens.len(), 31);
    for (c, t) in classical.events.iter().zip(evens) {
        assert_eq!(c.point, t.point, "step {}", c.k);
        assert_eq!(t.time, tau * c.k as f64);
    }
}

/// Rennala with one worker is minibatch SGD: the iterate after `j`
/// server steps equals the classical minibatch iterate after `jS` draws.
#[test]
fn single_worker_rennala_is_classical_minibatch() {
    let p = quad(8);
    let est = gaussian(&p, 1.0);
    for batch in [1, 3, 5] {
        let classical = run_classical_protocol(
            &mut ClassicalMinibatch::new(p.start.clone(), 0.9, batch),
            &est,
            &p,
            &StopRule::steps(20 * batch),
            4,
            RecordOptions::default(),
        )
        .unwrap();
        let pool = WorkerPool::new(vec![1.0]).unwrap();
        let ests = [est.clone()];
        let mut server = Rennala::new(p.start.clone(), 0.9, batch).unwrap();
        let sim = des_run(&mut server, &DesSetup::new(&pool, &ests, &p, StopRule::steps(20), 4)).unwrap();
        assert_eq!(sim.events.len(), 21);
        for e in &sim.events {
            let c = &classical.events[e.k * batch];
            assert_eq!(e.f, c.f, "batch {batch}, step {}", e.k);
            assert_eq!(e.time, (e.k * batch) as f64);
        }
    }
}

/// The adapter and the event simulator replay the same worker loop, so the
/// protocol run visits the simulator's iterates in order. Exact gradients:
/// the oracle draws for stale reports too, the simulator skips them, so
/// noisy streams would drift apart.
#[test]
fn adapter_follows_the_simulator() {
    let p = quad(10);
    let est = [Estimator::exact(p.objective.clone())];
    let pool = WorkerPool::new(vec![1.0, 1.7, 2.0, 3.3]).unwrap();
    let mut server = Rennala::new(p.start.clone(), 0.5, 3).unwrap();
    let sim = des_run(&mut server, &DesSetup::new(&pool, &est, &p, StopRule::steps(25), 12)).unwrap();

    let alg_server = Rennala::new(p.start.clone(), 0.5, 3).unwrap();
    let mut alg = ServerAlgorithm::new(alg_server, pool.clone()).unwrap();
    let mut s = setup(&pool, &est, &p, OracleKind::Delayed, 400);
    s.seed = 12;
    let trace = run_time_protocol(&mut alg, &s).unwrap();
    let mut visited: Vec<(f64, f64)> = Vec::new();
    for e in &trace.events {
        if visited.last().is_none_or(|v| v.0 != e.f) {
            visited.push((e.f, e.time));
        }
    }
    assert!(visited.len() > sim.events.len());
    for (a, b) in sim.events.iter().zip(&visited) {
        assert_eq!(a.f, b.0, "step {}", a.k);
        assert_eq!(a.time, b.1, "step {}", a.k);
    }
}

#[test]
fn ledger_etas_match_replayed_coins() {
    let h = make_nonconvex_hard(1.0, 4000.0, 1058.0, 0.5).unwrap();
    assert!(h.p < 1.0 && h.t >= 2);
    let p = h.problem();
    let est = [h.estimator()];
    let pool = WorkerPool::new(vec![1.5]).unwrap();
    let server = Rennala::new(p.start.clone(), 1.0, 1).unwrap();
    let mut alg = ServerAlgorithm::new(server, pool.clone()).unwrap();
    let mut s = setup(&pool, &est, &p, OracleKind::Delayed, 600);
    s.seed = 21;
    let trace = run_time_protocol(&mut alg, &s).unwrap();
    let ledger = success_ledger(&trace, &pool).unwrap();
    assert!(ledger.holds(), "{:?}", ledger.violations);

    let mut coins = RngContract::new(21).worker(0);
    let mut count = vec![0usize; h.t + 2];
    let mut eta: Vec<Option<usize>> = vec![None; h.t + 2];
    for e in trace.events.iter().filter(|e| e.event == EventKind::Deliver) {
        let coin = coins.random_bool(h.p);
        assert_eq!(e.success, Some(coin));
        let level = e.stored_prog.unwrap();
        count[level] += 1;
        if coin && eta[level].is_none() {
            eta[level] = Some(count[level]);
        }
    }
    assert!(ledger.levels.iter().filter(|l| l.reached_at.is_some()).count() >= 2);
    for l in &ledger.levels {
        assert_eq!(l.eta, eta[l.level - 1], "level {}", l.level);
    }
}

/// Actions for the fuzzer: `(wait, worker)` per step.
fn actions() -> impl Strategy<Value = (Vec<f64>, Vec<(f64, usize)>)> {
    (prop::collection::vec(0.2f64..4.0, 1..5), prop::collection::vec((0.0f64..3.0, 0usize..8), 1..60))
}

struct Fuzz {
    steps: Vec<(f64, usize)>,
    n: usize,
    t: f64,
    d: usize,
}

impl TimeAlgorithm<f64> for Fuzz {
    fn act(&mut self, k: usize, reply: Option<&Point<f64>>) -> AlgorithmAction<f64> {
        let (dt, w) = self.steps[k % self.steps.len()];
        self.t += dt;
        let mut x = Point::zeros(self.d);
        if let Some(g) = reply {
            x.axpy(-0.1, g);
        }
        AlgorithmAction::new(VirtualTime::new(self.t).unwrap(), w % self.n, x)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Recorded times never decrease, every query touches only its own
    /// oracle, and an oracle delivers no sooner than `τ_i` after it started.
    #[test]
    fn protocol_times_and_deliveries((taus, steps) in actions(), seed in 0u64..1000) {
        let n = taus.len();
        let pool = WorkerPool::new(taus.clone()).unwrap();
        let p = quad(3);
        let est = [gaussian(&p, 0.2)];
        let mut alg = Fuzz { steps: steps.clone(), n, t: 0.0, d: 3 };
        let mut s = setup(&pool, &est, &p, OracleKind::Delayed, 80);
        s.seed = seed;
        let trace = run_time_protocol(&mut alg, &s).unwrap();
        let mut started: Vec<Option<f64>> = vec![None; n];
        let mut last = 0.0;
        for e in &trace.events {
            prop_assert!(e.time >= last);
            last = e.time;
            let (Some(w), Some(q)) = (e.worker, e.query_time) else { continue };
            match e.event {
                EventKind::Start => {
                    prop_assert!(started[w].is_none());
                    started[w] = Some(q);
                }
                EventKind::Pending => {
                    let s0 = started[w].unwrap();
                    prop_assert!(q < s0 + taus[w]);
                }
                EventKind::Deliver => {
                    let s0 = started[w].take().unwrap();
                    prop_assert!(q >= s0 + taus[w]);
                }
                EventKind::Halt => {}
                other => prop_assert!(false, "unexpected {other:?}"),
            }
        }
    }

    /// Interruptible oracles with the control bit never set behave exactly
    /// like delayed ones.
    #[test]
    fn interruptible_without_control_is_delayed((taus, steps) in actions(), seed in 0u64..1000) {
        let pool = WorkerPool::new(taus.clone()).unwrap();
        let p = quad(4);
        let est = [gaussian(&p, 0.7)];
        let mut a = Fuzz { steps: steps.clone(), n: taus.len(), t: 0.0, d: 4 };
        let mut b = Fuzz { steps, n: taus.len(), t: 0.0, d: 4 };
        let mut s = setup(&pool, &est, &p, OracleKind::Delayed, 50);
        s.seed = seed;
        let delayed = run_time_protocol(&mut a, &s).unwrap();
        s.oracle = OracleKind::Interruptible;
        let interruptible = run_time_protocol(&mut b, &s).unwrap();
        prop_assert_eq!(delayed.events, interruptible.events);
    }

    /// In `[0, t]` worker `i` can finish at most `⌊t/τ_i⌋` gradients.
    #[test]
    fn simulator_throughput_cap(
        taus in prop::collection::vec(0.1f64..5.0, 1..6),
        batch in 1usize..6,
        horizon in 1.0f64..30.0,
    ) {
        let pool = WorkerPool::new(taus.clone()).unwrap();
        let p = quad(3);
        let est = [gaussian(&p, 0.1)];
        let mut server = Rennala::new(p.start.clone(), 0.3, batch).unwrap();
        let trace = des_run(&mut server, &DesSetup::new(&pool, &est, &p, StopRule::time(horizon), 1)).unwrap();
        for e in &trace.events {
            // the clock sums τ step by step, so allow for rounding in t/τ
            let cap: u64 = taus.iter().map(|t| (e.time / t + 1e-9).floor() as u64).sum();
            prop_assert!(e.delivered <= cap, "{} deliveries by {} > {}", e.delivered, e.time, cap);
            prop_assert!(e.time <= horizon);
        }
        let total_cap: u64 = taus.iter().map(|t| (horizon / t + 1e-9).floor() as u64).sum();
        prop_assert!(trace.deliveries <= total_cap);
    }
}
