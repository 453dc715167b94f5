//! Local search against the exhaustive minimizer, plus association invariants.

use std::collections::BTreeMap;

use evfuse::association::{
    brute_force_partition, evaluate_partition, minimize_metaconflict, pairwise_conflict, AssociationProblem,
    ConflictParams, CountPrior, SearchParams,
};
use evfuse::report::{FeatureBag, ObsType, ObservationReport, Observer, Point, QualityCategory};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rep(id: String, t: i64, x: f64, y: f64) -> ObservationReport {
    ObservationReport {
        id,
        time: t,
        position: Point::new(x, y),
        observer: Observer::Civilian,
        obs_type: ObsType::Submarine,
        quality: QualityCategory::Cat2,
        distance_to_target: None,
        features: FeatureBag::default(),
    }
}

fn random_instance(rng: &mut ChaCha8Rng) -> (Vec<ObservationReport>, CountPrior) {
    let m = rng.random_range(2..=8);
    let reports = (0..m)
        .map(|i| {
            rep(
                format!("r{i}"),
                rng.random_range(0..4 * 3600),
                rng.random_range(0.0..30_000.0),
                rng.random_range(0.0..30_000.0),
            )
        })
        .collect();
    let n_max = rng.random_range(1..=m);
    let prior = if rng.random_bool(0.5) {
        CountPrior::geometric(rng.random_range(0.2..1.0), n_max).unwrap()
    } else {
        let mut w: BTreeMap<usize, f64> = (1..=n_max).map(|n| (n, rng.random_range(0.0..1.0))).collect();
        w.insert(rng.random_range(1..=n_max), 1.0);
        CountPrior::new(w).unwrap()
    };
    (reports, prior)
}

#[test]
fn local_search_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let params = ConflictParams::default();
    let (mut agree, total) = (0, 200);
    for i in 0..total {
        let (reports, prior) = random_instance(&mut rng);
        let search = SearchParams {
            restarts: 8,
            seed: i,
            max_iters: 1000,
        };
        let ls = minimize_metaconflict(&reports, &params, &[], &prior, &search).unwrap();
        let bf = brute_force_partition(&reports, &params, &[], &prior).unwrap();
        assert!(ls.ledger.mcf >= bf.ledger.mcf - 1e-12, "local search undercut the optimum");
        if (ls.ledger.mcf - bf.ledger.mcf).abs() <= 1e-9 {
            agree += 1;
        }
    }
    assert!(agree as f64 >= 0.95 * total as f64, "agreement {agree}/{total}");
}

#[test]
fn deterministic_for_seed() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (reports, prior) = random_instance(&mut rng);
    let search = SearchParams {
        restarts: 6,
        seed: 99,
        max_iters: 500,
    };
    let a = minimize_metaconflict(&reports, &ConflictParams::default(), &[], &prior, &search).unwrap();
    let b = minimize_metaconflict(&reports, &ConflictParams::default(), &[], &prior, &search).unwrap();
    assert_eq!(a, b);
}

#[test]
fn evaluation_is_order_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let params = ConflictParams::default();
    for _ in 0..50 {
        let (mut reports, prior) = random_instance(&mut rng);
        let n = reports.len().min(prior_n_max(&prior));
        let mut subsets: Vec<Vec<String>> = vec![Vec::new(); n];
        for (i, r) in reports.iter().enumerate() {
            subsets[if i < n { i } else { rng.random_range(0..n) }].push(r.id.clone());
        }
        let a = evaluate_partition(&subsets, &reports, &params, &[], &prior).unwrap();
        subsets.reverse();
        for s in subsets.iter_mut() {
            s.reverse();
        }
        reports.reverse();
        let b = evaluate_partition(&subsets, &reports, &params, &[], &prior).unwrap();
        assert_eq!(a, b);
        assert!(a.is_consistent());
    }
}

fn prior_n_max(prior: &CountPrior) -> usize {
    prior.n_max()
}

#[test]
fn posterior_matches_brute_force_per_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let params = ConflictParams::default();
    let mut agree = 0;
    for seed in 0..40 {
        let (reports, prior) = random_instance(&mut rng);
        let prob = AssociationProblem::new(&reports, &params, &[], &prior).unwrap();
        let post = prob
            .posterior(&SearchParams {
                restarts: 8,
                seed,
                max_iters: 1000,
            })
            .ok();
        let exact: BTreeMap<usize, f64> = (1..=prior.n_max())
            .map(|n| {
                let mcf = if n <= reports.len() { prob.brute_force(Some(n)).unwrap().ledger.mcf } else { 1.0 };
                (n, mcf)
            })
            .collect();
        if let Some(post) = post {
            if post.best_mcf.iter().all(|(n, m)| (m - exact[n]).abs() <= 1e-9) {
                agree += 1;
            }
            for (n, m) in &post.best_mcf {
                assert!(*m >= exact[n] - 1e-12);
            }
        } else {
            assert!(exact.values().all(|&m| m == 1.0));
            agree += 1;
        }
    }
    assert!(agree >= 36, "per-count agreement {agree}/40");
}

proptest! {
    #[test]
    fn pairwise_conflict_symmetric_and_monotone_in_distance(
        t1 in 0i64..10_000, dt in 0i64..10_000,
        x in -50_000.0f64..50_000.0, y in -50_000.0f64..50_000.0,
        dir in 0.0f64..std::f64::consts::TAU, d1 in 0.0f64..60_000.0, extra in 0.0f64..60_000.0,
    ) {
        let p = ConflictParams::default();
        let a = rep("a".into(), t1, x, y);
        let near = rep("b".into(), t1 + dt, x + d1 * dir.cos(), y + d1 * dir.sin());
        let d2 = d1 + extra;
        let far = rep("c".into(), t1 + dt, x + d2 * dir.cos(), y + d2 * dir.sin());
        let c_near = pairwise_conflict(&a, &near, &p, &[]);
        prop_assert_eq!(c_near, pairwise_conflict(&near, &a, &p, &[]));
        prop_assert!((0.0..=1.0).contains(&c_near));
        prop_assert!(pairwise_conflict(&a, &far, &p, &[]) >= c_near - 1e-12);
    }
}
