use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;

use mnat_core::bandit::{estimate_regret, NoiseModel, RegretConfig, RegretMode};
use mnat_core::greedy::{greedy_exact, greedy_with_selector, Auditor, RandomSelector};
use mnat_core::lattice::restrict;
use mnat_core::mchecker::{brute_force_max, check_exchange_with};
use mnat_core::rng::StreamRng;
use mnat_core::valuations::{
    matroid_distance, random_matroid, random_oxs, random_separable, separable_concave, SeparableConcaveSpec,
};
use mnat_core::{Exec, FeasibleRegion, Point, SharedValuation};

fn instance(seed: u64, family: u8, n: usize, k: i64) -> SharedValuation {
    let mut rng = StreamRng::seed_from_u64(seed);
    match family % 3 {
        0 => Arc::new(random_separable(&mut rng, n, 2, k)),
        1 => Arc::new(random_oxs(&mut rng, n, 2, 2, seed.is_multiple_of(2))),
        _ => Arc::new(matroid_distance(Arc::new(random_matroid(&mut rng, n)))),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn greedy_matches_brute_force(seed in any::<u64>(), family in 0u8..3, n in 1usize..=4, k in 1i64..=4) {
        let f = instance(seed, family, n, k);
        let region = FeasibleRegion::new(f.clone(), k).unwrap();
        let (_, best) = brute_force_max(&region).unwrap();
        let traj = greedy_exact(&*f, k).unwrap();
        let got = f.value(traj.final_point()).finite().unwrap();
        prop_assert!((best - got).abs() <= 1e-9);
    }

    #[test]
    fn random_trajectories_satisfy_audit(seed in any::<u64>(), family in 0u8..3, n in 1usize..=3, k in 1i64..=3) {
        let f = instance(seed, family, n, k);
        let auditor = Auditor::new(FeasibleRegion::new(f.clone(), k).unwrap()).unwrap();
        for s in 0..20 {
            let traj = greedy_with_selector(&*f, k, &mut RandomSelector::seeded(seed ^ s)).unwrap();
            let audit = auditor.audit(&traj).unwrap();
            prop_assert!(audit.holds, "{:?}", audit);
        }
    }

    #[test]
    fn restriction_keeps_exchange(seed in any::<u64>(), family in 0u8..3) {
        let f = instance(seed, family, 3, 3);
        let hi = f.bounds().hi.clone();
        let lo = Point::zeros(3);
        let mid = Point::new(hi.coords().iter().map(|&h| (h + 1) / 2).collect());
        let g = restrict(f, lo, mid).unwrap();
        prop_assert!(check_exchange_with(&g, Exec::Sequential).unwrap().pass);
    }
}

#[test]
fn exchange_check_is_exec_independent() {
    for seed in 0..10 {
        let f = instance(seed, (seed % 3) as u8, 4, 3);
        assert_eq!(
            check_exchange_with(&*f, Exec::Sequential).unwrap(),
            check_exchange_with(&*f, Exec::Parallel).unwrap()
        );
    }
}

#[test]
fn noiseless_bandit_has_small_simple_regret() {
    let spec = SeparableConcaveSpec {
        tables: vec![vec![0.0, 0.5, 0.6], vec![0.0, 0.3, 0.35], vec![0.0, 0.05, 0.1]],
        budget: 2,
    };
    let config = RegretConfig {
        valuation: Arc::new(separable_concave(spec).unwrap()),
        budget: 2,
        rounds: 30_000,
        noise: NoiseModel::Gaussian { sigma: 0.0 },
        mode: RegretMode::Simple,
        traces: false,
    };
    let summary = estimate_regret(&config, 5, 1, Exec::default()).unwrap();
    assert!((0.0..0.05).contains(&summary.mean), "{}", summary.mean);
}
