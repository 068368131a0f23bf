use mirage_core::analysis::{chi_square_statistic, chi_square_upper_critical};
use mirage_core::bnb::{bnb_fill, bnb_run, BnbConfig, BucketState, Throw};
use mirage_core::rng::rng_from_seed;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn steady_state_conserves_balls_and_bounds_buckets(
        seed in any::<u64>(),
        buckets in 4usize..64,
        extra in 1u32..7,
        steps in 100usize..3_000,
    ) {
        let cfg = BnbConfig {
            buckets_per_skew: buckets,
            capacity_per_bucket: 8 + extra,
            average_load: 8,
            max_throws: 0,
            remove_ball_enabled: true,
            rng_seed: seed,
        };
        let mut rng = rng_from_seed(seed);
        let fill = bnb_fill(&cfg, &mut rng);
        let mut state = fill.state;
        prop_assert!(state.max_occupancy() <= cfg.capacity_per_bucket);
        if fill.spill_at.is_some() {
            return Ok(());
        }
        prop_assert_eq!(state.total_balls(), cfg.total_balls());
        for _ in 0..steps {
            let before = state.occupancy().to_vec();
            let outcome = state.remove_then_throw(&mut rng);
            let sum: u64 = state.occupancy().iter().map(|&c| u64::from(c)).sum();
            prop_assert_eq!(sum, cfg.total_balls());
            prop_assert!(state.max_occupancy() <= cfg.capacity_per_bucket);
            if outcome == Throw::Spill {
                prop_assert_eq!(state.occupancy(), &before[..]);
                break;
            }
        }
    }

    #[test]
    fn runs_are_seed_deterministic(seed in any::<u64>(), w in 9u32..12, remove in any::<bool>()) {
        let cfg = BnbConfig {
            buckets_per_skew: 128,
            capacity_per_bucket: w,
            average_load: 8,
            max_throws: 5_000,
            remove_ball_enabled: remove,
            rng_seed: seed,
        };
        prop_assert_eq!(bnb_run(&cfg).unwrap(), bnb_run(&cfg).unwrap());
    }

    #[test]
    fn capacity_at_least_total_never_spills(seed in any::<u64>()) {
        let cfg = BnbConfig {
            buckets_per_skew: 1,
            capacity_per_bucket: 16,
            average_load: 8,
            max_throws: 2_000,
            remove_ball_enabled: true,
            rng_seed: seed,
        };
        let r = bnb_run(&cfg).unwrap();
        prop_assert!(!r.spilled);
        prop_assert!(!r.capacity_violation);
    }
}

#[test]
fn removals_are_proportional_to_occupancy() {
    // Static profile: bucket b holds 1 + (b % 14) balls.
    let counts: Vec<u32> = (0..64).map(|b| 1 + (b % 14)).collect();
    let total: u32 = counts.iter().sum();
    let state = BucketState::from_counts(32, 14, counts.clone());
    let mut rng = rng_from_seed(21);
    let n = 1_000_000u64;
    let mut observed = vec![0u64; counts.len()];
    for _ in 0..n {
        observed[state.sample_removal(&mut rng).unwrap()] += 1;
    }
    let expected: Vec<f64> = counts
        .iter()
        .map(|&c| n as f64 * f64::from(c) / f64::from(total))
        .collect();
    let chi2 = chi_square_statistic(&observed, &expected);
    let critical = chi_square_upper_critical(counts.len() - 1, 3.0);
    assert!(chi2 < critical, "chi2 {chi2} >= {critical}");
}

#[test]
fn fill_at_average_load_spills() {
    let cfg = BnbConfig {
        capacity_per_bucket: 8,
        ..BnbConfig::default()
    };
    let spills = (0..100u64)
        .filter(|&seed| bnb_fill(&cfg, &mut rng_from_seed(seed)).spill_at.is_some())
        .count();
    assert_eq!(spills, 100);
}

#[test]
fn default_fill_is_spill_free_and_conserving() {
    for seed in 0..5 {
        let fill = bnb_fill(&BnbConfig::default(), &mut rng_from_seed(seed));
        assert!(fill.spill_at.is_none());
        assert_eq!(fill.state.total_balls(), 262_144);
        assert!(fill.state.max_occupancy() <= 14);
    }
}
