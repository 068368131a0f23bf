use super::*;

#[test]
fn stops_at_first_sae() {
    let mut cache = MirageCache::new(cramped(12)).unwrap();
    let log = cache
        .run_until_first_sae(100_000, AddressSource::Random)
        .unwrap();
    assert_eq!(log.sae_count, 1);
    assert_eq!(log.first_sae, Some(log.references - 1));
}

fn small(seed: u64) -> CacheConfig {
    CacheConfig {
        sets_per_skew: 64,
        data_store_capacity: 64 * 2 * 8,
        cipher: BlockCipherKind::Aes128,
        rng_seed: seed,
        ..CacheConfig::default()
    }
}

/// 2 sets per skew, 2 ways each, 7 data lines: SAEs are reachable.
fn cramped(seed: u64) -> CacheConfig {
    CacheConfig {
        sets_per_skew: 2,
        base_ways_per_skew: 1,
        extra_ways_per_skew: 1,
        data_store_capacity: 7,
        cipher: BlockCipherKind::Aes128,
        bug_compat: BugCompat::NONE,
        rng_seed: seed,
    }
}

#[test]
fn default_geometry() {
    let cfg = CacheConfig::default();
    assert_eq!(cfg.ways_per_skew(), 14);
    assert_eq!(cfg.total_tag_slots(), 458_752);
    assert_eq!(cfg.data_store_capacity, 262_144);
    let cache = MirageCache::new(cfg).unwrap();
    let hist = cache.occupancy_histogram();
    assert_eq!(hist.len(), 32_768);
    assert!(hist.iter().all(|&v| v == 0));
    assert!(cache.is_fresh());
}

#[test]
fn rejects_bad_geometry() {
    let mut cfg = small(0);
    cfg.sets_per_skew = 100;
    assert!(MirageCache::new(cfg).is_err());

    let mut cfg = small(0);
    cfg.data_store_capacity = cfg.total_tag_slots();
    assert!(MirageCache::new(cfg).is_err());

    let mut cfg = small(0);
    cfg.cipher = BlockCipherKind::BuggyPresent80;
    assert!(matches!(
        MirageCache::new(cfg),
        Err(Error::BugCompatRequired(_))
    ));

    assert!(CacheConfig::with_capacity_lines(1000).is_err());
    let c = CacheConfig::with_capacity_lines(16384).unwrap();
    assert_eq!(c.sets_per_skew, 1024);
}

#[test]
fn install_then_hit() {
    let mut cache = MirageCache::new(small(1)).unwrap();
    let first = cache.install(0xdead_beef).unwrap();
    assert_eq!(first.kind, OutcomeKind::MissInstalled);
    assert_eq!(cache.data_occupancy(), 1);
    let second = cache.install(0xdead_beef).unwrap();
    assert_eq!(second.kind, OutcomeKind::Hit);
    assert_eq!(cache.data_occupancy(), 1);
    cache.check_invariants().unwrap();
}

#[test]
fn global_evict_accounting() {
    let mut cache = MirageCache::new(small(2)).unwrap();
    assert!(matches!(cache.global_evict(), Err(Error::EmptyDataStore)));
    for a in 0..100u64 {
        cache.install(a).unwrap();
    }
    let before = cache.snapshot();
    let evicted = cache.global_evict().unwrap();
    assert_eq!(cache.data_occupancy(), 99);
    assert_eq!(cache.valid_tags(), 99);
    assert!(before.tags.iter().any(|t| t.tag == evicted));
    assert!(cache.snapshot().tags.iter().all(|t| t.tag != evicted));
    cache.check_invariants().unwrap();
}

#[test]
fn steady_state_uses_global_evictions() {
    let mut cache = MirageCache::new(small(3)).unwrap();
    cache.init_valid(1024).unwrap();
    assert_eq!(cache.data_occupancy(), 1024);
    let log = cache.run_references(5_000, AddressSource::Random).unwrap();
    assert_eq!(log.miss_global_eviction, 5_000);
    assert_eq!(cache.data_occupancy(), 1024);
    cache.check_invariants().unwrap();
}

#[test]
fn init_valid_edges() {
    let mut cache = MirageCache::new(small(4)).unwrap();
    assert!(matches!(
        cache.init_valid(1025),
        Err(Error::InitTooLarge { .. })
    ));
    cache.init_valid(0).unwrap();
    assert!(cache.is_fresh());
    cache.init_valid(1024).unwrap();
    assert!(cache.occupancy_histogram().iter().all(|&v| v <= 14));
    assert_eq!(cache.occupancy_histogram().iter().sum::<u32>(), 1024);
    assert!(matches!(cache.init_valid(1), Err(Error::CacheNotFresh)));
}

#[test]
fn bernoulli_init_is_gated_and_validated() {
    let mut cache = MirageCache::new(small(5)).unwrap();
    assert!(matches!(
        cache.init_buggy_bernoulli(0.5),
        Err(Error::BugCompatRequired(_))
    ));

    let mut cfg = small(5);
    cfg.bug_compat.bernoulli_init = true;
    let mut cache = MirageCache::new(cfg.clone()).unwrap();
    assert!(matches!(
        cache.init_buggy_bernoulli(1.5),
        Err(Error::InvalidProbability(_))
    ));
    cache.init_buggy_bernoulli(0.0).unwrap();
    assert!(cache.is_fresh());

    let mut cache = MirageCache::new(cfg).unwrap();
    cache.init_buggy_bernoulli(0.5).unwrap();
    let hist = cache.occupancy_histogram();
    let mean = f64::from(hist.iter().sum::<u32>()) / hist.len() as f64;
    // 128 sets of Binomial(14, 0.5): sd of the mean is sqrt(3.5 / 128) ~ 0.165.
    assert!((mean - 7.0).abs() < 3.0 * 0.166, "mean {mean}");
    assert_eq!(cache.unlinked_tags(), 0);
    cache.check_invariants().unwrap();
}

#[test]
fn bernoulli_overflow_leaves_unlinked_tags() {
    let mut cfg = small(6);
    cfg.bug_compat.bernoulli_init = true;
    let mut cache = MirageCache::new(cfg).unwrap();
    cache.init_buggy_bernoulli(1.0).unwrap();
    assert_eq!(cache.valid_tags(), 64 * 2 * 14);
    assert_eq!(cache.data_occupancy(), 1024);
    assert_eq!(cache.unlinked_tags(), 64 * 2 * 14 - 1024);
    cache.check_invariants().unwrap();
    // One global eviction frees a single way; unless it landed in a
    // candidate set, the install is an SAE.
    let out = cache.install(12345).unwrap();
    assert!(matches!(
        out.kind,
        OutcomeKind::SetAssociativeEviction | OutcomeKind::MissWithGlobalEviction
    ));
    cache.check_invariants().unwrap();
}

#[test]
fn capacity_assertion_without_global_evictions() {
    let mut cfg = small(7);
    cfg.bug_compat.no_global_evict = true;
    let mut cache = MirageCache::new(cfg).unwrap();
    let err = cache
        .run_references(2_000, AddressSource::Random)
        .unwrap_err();
    assert!(matches!(
        err.error,
        Error::CapacityAssertion {
            installed: 1025,
            capacity: 1024,
            ..
        }
    ));
    assert_eq!(err.log.references, 1024);
    assert_eq!(err.error.class(), crate::ErrorClass::Assertion);
}

#[test]
fn sae_needs_both_sets_full() {
    let mut cache = MirageCache::new(cramped(8)).unwrap();
    let mut saes = 0;
    for i in 0..5_000u64 {
        let candidates = cache.index().candidates(i);
        let full = [
            cache.occupancy_histogram()[candidates[0]],
            cache.occupancy_histogram()[2 + candidates[1]],
        ];
        let out = cache.install(i).unwrap();
        if out.kind == OutcomeKind::SetAssociativeEviction {
            saes += 1;
            assert!(out.evicted_address.is_some());
            // Global evictions only free ways, so both were full beforehand.
            assert_eq!(full, [2, 2]);
        }
        cache.check_invariants().unwrap();
    }
    assert!(saes > 0, "cramped geometry should produce SAEs");
}

#[test]
fn recycled_mix_produces_hits() {
    let mut cache = MirageCache::new(small(9)).unwrap();
    let log = cache
        .run_references(
            10_000,
            AddressSource::RecycledMix {
                reuse_probability: 0.5,
                window: 64,
            },
        )
        .unwrap();
    assert!(log.hits > 3_000);
    assert_eq!(log.references, 10_000);
    assert!(cache
        .run_references(
            1,
            AddressSource::RecycledMix {
                reuse_probability: 2.0,
                window: 1
            }
        )
        .is_err());
}

#[test]
fn zero_references() {
    let mut cache = MirageCache::new(small(10)).unwrap();
    let mut seen = 0;
    let log = cache
        .run_references_with(0, AddressSource::Random, |_, _, _| {
            seen += 1;
            ControlFlow::Continue(())
        })
        .unwrap();
    assert_eq!(log, ReferenceLog::default());
    assert_eq!(seen, 0);
}

#[test]
fn deterministic_outcomes() {
    let trace = |seed| {
        let mut cache = MirageCache::new(cramped(seed)).unwrap();
        let mut kinds = Vec::new();
        cache
            .run_references_with(2_000, AddressSource::Random, |i, o, sae| {
                kinds.push((i, o.kind, o.evicted_address, sae));
                ControlFlow::Continue(())
            })
            .unwrap();
        kinds
    };
    assert_eq!(trace(3), trace(3));
    assert_ne!(trace(3), trace(4));
}

#[test]
fn snapshot_is_versioned() {
    let mut cache = MirageCache::new(small(11)).unwrap();
    for a in 0..10u64 {
        cache.install(a).unwrap();
    }
    let snap = cache.snapshot();
    assert_eq!(snap.format_version, SNAPSHOT_FORMAT_VERSION);
    assert_eq!(snap.tags.len(), 10);
    assert_eq!(snap.data.len(), 10);
    let mut buf = Vec::new();
    snap.write_json(&mut buf).unwrap();
    let back: CacheSnapshot = serde_json::from_slice(&buf).unwrap();
    assert_eq!(back, snap);
}
