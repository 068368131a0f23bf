//! MIRAGE cache model.
//!
//! The tag store has two skews of `sets_per_skew` sets with
//! `base + extra` ways each. The data store is a flat array of
//! `data_store_capacity` lines. Every valid tag points at its data line
//! (forward pointer) and every occupied data line points back at its tag
//! (reverse pointer). Misses install into whichever candidate set has more
//! invalid ways. When the data store is full, a uniformly random line is
//! evicted first through its reverse pointer (global eviction). A
//! set-associative eviction (SAE) only happens when both candidate sets
//! have no invalid way left.

mod snapshot;

use std::ops::ControlFlow;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bugcompat::BugCompat;
use crate::ciphers::{BlockCipherKind, IndexDerivation};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed, SimRng};

pub use snapshot::{CacheSnapshot, SNAPSHOT_FORMAT_VERSION};

pub const NUM_SKEWS: usize = 2;

/// Stream offsets for the RNGs derived from the cache seed.
const KEY_STREAM: u64 = 0x6b65_7973;
const POLICY_STREAM: u64 = 0x706f_6c69;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheConfig {
    pub sets_per_skew: usize,
    pub base_ways_per_skew: usize,
    pub extra_ways_per_skew: usize,
    pub data_store_capacity: usize,
    pub cipher: BlockCipherKind,
    pub bug_compat: BugCompat,
    pub rng_seed: u64,
}

impl Default for CacheConfig {
    fn default() -> Self {
        CacheConfig {
            sets_per_skew: 16384,
            base_ways_per_skew: 8,
            extra_ways_per_skew: 6,
            data_store_capacity: 16384 * NUM_SKEWS * 8,
            cipher: BlockCipherKind::Prince64,
            bug_compat: BugCompat::NONE,
            rng_seed: 0,
        }
    }
}

impl CacheConfig {
    /// Geometry whose data store holds `lines` lines at the default
    /// 8 base + 6 extra ways.
    pub fn with_capacity_lines(lines: usize) -> Result<Self> {
        let base = CacheConfig::default();
        let per_set_pair = NUM_SKEWS * base.base_ways_per_skew;
        if lines == 0 || !lines.is_multiple_of(per_set_pair) {
            return Err(Error::config(format!(
                "capacity of {lines} lines is not a multiple of {per_set_pair}"
            )));
        }
        Ok(CacheConfig {
            sets_per_skew: lines / per_set_pair,
            data_store_capacity: lines,
            ..base
        })
    }

    pub fn ways_per_skew(&self) -> usize {
        self.base_ways_per_skew + self.extra_ways_per_skew
    }

    pub fn num_sets(&self) -> usize {
        self.sets_per_skew * NUM_SKEWS
    }

    pub fn total_tag_slots(&self) -> usize {
        self.num_sets() * self.ways_per_skew()
    }

    pub fn global_evictions_enabled(&self) -> bool {
        !self.bug_compat.no_global_evict
    }

    pub fn validate(&self) -> Result<()> {
        if self.sets_per_skew == 0 || !self.sets_per_skew.is_power_of_two() {
            return Err(Error::config(format!(
                "sets per skew must be a power of two, got {}",
                self.sets_per_skew
            )));
        }
        let ways = self.ways_per_skew();
        if ways == 0 || ways > usize::from(u8::MAX) {
            return Err(Error::config(format!("unsupported ways per skew: {ways}")));
        }
        if self.data_store_capacity == 0 {
            return Err(Error::config("data store capacity must be positive"));
        }
        if self.total_tag_slots() <= self.data_store_capacity {
            return Err(Error::config(format!(
                "tag store ({} slots) must exceed the data store ({} lines)",
                self.total_tag_slots(),
                self.data_store_capacity
            )));
        }
        if self.data_store_capacity >= u32::MAX as usize {
            return Err(Error::config("data store too large"));
        }
        if self.cipher.is_bug_compat() && !self.bug_compat.buggy_present {
            return Err(Error::BugCompatRequired("buggy-present80"));
        }
        Ok(())
    }
}

/// Location of a tag: the reverse-pointer payload.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagSlot {
    pub skew: u8,
    pub set: u32,
    pub way: u8,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TagEntry {
    pub valid: bool,
    pub tag: u64,
    pub fptr: Option<u32>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DataEntry {
    pub rptr: Option<TagSlot>,
}

impl DataEntry {
    pub fn occupied(&self) -> bool {
        self.rptr.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeKind {
    Hit,
    MissInstalled,
    MissWithGlobalEviction,
    SetAssociativeEviction,
}

impl OutcomeKind {
    pub const ALL: [OutcomeKind; 4] = [
        OutcomeKind::Hit,
        OutcomeKind::MissInstalled,
        OutcomeKind::MissWithGlobalEviction,
        OutcomeKind::SetAssociativeEviction,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OutcomeKind::Hit => "hit",
            OutcomeKind::MissInstalled => "miss_installed",
            OutcomeKind::MissWithGlobalEviction => "miss_global_eviction",
            OutcomeKind::SetAssociativeEviction => "set_associative_eviction",
        }
    }

    fn slot(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InstallOutcome {
    pub kind: OutcomeKind,
    /// Global-eviction victim, or the SAE victim for SAE outcomes.
    pub evicted_address: Option<u64>,
}

/// Where installed addresses come from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AddressSource {
    /// Fresh uniformly random 64-bit line addresses.
    Random,
    /// With probability `reuse_probability`, re-reference one of the last
    /// `window` addresses; otherwise draw a fresh one.
    RecycledMix {
        reuse_probability: f64,
        window: usize,
    },
}

struct AddressStream {
    source: AddressSource,
    recent: Vec<u64>,
    cursor: usize,
}

impl AddressStream {
    fn new(source: AddressSource) -> Result<Self> {
        if let AddressSource::RecycledMix {
            reuse_probability,
            window,
        } = source
        {
            if !(0.0..=1.0).contains(&reuse_probability) {
                return Err(Error::InvalidProbability(reuse_probability));
            }
            if window == 0 {
                return Err(Error::config("recycled-mix window must be positive"));
            }
        }
        Ok(AddressStream {
            source,
            recent: Vec::new(),
            cursor: 0,
        })
    }

    fn next(&mut self, rng: &mut SimRng) -> u64 {
        match self.source {
            AddressSource::Random => rng.random(),
            AddressSource::RecycledMix {
                reuse_probability,
                window,
            } => {
                if !self.recent.is_empty() && rng.random_bool(reuse_probability) {
                    return self.recent[rng.random_range(0..self.recent.len())];
                }
                let fresh = rng.random();
                if self.recent.len() < window {
                    self.recent.push(fresh);
                } else {
                    self.recent[self.cursor] = fresh;
                    self.cursor = (self.cursor + 1) % window;
                }
                fresh
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ReferenceLog {
    pub references: u64,
    pub hits: u64,
    pub miss_installed: u64,
    pub miss_global_eviction: u64,
    pub sae_count: u64,
    /// Zero-based index of the first SAE within this run.
    pub first_sae: Option<u64>,
}

impl ReferenceLog {
    pub fn count(&self, kind: OutcomeKind) -> u64 {
        match kind {
            OutcomeKind::Hit => self.hits,
            OutcomeKind::MissInstalled => self.miss_installed,
            OutcomeKind::MissWithGlobalEviction => self.miss_global_eviction,
            OutcomeKind::SetAssociativeEviction => self.sae_count,
        }
    }

    fn record(&mut self, index: u64, kind: OutcomeKind) {
        self.references += 1;
        match kind {
            OutcomeKind::Hit => self.hits += 1,
            OutcomeKind::MissInstalled => self.miss_installed += 1,
            OutcomeKind::MissWithGlobalEviction => self.miss_global_eviction += 1,
            OutcomeKind::SetAssociativeEviction => {
                self.sae_count += 1;
                self.first_sae.get_or_insert(index);
            }
        }
    }
}

/// A reference run that stopped on the capacity assertion.
#[derive(Debug)]
pub struct AbortedRun {
    pub log: ReferenceLog,
    pub error: Error,
}

pub struct MirageCache {
    config: CacheConfig,
    ways: usize,
    index: IndexDerivation,
    tags: Vec<TagEntry>,
    valid_per_set: Vec<u8>,
    data: Vec<DataEntry>,
    /// Dense list of occupied data indices, for O(1) uniform victim choice.
    occupied: Vec<u32>,
    /// Position of each data index inside `occupied`.
    occupied_pos: Vec<u32>,
    free: Vec<u32>,
    /// Valid tags without a data line (Bernoulli-init overflow only).
    unlinked_tags: usize,
    rng: SimRng,
    outcome_counts: [u64; 4],
}

const NO_POS: u32 = u32::MAX;

impl MirageCache {
    pub fn new(config: CacheConfig) -> Result<Self> {
        config.validate()?;
        let mut key_rng = rng_from_seed(derive_seed(config.rng_seed, KEY_STREAM));
        let index = IndexDerivation::random(
            config.cipher,
            config.sets_per_skew,
            &mut key_rng,
            &config.bug_compat,
        )?;
        Ok(MirageCache::with_index(config, index))
    }

    /// Uses a caller-supplied index function (e.g. fixed keys).
    pub fn with_index(config: CacheConfig, index: IndexDerivation) -> Self {
        assert_eq!(
            index.num_sets(),
            config.sets_per_skew,
            "index geometry mismatch"
        );
        let ways = config.ways_per_skew();
        let capacity = config.data_store_capacity;
        MirageCache {
            ways,
            index,
            tags: vec![TagEntry::default(); config.total_tag_slots()],
            valid_per_set: vec![0; config.num_sets()],
            data: vec![DataEntry::default(); capacity],
            occupied: Vec::with_capacity(capacity),
            occupied_pos: vec![NO_POS; capacity],
            free: (0..capacity as u32).rev().collect(),
            unlinked_tags: 0,
            rng: rng_from_seed(derive_seed(config.rng_seed, POLICY_STREAM)),
            outcome_counts: [0; 4],
            config,
        }
    }

    pub fn config(&self) -> &CacheConfig {
        &self.config
    }

    pub fn index(&self) -> &IndexDerivation {
        &self.index
    }

    pub fn data_occupancy(&self) -> usize {
        self.occupied.len()
    }

    pub fn valid_tags(&self) -> usize {
        self.valid_per_set.iter().map(|&v| usize::from(v)).sum()
    }

    pub fn unlinked_tags(&self) -> usize {
        self.unlinked_tags
    }

    pub fn outcome_count(&self, kind: OutcomeKind) -> u64 {
        self.outcome_counts[kind.slot()]
    }

    pub fn tag(&self, slot: TagSlot) -> &TagEntry {
        &self.tags[self.slot_index(slot)]
    }

    pub fn data_entry(&self, index: usize) -> &DataEntry {
        &self.data[index]
    }

    pub fn is_fresh(&self) -> bool {
        self.valid_tags() == 0 && self.occupied.is_empty()
    }

    #[inline]
    fn global_set(&self, skew: usize, set: usize) -> usize {
        skew * self.config.sets_per_skew + set
    }

    #[inline]
    fn slot_index(&self, slot: TagSlot) -> usize {
        self.global_set(usize::from(slot.skew), slot.set as usize) * self.ways
            + usize::from(slot.way)
    }

    fn slot_of(&self, flat: usize) -> TagSlot {
        let set_global = flat / self.ways;
        TagSlot {
            skew: (set_global / self.config.sets_per_skew) as u8,
            set: (set_global % self.config.sets_per_skew) as u32,
            way: (flat % self.ways) as u8,
        }
    }

    /// Valid tags per set, skew 0 sets first, then skew 1.
    pub fn occupancy_histogram(&self) -> Vec<u32> {
        self.valid_per_set.iter().map(|&v| u32::from(v)).collect()
    }

    pub fn full_sets(&self) -> usize {
        self.valid_per_set
            .iter()
            .filter(|&&v| usize::from(v) == self.ways)
            .count()
    }

    fn lookup(&self, address: u64, candidates: &[usize; NUM_SKEWS]) -> Option<usize> {
        for (skew, &set) in candidates.iter().enumerate() {
            let base = self.global_set(skew, set) * self.ways;
            if self.tags[base..base + self.ways]
                .iter()
                .any(|t| t.valid && t.tag == address)
            {
                return Some(skew);
            }
        }
        None
    }

    /// Tag slot currently holding `address`, if resident.
    pub fn locate(&self, address: u64) -> Option<TagSlot> {
        let candidates = self.index.candidates(address);
        candidates.iter().enumerate().find_map(|(skew, &set)| {
            let base = self.global_set(skew, set) * self.ways;
            self.tags[base..base + self.ways]
                .iter()
                .position(|t| t.valid && t.tag == address)
                .map(|way| TagSlot {
                    skew: skew as u8,
                    set: set as u32,
                    way: way as u8,
                })
        })
    }

    fn alloc_data(&mut self, slot: TagSlot) -> Option<u32> {
        let idx = self.free.pop()?;
        self.data[idx as usize].rptr = Some(slot);
        self.occupied_pos[idx as usize] = self.occupied.len() as u32;
        self.occupied.push(idx);
        Some(idx)
    }

    fn free_data(&mut self, idx: u32) {
        let pos = self.occupied_pos[idx as usize] as usize;
        let last = *self.occupied.last().expect("freeing from empty data store");
        self.occupied.swap_remove(pos);
        if last != idx {
            self.occupied_pos[last as usize] = pos as u32;
        }
        self.occupied_pos[idx as usize] = NO_POS;
        self.data[idx as usize].rptr = None;
        self.free.push(idx);
    }

    /// Invalidates a tag and releases its data line, if any.
    fn invalidate(&mut self, flat: usize) -> u64 {
        let entry = std::mem::take(&mut self.tags[flat]);
        debug_assert!(entry.valid);
        self.valid_per_set[flat / self.ways] -= 1;
        match entry.fptr {
            Some(idx) => self.free_data(idx),
            None => self.unlinked_tags -= 1,
        }
        entry.tag
    }

    /// Evicts a uniformly random resident line and its tag.
    pub fn global_evict(&mut self) -> Result<u64> {
        if self.occupied.is_empty() {
            return Err(Error::EmptyDataStore);
        }
        let victim = self.occupied[self.rng.random_range(0..self.occupied.len())];
        let slot = self.data[victim as usize]
            .rptr
            .expect("occupied entry has a reverse pointer");
        let flat = self.slot_index(slot);
        debug_assert_eq!(self.tags[flat].fptr, Some(victim));
        Ok(self.invalidate(flat))
    }

    fn install_at(&mut self, skew: usize, set: usize, address: u64, reference: u64) -> Result<()> {
        let gset = self.global_set(skew, set);
        let base = gset * self.ways;
        let way = self.tags[base..base + self.ways]
            .iter()
            .position(|t| !t.valid)
            .expect("caller checked for an invalid way");
        let slot = TagSlot {
            skew: skew as u8,
            set: set as u32,
            way: way as u8,
        };
        let Some(fptr) = self.alloc_data(slot) else {
            return Err(Error::CapacityAssertion {
                installed: self.occupied.len() as u64 + 1,
                capacity: self.config.data_store_capacity as u64,
                reference,
            });
        };
        self.tags[base + way] = TagEntry {
            valid: true,
            tag: address,
            fptr: Some(fptr),
        };
        self.valid_per_set[gset] += 1;
        Ok(())
    }

    pub fn install(&mut self, address: u64) -> Result<InstallOutcome> {
        let reference = self.outcome_counts.iter().sum();
        self.install_inner(address, reference)
    }

    fn install_inner(&mut self, address: u64, reference: u64) -> Result<InstallOutcome> {
        let candidates = self.index.candidates(address);
        if self.lookup(address, &candidates).is_some() {
            self.outcome_counts[OutcomeKind::Hit.slot()] += 1;
            return Ok(InstallOutcome {
                kind: OutcomeKind::Hit,
                evicted_address: None,
            });
        }

        let mut kind = OutcomeKind::MissInstalled;
        let mut evicted = None;
        if self.free.is_empty() && self.config.global_evictions_enabled() {
            evicted = Some(self.global_evict()?);
            kind = OutcomeKind::MissWithGlobalEviction;
        }

        let valid = [
            self.valid_per_set[self.global_set(0, candidates[0])],
            self.valid_per_set[self.global_set(1, candidates[1])],
        ];
        let skew = if valid[0] < valid[1] || (valid[0] == valid[1] && self.rng.random::<bool>()) {
            0
        } else {
            1
        };
        let set = candidates[skew];

        if usize::from(valid[skew]) == self.ways {
            // Both candidates are full: only now may a valid tag be evicted.
            assert!(
                valid.iter().all(|&v| usize::from(v) == self.ways),
                "SAE with an invalid way available"
            );
            let base = self.global_set(skew, set) * self.ways;
            let way = self.rng.random_range(0..self.ways);
            evicted = Some(self.invalidate(base + way));
            kind = OutcomeKind::SetAssociativeEviction;
        }

        self.install_at(skew, set, address, reference)?;
        self.outcome_counts[kind.slot()] += 1;
        Ok(InstallOutcome {
            kind,
            evicted_address: evicted,
        })
    }

    /// Makes `k` distinct random addresses resident through [`install`].
    ///
    /// [`install`]: MirageCache::install
    pub fn init_valid(&mut self, k: usize) -> Result<()> {
        if k > self.config.data_store_capacity {
            return Err(Error::InitTooLarge {
                requested: k as u64,
                capacity: self.config.data_store_capacity as u64,
            });
        }
        if !self.is_fresh() {
            return Err(Error::CacheNotFresh);
        }
        let mut resident = 0;
        while resident < k {
            let address = self.rng.random();
            if self.install(address)?.kind != OutcomeKind::Hit {
                resident += 1;
            }
        }
        self.outcome_counts = [0; 4];
        Ok(())
    }

    /// Marks every tag valid independently with probability `p`, with
    /// fabricated distinct addresses. Tags beyond the data-store capacity
    /// stay valid but unlinked.
    pub fn init_buggy_bernoulli(&mut self, p: f64) -> Result<()> {
        if !self.config.bug_compat.bernoulli_init {
            return Err(Error::BugCompatRequired("bernoulli initialization"));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidProbability(p));
        }
        if !self.is_fresh() {
            return Err(Error::CacheNotFresh);
        }
        // Fabricated tags live in a reserved high range so that they never
        // alias addresses produced by the 64-bit random stream in practice.
        const FABRICATED_BASE: u64 = 0xfab0_0000_0000_0000;
        for flat in 0..self.tags.len() {
            if !self.rng.random_bool(p) {
                continue;
            }
            let slot = self.slot_of(flat);
            let fptr = self.alloc_data(slot);
            if fptr.is_none() {
                self.unlinked_tags += 1;
            }
            self.tags[flat] = TagEntry {
                valid: true,
                tag: FABRICATED_BASE | flat as u64,
                fptr,
            };
            self.valid_per_set[flat / self.ways] += 1;
        }
        if self.unlinked_tags > 0 {
            log::warn!(
                "bernoulli init produced {} valid tags beyond the data-store capacity of {}; \
                 they are counted in tag occupancy only",
                self.unlinked_tags,
                self.config.data_store_capacity
            );
        }
        Ok(())
    }

    /// Performs up to `n` installs from `source`, calling `observe` with
    /// the reference index, the outcome and the cumulative SAE count after
    /// each one. Returning `ControlFlow::Break` stops the run early.
    pub fn run_references_with<F>(
        &mut self,
        n: u64,
        source: AddressSource,
        mut observe: F,
    ) -> std::result::Result<ReferenceLog, AbortedRun>
    where
        F: FnMut(u64, &InstallOutcome, u64) -> ControlFlow<()>,
    {
        let mut log = ReferenceLog::default();
        let mut stream = match AddressStream::new(source) {
            Ok(s) => s,
            Err(error) => return Err(AbortedRun { log, error }),
        };
        for i in 0..n {
            let address = stream.next(&mut self.rng);
            match self.install_inner(address, i) {
                Ok(outcome) => {
                    log.record(i, outcome.kind);
                    if observe(i, &outcome, log.sae_count).is_break() {
                        break;
                    }
                }
                Err(error) => return Err(AbortedRun { log, error }),
            }
        }
        Ok(log)
    }

    pub fn run_references(
        &mut self,
        n: u64,
        source: AddressSource,
    ) -> std::result::Result<ReferenceLog, AbortedRun> {
        self.run_references_with(n, source, |_, _, _| ControlFlow::Continue(()))
    }

    /// Like [`run_references`](MirageCache::run_references) but stops right
    /// after the first SAE.
    pub fn run_until_first_sae(
        &mut self,
        n: u64,
        source: AddressSource,
    ) -> std::result::Result<ReferenceLog, AbortedRun> {
        self.run_references_with(n, source, |_, outcome, _| {
            if outcome.kind == OutcomeKind::SetAssociativeEviction {
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        })
    }

    /// Full scan of the pointer bijection and the occupancy bookkeeping.
    pub fn check_invariants(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Invariant(msg));
        let mut linked = 0usize;
        let mut unlinked = 0usize;
        for (flat, t) in self.tags.iter().enumerate() {
            if !t.valid {
                if t.fptr.is_some() {
                    return fail(format!("invalid tag {flat} holds a forward pointer"));
                }
                continue;
            }
            match t.fptr {
                None => unlinked += 1,
                Some(idx) => {
                    linked += 1;
                    let Some(entry) = self.data.get(idx as usize) else {
                        return fail(format!("tag {flat} points past the data store"));
                    };
                    if entry.rptr.map(|s| self.slot_index(s)) != Some(flat) {
                        return fail(format!("data line {idx} does not point back to tag {flat}"));
                    }
                }
            }
        }
        for (idx, d) in self.data.iter().enumerate() {
            if let Some(slot) = d.rptr {
                let t = &self.tags[self.slot_index(slot)];
                if !t.valid || t.fptr != Some(idx as u32) {
                    return fail(format!("data line {idx} has a dangling reverse pointer"));
                }
                if self.occupied.get(self.occupied_pos[idx] as usize) != Some(&(idx as u32)) {
                    return fail(format!("occupied index lost track of line {idx}"));
                }
            }
        }
        if linked != self.occupied.len() || linked + self.free.len() != self.data.len() {
            return fail(format!(
                "{linked} linked tags vs {} occupied lines and {} free",
                self.occupied.len(),
                self.free.len()
            ));
        }
        if unlinked != self.unlinked_tags {
            return fail(format!(
                "{unlinked} unlinked tags, expected {}",
                self.unlinked_tags
            ));
        }
        for (set, &count) in self.valid_per_set.iter().enumerate() {
            let base = set * self.ways;
            let actual = self.tags[base..base + self.ways]
                .iter()
                .filter(|t| t.valid)
                .count();
            if actual != usize::from(count) || actual > self.ways {
                return fail(format!(
                    "set {set} reports {count} valid tags, found {actual}"
                ));
            }
        }
        if self.occupied.len() > self.config.data_store_capacity {
            return fail("data store over capacity".into());
        }
        Ok(())
    }
}

impl std::fmt::Debug for MirageCache {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MirageCache")
            .field("config", &self.config)
            .field("data_occupancy", &self.occupied.len())
            .field("valid_tags", &self.valid_tags())
            .finish_non_exhaustive()
    }
}

#[cfg(test)]
mod tests;
