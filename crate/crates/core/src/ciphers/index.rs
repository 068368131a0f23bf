use rand::RngCore;

use crate::bugcompat::BugCompat;
use crate::ciphers::{BlockCipherKind, CipherKey, CipherRegistry, IndexCipher};
use crate::error::{Error, Result};

pub const NUM_SKEWS: usize = 2;

/// Keyed set-index function: one independently keyed cipher instance per
/// skew, with the set index taken from the low ciphertext bits.
#[derive(Debug)]
pub struct IndexDerivation {
    skews: [Box<dyn IndexCipher>; NUM_SKEWS],
    num_sets: usize,
    mask: u64,
}

impl IndexDerivation {
    pub fn new(
        registry: &CipherRegistry,
        keys: [CipherKey; NUM_SKEWS],
        num_sets: usize,
        bug_compat: &BugCompat,
    ) -> Result<Self> {
        if num_sets == 0 || !num_sets.is_power_of_two() {
            return Err(Error::config(format!(
                "number of sets must be a power of two, got {num_sets}"
            )));
        }
        let kind = keys[0].kind();
        if keys[1].kind() != kind {
            return Err(Error::config("both skews must use the same cipher"));
        }
        if num_sets.trailing_zeros() > kind.block_bits() {
            return Err(Error::config("index wider than the cipher block"));
        }
        if keys[0] == keys[1] {
            return Err(Error::config("skew keys must be distinct"));
        }
        let [k0, k1] = keys;
        Ok(IndexDerivation {
            skews: [
                registry.build(&k0, bug_compat)?,
                registry.build(&k1, bug_compat)?,
            ],
            num_sets,
            mask: num_sets as u64 - 1,
        })
    }

    /// Draws one fresh key per skew from `rng`.
    pub fn random<R: RngCore + ?Sized>(
        kind: BlockCipherKind,
        num_sets: usize,
        rng: &mut R,
        bug_compat: &BugCompat,
    ) -> Result<Self> {
        let k0 = CipherKey::random(kind, rng);
        let mut k1 = CipherKey::random(kind, rng);
        while k1 == k0 {
            k1 = CipherKey::random(kind, rng);
        }
        IndexDerivation::new(&CipherRegistry::standard(), [k0, k1], num_sets, bug_compat)
    }

    pub fn kind(&self) -> BlockCipherKind {
        self.skews[0].kind()
    }

    pub fn num_sets(&self) -> usize {
        self.num_sets
    }

    pub fn derive_set_index(&self, skew: usize, line_address: u64) -> Result<usize> {
        if skew >= NUM_SKEWS {
            return Err(Error::InvalidSkew(skew));
        }
        Ok(self.index_unchecked(skew, line_address))
    }

    #[inline]
    pub(crate) fn index_unchecked(&self, skew: usize, line_address: u64) -> usize {
        (self.skews[skew].encrypt_address(line_address) & self.mask) as usize
    }

    /// Candidate set in each skew.
    #[inline]
    pub fn candidates(&self, line_address: u64) -> [usize; NUM_SKEWS] {
        [
            self.index_unchecked(0, line_address),
            self.index_unchecked(1, line_address),
        ]
    }
}
