//! PRESENT with an 80-bit key: 31 rounds of key addition, a 4-bit S-box
//! layer and a bit permutation, followed by a final whitening key.
//!
//! Keys and blocks use the big-endian conventions of the published test
//! vectors: the 80-bit key is `k79 .. k0`, most significant byte first.

use crate::ciphers::{BlockCipherKind, IndexCipher};

pub const ROUNDS: usize = 31;
pub const KEY_BYTES: usize = 10;

pub(crate) const SBOX: [u8; 16] = [
    0xc, 0x5, 0x6, 0xb, 0x9, 0x0, 0xa, 0xd, 0x3, 0xe, 0xf, 0x8, 0x4, 0x7, 0x1, 0x2,
];

/// The S-box table as carried by the defective implementation: the last
/// entry reads 0x1 instead of 0x2, so inputs 0xe and 0xf collide and the
/// table is no longer a permutation. The same table drives the key schedule.
pub(crate) const DEFECTIVE_SBOX: [u8; 16] = [
    0xc, 0x5, 0x6, 0xb, 0x9, 0x0, 0xa, 0xd, 0x3, 0xe, 0xf, 0x8, 0x4, 0x7, 0x1, 0x1,
];

const fn inverse_sbox(sbox: &[u8; 16]) -> [u8; 16] {
    let mut inv = [0u8; 16];
    let mut i = 0;
    while i < 16 {
        inv[sbox[i] as usize] = i as u8;
        i += 1;
    }
    inv
}

const INV_SBOX: [u8; 16] = inverse_sbox(&SBOX);

/// Destination of state bit `i` in the permutation layer.
#[inline]
const fn permuted_position(i: usize) -> usize {
    if i == 63 {
        63
    } else {
        (i * 16) % 63
    }
}

fn permute(state: u64) -> u64 {
    (0..64).fold(0, |out, i| {
        out | (((state >> i) & 1) << permuted_position(i))
    })
}

fn unpermute(state: u64) -> u64 {
    (0..64).fold(0, |out, i| {
        out | (((state >> permuted_position(i)) & 1) << i)
    })
}

fn substitute(state: u64, sbox: &[u8; 16]) -> u64 {
    (0..16).fold(0, |out, n| {
        out | (u64::from(sbox[((state >> (4 * n)) & 0xf) as usize]) << (4 * n))
    })
}

fn round_keys(key: &[u8; KEY_BYTES], sbox: &[u8; 16]) -> [u64; ROUNDS + 1] {
    const MASK80: u128 = (1u128 << 80) - 1;
    let mut reg = key.iter().fold(0u128, |acc, &b| (acc << 8) | u128::from(b));
    let mut keys = [0u64; ROUNDS + 1];
    for (round, slot) in keys.iter_mut().enumerate() {
        *slot = (reg >> 16) as u64;
        reg = ((reg << 61) | (reg >> 19)) & MASK80;
        let top = (reg >> 76) as usize;
        reg = (reg & ((1u128 << 76) - 1)) | (u128::from(sbox[top]) << 76);
        reg ^= ((round as u128) + 1) << 15;
    }
    keys
}

/// Combined S-box + permutation tables: `sp[n][v]` is the image of nibble
/// value `v` at nibble position `n` after both layers. The permutation is
/// linear, so a round is the XOR of sixteen lookups.
fn sp_tables(sbox: &[u8; 16]) -> Box<[[u64; 16]; 16]> {
    let mut sp = Box::new([[0u64; 16]; 16]);
    for (n, row) in sp.iter_mut().enumerate() {
        for (v, cell) in row.iter_mut().enumerate() {
            *cell = permute(u64::from(sbox[v]) << (4 * n));
        }
    }
    sp
}

#[derive(Clone)]
struct PresentCore {
    round_keys: [u64; ROUNDS + 1],
    sp: Box<[[u64; 16]; 16]>,
}

impl PresentCore {
    fn new(key: &[u8; KEY_BYTES], sbox: &[u8; 16]) -> Self {
        PresentCore {
            round_keys: round_keys(key, sbox),
            sp: sp_tables(sbox),
        }
    }

    #[inline]
    fn encrypt(&self, block: u64) -> u64 {
        let mut state = block;
        for rk in &self.round_keys[..ROUNDS] {
            state ^= rk;
            let mut next = 0;
            for (n, row) in self.sp.iter().enumerate() {
                next ^= row[((state >> (4 * n)) & 0xf) as usize];
            }
            state = next;
        }
        state ^ self.round_keys[ROUNDS]
    }
}

/// Reference PRESENT-80.
#[derive(Clone)]
pub struct Present80 {
    core: PresentCore,
}

impl Present80 {
    pub fn new(key: &[u8; KEY_BYTES]) -> Self {
        Present80 {
            core: PresentCore::new(key, &SBOX),
        }
    }

    pub fn encrypt(&self, block: u64) -> u64 {
        self.core.encrypt(block)
    }

    pub fn decrypt(&self, block: u64) -> u64 {
        let keys = &self.core.round_keys;
        let mut state = block ^ keys[ROUNDS];
        for rk in keys[..ROUNDS].iter().rev() {
            state = substitute(unpermute(state), &INV_SBOX) ^ rk;
        }
        state
    }

    pub fn round_keys(&self) -> &[u64; ROUNDS + 1] {
        &self.core.round_keys
    }
}

impl std::fmt::Debug for Present80 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Present80").finish_non_exhaustive()
    }
}

impl IndexCipher for Present80 {
    fn kind(&self) -> BlockCipherKind {
        BlockCipherKind::Present80
    }

    fn encrypt_address(&self, address: u64) -> u64 {
        self.encrypt(address)
    }
}

/// PRESENT-80 with the defective S-box table. Not a permutation; it fails
/// the published known-answer vectors and yields skewed set indices.
///
/// Only reachable through the cipher registry with the `buggy-present`
/// bug-compat flag set.
#[derive(Clone)]
pub struct BuggyPresent80 {
    core: PresentCore,
}

impl BuggyPresent80 {
    pub(crate) fn new(key: &[u8; KEY_BYTES]) -> Self {
        BuggyPresent80 {
            core: PresentCore::new(key, &DEFECTIVE_SBOX),
        }
    }

    pub fn encrypt(&self, block: u64) -> u64 {
        self.core.encrypt(block)
    }
}

impl std::fmt::Debug for BuggyPresent80 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BuggyPresent80").finish_non_exhaustive()
    }
}

impl IndexCipher for BuggyPresent80 {
    fn kind(&self) -> BlockCipherKind {
        BlockCipherKind::BuggyPresent80
    }

    fn encrypt_address(&self, address: u64) -> u64 {
        self.encrypt(address)
    }
}
