//! Block ciphers used for randomized set-index derivation.
//!
//! Each backend implements [`IndexCipher`] and is registered by name in a
//! [`CipherRegistry`]; callers pick one at runtime from configuration.

use std::fmt;
use std::str::FromStr;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub mod aes;
mod index;
pub mod kat;
pub mod present;
pub mod prince;
mod registry;

pub use self::aes::Aes128;
pub use self::index::IndexDerivation;
pub use self::present::{BuggyPresent80, Present80};
pub use self::prince::Prince64;
pub use self::registry::{CipherEntry, CipherRegistry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlockCipherKind {
    Present80,
    Prince64,
    Aes128,
    BuggyPresent80,
}

impl BlockCipherKind {
    pub const ALL: [BlockCipherKind; 4] = [
        BlockCipherKind::Present80,
        BlockCipherKind::Prince64,
        BlockCipherKind::Aes128,
        BlockCipherKind::BuggyPresent80,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BlockCipherKind::Present80 => "present80",
            BlockCipherKind::Prince64 => "prince64",
            BlockCipherKind::Aes128 => "aes128",
            BlockCipherKind::BuggyPresent80 => "buggy-present80",
        }
    }

    pub fn block_bits(self) -> u32 {
        match self {
            BlockCipherKind::Aes128 => 128,
            _ => 64,
        }
    }

    pub fn key_bytes(self) -> usize {
        match self {
            BlockCipherKind::Present80 | BlockCipherKind::BuggyPresent80 => present::KEY_BYTES,
            BlockCipherKind::Prince64 => prince::KEY_BYTES,
            BlockCipherKind::Aes128 => aes::KEY_BYTES,
        }
    }

    pub fn is_bug_compat(self) -> bool {
        self == BlockCipherKind::BuggyPresent80
    }
}

impl fmt::Display for BlockCipherKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BlockCipherKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CipherRegistry::standard()
            .lookup(s)
            .map(|e| e.kind)
            .ok_or_else(|| Error::UnknownCipher(s.to_owned()))
    }
}

/// Key material tagged with the cipher it belongs to. The length is
/// validated at construction.
#[derive(Clone, PartialEq, Eq)]
pub struct CipherKey {
    kind: BlockCipherKind,
    bytes: Vec<u8>,
}

impl CipherKey {
    pub fn new(kind: BlockCipherKind, bytes: impl Into<Vec<u8>>) -> Result<Self> {
        let bytes = bytes.into();
        if bytes.len() != kind.key_bytes() {
            return Err(Error::KeyLength {
                kind,
                expected: kind.key_bytes(),
                actual: bytes.len(),
            });
        }
        Ok(CipherKey { kind, bytes })
    }

    pub fn from_hex(kind: BlockCipherKind, hex: &str) -> Result<Self> {
        CipherKey::new(kind, decode_hex(hex)?)
    }

    pub fn random<R: RngCore + ?Sized>(kind: BlockCipherKind, rng: &mut R) -> Self {
        let mut bytes = vec![0u8; kind.key_bytes()];
        rng.fill_bytes(&mut bytes);
        CipherKey { kind, bytes }
    }

    pub fn kind(&self) -> BlockCipherKind {
        self.kind
    }

    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub(crate) fn array<const N: usize>(&self) -> [u8; N] {
        self.bytes
            .as_slice()
            .try_into()
            .expect("key length checked at construction")
    }
}

impl fmt::Debug for CipherKey {
    // Key bytes stay out of debug output.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CipherKey")
            .field("kind", &self.kind)
            .finish_non_exhaustive()
    }
}

/// A keyed block cipher seen through the set-index derivation lens.
pub trait IndexCipher: Send + Sync + fmt::Debug {
    fn kind(&self) -> BlockCipherKind;

    /// Encrypts a 64-bit line address and returns the low 64 bits of the
    /// ciphertext.
    fn encrypt_address(&self, address: u64) -> u64;
}

pub fn present80_encrypt(key: &[u8; present::KEY_BYTES], plaintext: u64) -> u64 {
    Present80::new(key).encrypt(plaintext)
}

/// Only callable with the `buggy-present` bug-compat flag.
pub fn buggy_present80_encrypt(
    bug_compat: &crate::BugCompat,
    key: &[u8; present::KEY_BYTES],
    plaintext: u64,
) -> Result<u64> {
    if !bug_compat.buggy_present {
        return Err(Error::BugCompatRequired("buggy-present80"));
    }
    Ok(BuggyPresent80::new(key).encrypt(plaintext))
}

pub fn prince64_encrypt(key: &[u8; prince::KEY_BYTES], plaintext: u64) -> u64 {
    Prince64::new(key).encrypt(plaintext)
}

pub fn aes128_encrypt(key: &[u8; aes::KEY_BYTES], plaintext: u128) -> u128 {
    Aes128::new(key).encrypt_block(plaintext)
}

pub fn decode_hex(hex: &str) -> Result<Vec<u8>> {
    let hex = hex.trim().trim_start_matches("0x").replace('_', "");
    if !hex.len().is_multiple_of(2) {
        return Err(Error::config(format!("odd-length hex string `{hex}`")));
    }
    (0..hex.len())
        .step_by(2)
        .map(|i| {
            u8::from_str_radix(&hex[i..i + 2], 16)
                .map_err(|_| Error::config(format!("invalid hex string `{hex}`")))
        })
        .collect()
}

pub fn encode_hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_length_is_enforced() {
        assert!(CipherKey::new(BlockCipherKind::Present80, vec![0; 10]).is_ok());
        assert!(matches!(
            CipherKey::new(BlockCipherKind::Present80, vec![0; 16]),
            Err(Error::KeyLength {
                expected: 10,
                actual: 16,
                ..
            })
        ));
        assert!(CipherKey::new(BlockCipherKind::Prince64, vec![0; 10]).is_err());
        assert!(CipherKey::new(BlockCipherKind::Aes128, vec![0; 16]).is_ok());
    }

    #[test]
    fn hex_roundtrip() {
        let bytes = decode_hex("0x00ff10").unwrap();
        assert_eq!(bytes, vec![0, 0xff, 0x10]);
        assert_eq!(encode_hex(&bytes), "00ff10");
        assert!(decode_hex("abc").is_err());
        assert!(decode_hex("zz").is_err());
    }

    #[test]
    fn kinds_parse_by_name() {
        for kind in BlockCipherKind::ALL {
            assert_eq!(kind.name().parse::<BlockCipherKind>().unwrap(), kind);
        }
        assert!("des".parse::<BlockCipherKind>().is_err());
    }

    #[test]
    fn buggy_entry_point_is_gated() {
        let err = buggy_present80_encrypt(&crate::BugCompat::NONE, &[0; 10], 0).unwrap_err();
        assert!(matches!(err, Error::BugCompatRequired(_)));
    }
}
