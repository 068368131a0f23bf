//! Known-answer test vectors and the runner that checks every backend
//! against them.

use std::path::Path;

use serde::Serialize;

use crate::bugcompat::BugCompat;
use crate::ciphers::{
    decode_hex, encode_hex, Aes128, BlockCipherKind, BuggyPresent80, CipherKey, Present80, Prince64,
};
use crate::error::{Error, Result};

/// The fixture shipped with the crate.
pub const BUNDLED_VECTORS: &str = include_str!("../../fixtures/kat_vectors.txt");

#[derive(Debug, Clone)]
pub struct KatVector {
    pub kind: BlockCipherKind,
    pub key: CipherKey,
    pub plaintext: u128,
    pub ciphertext: u128,
    pub line: usize,
}

fn parse_block(hex: &str, bits: u32, line: usize) -> Result<u128> {
    let bytes = decode_hex(hex).map_err(|e| Error::Fixture {
        line,
        reason: e.to_string(),
    })?;
    if bytes.len() * 8 != bits as usize {
        return Err(Error::Fixture {
            line,
            reason: format!("expected a {bits}-bit block, got {} bits", bytes.len() * 8),
        });
    }
    Ok(bytes
        .iter()
        .fold(0u128, |acc, &b| (acc << 8) | u128::from(b)))
}

/// Parses `[cipher]` sections of `key plaintext ciphertext` hex triples.
pub fn parse_vectors(text: &str) -> Result<Vec<KatVector>> {
    let mut kind = None;
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            let parsed: BlockCipherKind = name.trim().parse().map_err(|_| Error::Fixture {
                line,
                reason: format!("unknown cipher section `{name}`"),
            })?;
            kind = Some(parsed);
            continue;
        }
        let kind = kind.ok_or_else(|| Error::Fixture {
            line,
            reason: "vector before any [cipher] section".into(),
        })?;
        let fields: Vec<&str> = content.split_whitespace().collect();
        let [key, pt, ct] = fields[..] else {
            return Err(Error::Fixture {
                line,
                reason: format!("expected 3 fields, found {}", fields.len()),
            });
        };
        let key = CipherKey::from_hex(kind, key).map_err(|e| Error::Fixture {
            line,
            reason: e.to_string(),
        })?;
        out.push(KatVector {
            kind,
            key,
            plaintext: parse_block(pt, kind.block_bits(), line)?,
            ciphertext: parse_block(ct, kind.block_bits(), line)?,
            line,
        });
    }
    Ok(out)
}

pub fn load_vectors(path: &Path) -> Result<Vec<KatVector>> {
    parse_vectors(&std::fs::read_to_string(path)?)
}

pub fn bundled_vectors() -> Vec<KatVector> {
    parse_vectors(BUNDLED_VECTORS).expect("bundled fixture parses")
}

/// Encrypts one block with the cipher named by `key`. 64-bit ciphers use
/// the low half of `plaintext`.
pub fn encrypt_block(key: &CipherKey, plaintext: u128, bug_compat: &BugCompat) -> Result<u128> {
    let block64 = plaintext as u64;
    Ok(match key.kind() {
        BlockCipherKind::Present80 => u128::from(Present80::new(&key.array()).encrypt(block64)),
        BlockCipherKind::Prince64 => u128::from(Prince64::new(&key.array()).encrypt(block64)),
        BlockCipherKind::Aes128 => Aes128::new(&key.array()).encrypt_block(plaintext),
        BlockCipherKind::BuggyPresent80 => {
            if !bug_compat.buggy_present {
                return Err(Error::BugCompatRequired("buggy-present80"));
            }
            u128::from(BuggyPresent80::new(&key.array()).encrypt(block64))
        }
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct KatOutcome {
    pub cipher: BlockCipherKind,
    pub key: String,
    pub plaintext: String,
    pub expected: String,
    pub actual: String,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct KatReport {
    pub outcomes: Vec<KatOutcome>,
    /// Outcomes of running the defective PRESENT against the PRESENT-80
    /// vectors; `pass` means it (wrongly) matched.
    pub buggy_outcomes: Vec<KatOutcome>,
}

impl KatReport {
    pub fn cipher_passed(&self, kind: BlockCipherKind) -> bool {
        self.outcomes
            .iter()
            .filter(|o| o.cipher == kind)
            .all(|o| o.pass)
            && self.outcomes.iter().any(|o| o.cipher == kind)
    }

    pub fn correct_ciphers_pass(&self) -> bool {
        !self.outcomes.is_empty() && self.outcomes.iter().all(|o| o.pass)
    }

    pub fn buggy_fails(&self) -> bool {
        !self.buggy_outcomes.is_empty() && self.buggy_outcomes.iter().any(|o| !o.pass)
    }

    /// Suite verdict: correct backends match every vector and the defective
    /// one does not.
    pub fn ok(&self) -> bool {
        self.correct_ciphers_pass() && self.buggy_fails()
    }
}

fn block_hex(value: u128, kind: BlockCipherKind) -> String {
    let bytes = value.to_be_bytes();
    encode_hex(&bytes[16 - kind.block_bits() as usize / 8..])
}

fn outcome(kind: BlockCipherKind, v: &KatVector, actual: u128) -> KatOutcome {
    KatOutcome {
        cipher: kind,
        key: encode_hex(v.key.bytes()),
        plaintext: block_hex(v.plaintext, v.kind),
        expected: block_hex(v.ciphertext, v.kind),
        actual: block_hex(actual, v.kind),
        pass: actual == v.ciphertext,
    }
}

/// Runs every vector. The defective PRESENT is exercised against the
/// PRESENT-80 vectors as part of the suite, so this entry point enables it.
pub fn run(vectors: &[KatVector]) -> KatReport {
    let flags = BugCompat {
        buggy_present: true,
        ..BugCompat::NONE
    };
    let mut outcomes = Vec::new();
    let mut buggy_outcomes = Vec::new();
    for v in vectors {
        let actual = encrypt_block(&v.key, v.plaintext, &flags).expect("flag set");
        outcomes.push(outcome(v.kind, v, actual));
        if v.kind == BlockCipherKind::Present80 {
            let key = CipherKey::new(BlockCipherKind::BuggyPresent80, v.key.bytes())
                .expect("same length");
            let actual = encrypt_block(&key, v.plaintext, &flags).expect("flag set");
            buggy_outcomes.push(outcome(BlockCipherKind::BuggyPresent80, v, actual));
        }
    }
    KatReport {
        outcomes,
        buggy_outcomes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_rejects_garbage() {
        assert!(parse_vectors("00 11 22").is_err());
        assert!(parse_vectors("[nope]\n").is_err());
        assert!(parse_vectors("[present80]\n00000000000000000000 00").is_err());
        assert!(parse_vectors("[present80]\n00 0000000000000000 0000000000000000").is_err());
    }

    #[test]
    fn bundled_fixture_has_every_correct_cipher() {
        let v = bundled_vectors();
        for kind in [
            BlockCipherKind::Present80,
            BlockCipherKind::Prince64,
            BlockCipherKind::Aes128,
        ] {
            assert!(v.iter().filter(|x| x.kind == kind).count() >= 2, "{kind}");
        }
    }

    #[test]
    fn suite_verdict() {
        let report = run(&bundled_vectors());
        assert!(report.correct_ciphers_pass());
        assert!(report.buggy_fails());
        assert!(report.ok());
    }

    #[test]
    fn encrypt_block_gates_buggy() {
        let key = CipherKey::new(BlockCipherKind::BuggyPresent80, vec![0; 10]).unwrap();
        assert!(encrypt_block(&key, 0, &BugCompat::NONE).is_err());
    }
}
