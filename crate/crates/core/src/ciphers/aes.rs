use aes::cipher::{BlockDecrypt, BlockEncrypt, KeyInit};
use aes::Aes128 as AesImpl;

use crate::ciphers::{BlockCipherKind, IndexCipher};

pub const KEY_BYTES: usize = 16;

/// AES-128 over the RustCrypto `aes` backend. Blocks are big-endian `u128`s.
#[derive(Clone)]
pub struct Aes128 {
    inner: AesImpl,
}

impl Aes128 {
    pub fn new(key: &[u8; KEY_BYTES]) -> Self {
        Aes128 {
            inner: AesImpl::new(key.into()),
        }
    }

    pub fn encrypt_block(&self, block: u128) -> u128 {
        let mut buf = block.to_be_bytes().into();
        self.inner.encrypt_block(&mut buf);
        u128::from_be_bytes(buf.into())
    }

    pub fn decrypt_block(&self, block: u128) -> u128 {
        let mut buf = block.to_be_bytes().into();
        self.inner.decrypt_block(&mut buf);
        u128::from_be_bytes(buf.into())
    }
}

impl std::fmt::Debug for Aes128 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Aes128").finish_non_exhaustive()
    }
}

impl IndexCipher for Aes128 {
    fn kind(&self) -> BlockCipherKind {
        BlockCipherKind::Aes128
    }

    /// The address occupies the low 64 bits of an otherwise zero block;
    /// the low 64 bits of the ciphertext are returned.
    fn encrypt_address(&self, address: u64) -> u64 {
        self.encrypt_block(u128::from(address)) as u64
    }
}
