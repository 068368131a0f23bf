use crate::bugcompat::BugCompat;
use crate::ciphers::{
    Aes128, BlockCipherKind, BuggyPresent80, CipherKey, IndexCipher, Present80, Prince64,
};
use crate::error::{Error, Result};

type Constructor = fn(&CipherKey) -> Box<dyn IndexCipher>;

pub struct CipherEntry {
    pub kind: BlockCipherKind,
    pub name: &'static str,
    pub aliases: &'static [&'static str],
    /// Entries marked here refuse to build unless `buggy-present` is set.
    pub bug_compat_only: bool,
    construct: Constructor,
}

impl CipherEntry {
    pub fn new(
        kind: BlockCipherKind,
        aliases: &'static [&'static str],
        bug_compat_only: bool,
        construct: Constructor,
    ) -> Self {
        CipherEntry {
            kind,
            name: kind.name(),
            aliases,
            bug_compat_only,
            construct,
        }
    }

    fn matches(&self, name: &str) -> bool {
        let name = name.to_ascii_lowercase();
        self.name == name || self.aliases.contains(&name.as_str())
    }
}

/// Name-indexed table of index-cipher backends.
pub struct CipherRegistry {
    entries: Vec<CipherEntry>,
}

impl CipherRegistry {
    pub fn empty() -> Self {
        CipherRegistry {
            entries: Vec::new(),
        }
    }

    pub fn standard() -> Self {
        let mut reg = CipherRegistry::empty();
        reg.register(CipherEntry::new(
            BlockCipherKind::Present80,
            &["present", "present-80"],
            false,
            |k| Box::new(Present80::new(&k.array())),
        ));
        reg.register(CipherEntry::new(
            BlockCipherKind::Prince64,
            &["prince", "prince-64"],
            false,
            |k| Box::new(Prince64::new(&k.array())),
        ));
        reg.register(CipherEntry::new(
            BlockCipherKind::Aes128,
            &["aes", "aes-128"],
            false,
            |k| Box::new(Aes128::new(&k.array())),
        ));
        reg.register(CipherEntry::new(
            BlockCipherKind::BuggyPresent80,
            &["buggy-present", "buggy-present-80"],
            true,
            |k| Box::new(BuggyPresent80::new(&k.array())),
        ));
        reg
    }

    /// Later registrations for the same kind replace earlier ones.
    pub fn register(&mut self, entry: CipherEntry) {
        self.entries.retain(|e| e.kind != entry.kind);
        self.entries.push(entry);
    }

    pub fn lookup(&self, name: &str) -> Option<&CipherEntry> {
        self.entries.iter().find(|e| e.matches(name))
    }

    pub fn entry(&self, kind: BlockCipherKind) -> Option<&CipherEntry> {
        self.entries.iter().find(|e| e.kind == kind)
    }

    pub fn entries(&self) -> impl Iterator<Item = &CipherEntry> {
        self.entries.iter()
    }

    pub fn build(&self, key: &CipherKey, bug_compat: &BugCompat) -> Result<Box<dyn IndexCipher>> {
        let entry = self
            .entry(key.kind())
            .ok_or_else(|| Error::UnknownCipher(key.kind().name().to_owned()))?;
        if entry.bug_compat_only && !bug_compat.buggy_present {
            return Err(Error::BugCompatRequired(entry.name));
        }
        Ok((entry.construct)(key))
    }
}

impl Default for CipherRegistry {
    fn default() -> Self {
        CipherRegistry::standard()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup_by_name_and_alias() {
        let reg = CipherRegistry::standard();
        assert_eq!(reg.lookup("AES").unwrap().kind, BlockCipherKind::Aes128);
        assert_eq!(
            reg.lookup("prince64").unwrap().kind,
            BlockCipherKind::Prince64
        );
        assert!(reg.lookup("rc4").is_none());
        assert_eq!(reg.entries().count(), 4);
    }

    #[test]
    fn buggy_cipher_needs_flag() {
        let reg = CipherRegistry::standard();
        let key = CipherKey::new(BlockCipherKind::BuggyPresent80, vec![0; 10]).unwrap();
        assert!(matches!(
            reg.build(&key, &BugCompat::NONE),
            Err(Error::BugCompatRequired(_))
        ));
        let flags = BugCompat {
            buggy_present: true,
            ..BugCompat::NONE
        };
        let cipher = reg.build(&key, &flags).unwrap();
        assert_eq!(cipher.kind(), BlockCipherKind::BuggyPresent80);
    }

    #[test]
    fn register_replaces_same_kind() {
        let mut reg = CipherRegistry::standard();
        reg.register(CipherEntry::new(
            BlockCipherKind::Aes128,
            &["fake"],
            false,
            |k| Box::new(Present80::new(&k.bytes()[..10].try_into().unwrap())),
        ));
        assert_eq!(reg.entries().count(), 4);
        assert!(reg.lookup("fake").is_some());
        assert!(reg.lookup("aes").is_none());
    }
}
