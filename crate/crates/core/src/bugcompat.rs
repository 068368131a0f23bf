//! Opt-in switches that re-create known modeling defects.
//!
//! Every defect is off by default. Code paths that implement a defect check
//! the corresponding flag and refuse to run without it.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BugCompatFlag {
    /// Data store fills without global evictions; exhaustion is an assertion failure.
    NoGlobalEvict,
    /// Tag store starts with every tag independently valid with probability p.
    BernoulliInit,
    /// Set indices derived with the defective PRESENT implementation.
    BuggyPresent,
}

impl BugCompatFlag {
    pub const ALL: [BugCompatFlag; 3] = [
        BugCompatFlag::NoGlobalEvict,
        BugCompatFlag::BernoulliInit,
        BugCompatFlag::BuggyPresent,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BugCompatFlag::NoGlobalEvict => "no-global-evict",
            BugCompatFlag::BernoulliInit => "bernoulli-init",
            BugCompatFlag::BuggyPresent => "buggy-present",
        }
    }
}

impl fmt::Display for BugCompatFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BugCompatFlag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BugCompatFlag::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::config(format!("unknown bug-compat flag `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BugCompat {
    pub no_global_evict: bool,
    pub bernoulli_init: bool,
    pub buggy_present: bool,
}

impl BugCompat {
    pub const NONE: BugCompat = BugCompat {
        no_global_evict: false,
        bernoulli_init: false,
        buggy_present: false,
    };

    pub const ALL: BugCompat = BugCompat {
        no_global_evict: true,
        bernoulli_init: true,
        buggy_present: true,
    };

    pub fn from_flags<I: IntoIterator<Item = BugCompatFlag>>(flags: I) -> Self {
        let mut out = BugCompat::NONE;
        for flag in flags {
            out.set(flag);
        }
        out
    }

    pub fn set(&mut self, flag: BugCompatFlag) {
        match flag {
            BugCompatFlag::NoGlobalEvict => self.no_global_evict = true,
            BugCompatFlag::BernoulliInit => self.bernoulli_init = true,
            BugCompatFlag::BuggyPresent => self.buggy_present = true,
        }
    }

    pub fn contains(&self, flag: BugCompatFlag) -> bool {
        match flag {
            BugCompatFlag::NoGlobalEvict => self.no_global_evict,
            BugCompatFlag::BernoulliInit => self.bernoulli_init,
            BugCompatFlag::BuggyPresent => self.buggy_present,
        }
    }

    pub fn any(&self) -> bool {
        self.no_global_evict || self.bernoulli_init || self.buggy_present
    }

    pub fn flags(&self) -> Vec<BugCompatFlag> {
        BugCompatFlag::ALL
            .into_iter()
            .filter(|f| self.contains(*f))
            .collect()
    }
}
