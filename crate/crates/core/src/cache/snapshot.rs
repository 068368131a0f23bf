//! JSON state dump for debugging.
//!
//! Version 1 layout:
//! ```text
//! { "format_version": 1,
//!   "config": { ...CacheConfig... },
//!   "data_occupancy": n,
//!   "tags": [ { "skew", "set", "way", "tag", "fptr" }, ... ],   // valid tags only
//!   "data": [ { "index", "rptr": { "skew", "set", "way" } }, ... ] }  // occupied lines only
//! ```

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{CacheConfig, MirageCache, TagSlot};
use crate::error::Result;

pub const SNAPSHOT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TagRecord {
    pub skew: u8,
    pub set: u32,
    pub way: u8,
    pub tag: u64,
    pub fptr: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataRecord {
    pub index: u32,
    pub rptr: TagSlot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheSnapshot {
    pub format_version: u32,
    pub config: CacheConfig,
    pub data_occupancy: usize,
    pub tags: Vec<TagRecord>,
    pub data: Vec<DataRecord>,
}

impl CacheSnapshot {
    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer(out, self)?;
        Ok(())
    }
}

impl MirageCache {
    pub fn snapshot(&self) -> CacheSnapshot {
        let tags = self
            .tags
            .iter()
            .enumerate()
            .filter(|(_, t)| t.valid)
            .map(|(flat, t)| {
                let slot = self.slot_of(flat);
                TagRecord {
                    skew: slot.skew,
                    set: slot.set,
                    way: slot.way,
                    tag: t.tag,
                    fptr: t.fptr,
                }
            })
            .collect();
        let data = self
            .data
            .iter()
            .enumerate()
            .filter_map(|(i, d)| {
                d.rptr.map(|rptr| DataRecord {
                    index: i as u32,
                    rptr,
                })
            })
            .collect();
        CacheSnapshot {
            format_version: SNAPSHOT_FORMAT_VERSION,
            config: self.config.clone(),
            data_occupancy: self.occupied.len(),
            tags,
            data,
        }
    }
}
