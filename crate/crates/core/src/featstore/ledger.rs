//! Per-link byte and message counters.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::graph::partition::ServerId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    Feature,
    Model,
    Gradient,
    Intermediate,
    Topology,
}

impl Category {
    pub const ALL: [Category; 5] = [
        Category::Feature,
        Category::Model,
        Category::Gradient,
        Category::Intermediate,
        Category::Topology,
    ];
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Category::Feature => "feature",
            Category::Model => "model",
            Category::Gradient => "gradient",
            Category::Intermediate => "intermediate",
            Category::Topology => "topology",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LinkCounter {
    pub bytes: u64,
    pub messages: u64,
}

/// One message as it was recorded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Transfer {
    pub src: ServerId,
    pub dst: ServerId,
    pub category: Category,
    pub bytes: u64,
}

/// Feature-row accesses at one server, split by where the row lives.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct HitCount {
    pub local: u64,
    pub remote: u64,
}

/// Counters only grow. Merging is addition, so ledgers filled concurrently
/// combine to the same counters in any order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CommLedger {
    counters: BTreeMap<(ServerId, ServerId, Category), LinkCounter>,
    hits: BTreeMap<ServerId, HitCount>,
    events: Vec<Transfer>,
}

impl CommLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records one message. Messages to self are not traffic and are ignored.
    pub fn record(&mut self, src: ServerId, dst: ServerId, category: Category, bytes: u64) {
        if src == dst {
            return;
        }
        let c = self.counters.entry((src, dst, category)).or_default();
        c.bytes += bytes;
        c.messages += 1;
        self.events.push(Transfer {
            src,
            dst,
            category,
            bytes,
        });
    }

    pub fn record_hits(&mut self, at: ServerId, local: u64, remote: u64) {
        let h = self.hits.entry(at).or_default();
        h.local += local;
        h.remote += remote;
    }

    pub fn merge(&mut self, other: &CommLedger) {
        for (k, c) in &other.counters {
            let mine = self.counters.entry(*k).or_default();
            mine.bytes += c.bytes;
            mine.messages += c.messages;
        }
        for (s, h) in &other.hits {
            self.record_hits(*s, h.local, h.remote);
        }
        self.events.extend_from_slice(&other.events);
    }

    pub fn link(&self, src: ServerId, dst: ServerId, category: Category) -> LinkCounter {
        self.counters
            .get(&(src, dst, category))
            .copied()
            .unwrap_or_default()
    }

    pub fn links(&self) -> impl Iterator<Item = (&(ServerId, ServerId, Category), &LinkCounter)> {
        self.counters.iter()
    }

    pub fn category_bytes(&self, category: Category) -> u64 {
        self.counters
            .iter()
            .filter(|(k, _)| k.2 == category)
            .map(|(_, c)| c.bytes)
            .sum()
    }

    pub fn category_messages(&self, category: Category) -> u64 {
        self.counters
            .iter()
            .filter(|(k, _)| k.2 == category)
            .map(|(_, c)| c.messages)
            .sum()
    }

    pub fn total_bytes(&self) -> u64 {
        self.counters.values().map(|c| c.bytes).sum()
    }

    pub fn total_messages(&self) -> u64 {
        self.counters.values().map(|c| c.messages).sum()
    }

    pub fn events(&self) -> &[Transfer] {
        &self.events
    }

    pub fn hits(&self) -> HitCount {
        self.hits.values().fold(HitCount::default(), |acc, h| HitCount {
            local: acc.local + h.local,
            remote: acc.remote + h.remote,
        })
    }

    /// Remote row accesses over all row accesses; 0 when nothing was read.
    pub fn miss_rate(&self) -> f64 {
        let h = self.hits();
        let total = h.local + h.remote;
        if total == 0 {
            0.0
        } else {
            h.remote as f64 / total as f64
        }
    }

    /// Bytes and messages received by `dst`, all categories.
    pub fn inbound(&self, dst: ServerId) -> LinkCounter {
        self.counters
            .iter()
            .filter(|(k, _)| k.1 == dst)
            .fold(LinkCounter::default(), |acc, (_, c)| LinkCounter {
                bytes: acc.bytes + c.bytes,
                messages: acc.messages + c.messages,
            })
    }

    /// Same counters and hit counts, ignoring event order.
    pub fn same_totals(&self, other: &CommLedger) -> bool {
        self.counters == other.counters && self.hits == other.hits
    }
}
