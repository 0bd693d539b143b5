// SPDX-License-Identifier: Apache-2.0
// Copyright The TASS Toolkit Authors

//! Announced prefix tables and the disjoint routed partitions built from them.
//!
//! A BGP table mixes less specific prefixes with more specific prefixes
//! announced inside them. Scanning needs a proper partition of the address
//! space, so nested announcements are resolved in one of two ways:
//!
//! * [`PartitionMode::LessSpecific`] keeps only the maximal prefixes.
//! * [`PartitionMode::MoreSpecific`] keeps every innermost announcement and
//!   splits each enclosing prefix into the fewest CIDR blocks that cover the
//!   rest of it.
//!
//! ```text
//! announced: 100.0.0.0/8, 100.0.0.0/12
//!
//!   more specific:  100.0.0.0/12  100.16.0.0/12  100.32.0.0/11
//!                   100.64.0.0/10 100.128.0.0/9
//!   less specific:  100.0.0.0/8
//! ```
//!
//! Splitting walks the implicit binary trie below the enclosing prefix and
//! bisects only those nodes that still have an announcement strictly inside
//! them. Every emitted node is therefore either an innermost announcement or
//! a maximal announcement-free block, which is what makes the cover minimal.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::prefix::Ipv4Prefix;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PartitionError {
    #[error("{inner} is not strictly contained in {outer}")]
    NotContained {
        outer: Ipv4Prefix,
        inner: Ipv4Prefix,
    },
    #[error("{0} listed more than once")]
    Duplicate(Ipv4Prefix),
    #[error("partition prefixes {0} and {1} overlap")]
    Overlap(Ipv4Prefix, Ipv4Prefix),
    #[error("unknown partition mode {0:?}: expected less or more")]
    UnknownMode(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PartitionMode {
    #[serde(rename = "less")]
    LessSpecific,
    #[serde(rename = "more")]
    MoreSpecific,
}

impl PartitionMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            PartitionMode::LessSpecific => "less",
            PartitionMode::MoreSpecific => "more",
        }
    }
}

impl fmt::Display for PartitionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PartitionMode {
    type Err = PartitionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "less" | "less-specific" | "l" => Ok(PartitionMode::LessSpecific),
            "more" | "more-specific" | "m" => Ok(PartitionMode::MoreSpecific),
            other => Err(PartitionError::UnknownMode(other.to_string())),
        }
    }
}

/// Announced prefixes keyed by prefix, each with the union of its origin ASes.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AnnouncedPrefixTable {
    entries: BTreeMap<Ipv4Prefix, BTreeSet<String>>,
}

impl AnnouncedPrefixTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Add an announcement. Returns `false` when the prefix was already
    /// present, in which case the origin sets are merged.
    pub fn insert<I, S>(&mut self, prefix: Ipv4Prefix, origins: I) -> bool
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let fresh = !self.entries.contains_key(&prefix);
        self.entries
            .entry(prefix)
            .or_default()
            .extend(origins.into_iter().map(Into::into));
        fresh
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn origins(&self, prefix: &Ipv4Prefix) -> Option<&BTreeSet<String>> {
        self.entries.get(prefix)
    }

    /// Entries in (network, length) order.
    pub fn iter(&self) -> impl Iterator<Item = (&Ipv4Prefix, &BTreeSet<String>)> {
        self.entries.iter()
    }

    pub fn prefixes(&self) -> impl Iterator<Item = &Ipv4Prefix> {
        self.entries.keys()
    }

    /// Nesting statistics: how many announcements sit inside another one and
    /// how much address space they account for.
    pub fn summary(&self) -> TableSummary {
        let sorted: Vec<Ipv4Prefix> = self.entries.keys().copied().collect();
        let mut summary = TableSummary {
            announced: sorted.len(),
            ..TableSummary::default()
        };
        for_each_root(&sorted, |root, nested| {
            summary.maximal += 1;
            summary.announced_addresses += root.size();
            summary.more_specific += nested.len();
            for_each_root(nested, |child, _| {
                summary.more_specific_addresses += child.size();
            });
        });
        summary
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct TableSummary {
    /// Distinct announced prefixes.
    pub announced: usize,
    /// Announced prefixes not contained in any other announcement.
    pub maximal: usize,
    /// Announced prefixes contained in some other announcement.
    pub more_specific: usize,
    /// Addresses covered by the announced space.
    pub announced_addresses: u64,
    /// Addresses covered by at least one more specific announcement.
    pub more_specific_addresses: u64,
}

/// Calls `f(root, nested)` for every maximal prefix in a (network, length)
/// sorted, duplicate-free slice, where `nested` are the prefixes inside it.
fn for_each_root<F>(sorted: &[Ipv4Prefix], mut f: F)
where
    F: FnMut(Ipv4Prefix, &[Ipv4Prefix]),
{
    let mut i = 0;
    while i < sorted.len() {
        let root = sorted[i];
        let end = i + 1 + sorted[i + 1..].partition_point(|p| root.contains(p));
        f(root, &sorted[i + 1..end]);
        i = end;
    }
}

/// Emit the minimal disjoint cover of `node` that keeps every innermost
/// prefix of `inner` intact. `inner` must be sorted and lie within `node`.
fn split_around(node: Ipv4Prefix, inner: &[Ipv4Prefix], out: &mut Vec<Ipv4Prefix>) {
    // A prefix equal to `node` sorts first; it has nothing left to split.
    let inner = match inner.first() {
        Some(first) if first.length() <= node.length() => &inner[1..],
        _ => inner,
    };
    let Some((lo, hi)) = node.split().filter(|_| !inner.is_empty()) else {
        out.push(node);
        return;
    };
    let cut = inner.partition_point(|p| p.network() < hi.network());
    split_around(lo, &inner[..cut], out);
    split_around(hi, &inner[cut..], out);
}

/// Decompose `l_prefix` around the more specific prefixes inside it.
///
/// The result is disjoint, covers `l_prefix` exactly, keeps every innermost
/// m-prefix verbatim and covers the remainder with the fewest CIDR blocks.
/// M-prefixes that themselves contain other m-prefixes are decomposed in turn.
pub fn deaggregate(
    l_prefix: Ipv4Prefix,
    m_prefixes: &[Ipv4Prefix],
) -> Result<Vec<Ipv4Prefix>, PartitionError> {
    let mut sorted = m_prefixes.to_vec();
    sorted.sort_unstable();
    for pair in sorted.windows(2) {
        if pair[0] == pair[1] {
            return Err(PartitionError::Duplicate(pair[0]));
        }
    }
    if let Some(bad) = sorted.iter().find(|m| !l_prefix.strictly_contains(m)) {
        return Err(PartitionError::NotContained {
            outer: l_prefix,
            inner: *bad,
        });
    }
    let mut out = Vec::new();
    split_around(l_prefix, &sorted, &mut out);
    Ok(out)
}

/// A set of pairwise disjoint prefixes covering the announced space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoutedPartition {
    mode: PartitionMode,
    prefixes: Vec<Ipv4Prefix>,
    total_addresses: u64,
    id: String,
}

impl RoutedPartition {
    /// Wrap an already disjoint prefix set, e.g. one read back from disk.
    pub fn from_prefixes(
        mode: PartitionMode,
        mut prefixes: Vec<Ipv4Prefix>,
    ) -> Result<Self, PartitionError> {
        prefixes.sort_unstable();
        for pair in prefixes.windows(2) {
            if pair[0] == pair[1] {
                return Err(PartitionError::Duplicate(pair[0]));
            }
            if pair[0].last() >= pair[1].network() {
                return Err(PartitionError::Overlap(pair[0], pair[1]));
            }
        }
        Ok(Self::from_sorted_disjoint(mode, prefixes))
    }

    fn from_sorted_disjoint(mode: PartitionMode, prefixes: Vec<Ipv4Prefix>) -> Self {
        let total_addresses = prefixes.iter().map(Ipv4Prefix::size).sum();
        let id = partition_digest(&prefixes);
        RoutedPartition {
            mode,
            prefixes,
            total_addresses,
            id,
        }
    }

    pub fn mode(&self) -> PartitionMode {
        self.mode
    }

    /// Prefixes in ascending network order.
    pub fn prefixes(&self) -> &[Ipv4Prefix] {
        &self.prefixes
    }

    pub fn len(&self) -> usize {
        self.prefixes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prefixes.is_empty()
    }

    pub fn total_addresses(&self) -> u64 {
        self.total_addresses
    }

    /// Content digest of the prefix set; equal partitions share an id.
    pub fn id(&self) -> &str {
        &self.id
    }

    /// Position of the partition prefix holding `addr`.
    pub fn index_of(&self, addr: u32) -> Option<usize> {
        let idx = self.prefixes.partition_point(|p| p.network() <= addr);
        let candidate = idx.checked_sub(1)?;
        self.prefixes[candidate]
            .contains_addr(addr)
            .then_some(candidate)
    }

    /// The unique partition prefix containing `addr`, if it is routed.
    pub fn longest_match(&self, addr: u32) -> Option<Ipv4Prefix> {
        self.index_of(addr).map(|i| self.prefixes[i])
    }

    pub fn position(&self, prefix: &Ipv4Prefix) -> Option<usize> {
        self.prefixes.binary_search(prefix).ok()
    }
}

fn partition_digest(prefixes: &[Ipv4Prefix]) -> String {
    let mut hasher = Sha256::new();
    for p in prefixes {
        hasher.update(p.network().to_be_bytes());
        hasher.update([p.length()]);
    }
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Resolve nested announcements into a disjoint partition.
pub fn build_partition(table: &AnnouncedPrefixTable, mode: PartitionMode) -> RoutedPartition {
    let sorted: Vec<Ipv4Prefix> = table.prefixes().copied().collect();
    let mut out = Vec::with_capacity(sorted.len());
    for_each_root(&sorted, |root, nested| match mode {
        PartitionMode::LessSpecific => out.push(root),
        PartitionMode::MoreSpecific => split_around(root, nested, &mut out),
    });
    RoutedPartition::from_sorted_disjoint(mode, out)
}

/// Free-function form of [`RoutedPartition::longest_match`].
pub fn longest_match(partition: &RoutedPartition, address: u32) -> Option<Ipv4Prefix> {
    partition.longest_match(address)
}
