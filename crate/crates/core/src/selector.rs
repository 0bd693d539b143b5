// SPDX-License-Identifier: Apache-2.0
// Copyright The TASS Toolkit Authors

//! Density ranking and coverage-driven prefix selection.
//!
//! Given a seed full scan, every responsive partition prefix `i` gets a host
//! count `c_i`, a density `c_i / 2^(32 - len_i)` and a host share `c_i / N`.
//! Prefixes are ranked by density and the selection keeps the shortest
//! ranking prefix whose host share strictly exceeds the target `phi`. For
//! `phi = 1` that can never happen, so every responsive prefix is selected.
//!
//! All coverage comparisons are done on exact fractions.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use rayon::prelude::*;
use thiserror::Error;

use crate::ingest::ScanSnapshot;
use crate::partition::{PartitionMode, RoutedPartition};
use crate::prefix::Ipv4Prefix;

/// Exact non-negative fraction.
pub type Fraction = Ratio<u64>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SelectorError {
    #[error("no responsive prefixes")]
    NoResponsivePrefixes,
    #[error("invalid phi {0:?}: must be a decimal or fraction in (0, 1]")]
    InvalidPhi(String),
    #[error("total hosts {given} does not match the sum of host counts {summed}")]
    InconsistentTotal { given: u64, summed: u64 },
    #[error("{prefix} has {hosts} hosts but only {size} addresses")]
    CountExceedsSize {
        prefix: Ipv4Prefix,
        hosts: u64,
        size: u64,
    },
    #[error("{0} is not part of the partition")]
    NotInPartition(Ipv4Prefix),
    #[error("routed address space is empty")]
    EmptyRoutedSpace,
}

/// Target host coverage, an exact fraction in (0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Phi(Fraction);

impl Phi {
    pub const ONE: Phi = Phi(Ratio::new_raw(1, 1));

    pub fn new(numer: u64, denom: u64) -> Result<Self, SelectorError> {
        if numer == 0 || denom == 0 || numer > denom {
            return Err(SelectorError::InvalidPhi(format!("{numer}/{denom}")));
        }
        Ok(Phi(Ratio::new(numer, denom)))
    }

    pub fn as_fraction(&self) -> Fraction {
        self.0
    }

    pub fn is_one(&self) -> bool {
        self.0 == Ratio::from_integer(1)
    }

    pub fn to_f64(&self) -> f64 {
        *self.0.numer() as f64 / *self.0.denom() as f64
    }
}

impl FromStr for Phi {
    type Err = SelectorError;

    /// Accepts decimals (`0.95`, `1`, `.5`) and fractions (`19/20`).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let invalid = || SelectorError::InvalidPhi(s.to_string());
        let digits = |t: &str| !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit());
        if let Some((n, d)) = s.split_once('/') {
            if !digits(n) || !digits(d) {
                return Err(invalid());
            }
            let n = n.parse().map_err(|_| invalid())?;
            let d = d.parse().map_err(|_| invalid())?;
            return Phi::new(n, d).map_err(|_| invalid());
        }
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        if (int.is_empty() && frac.is_empty())
            || !(int.is_empty() || digits(int))
            || !(frac.is_empty() || digits(frac))
            || frac.len() > 18
        {
            return Err(invalid());
        }
        let denom = 10u64.pow(frac.len() as u32);
        let int: u64 = if int.is_empty() {
            0
        } else {
            int.parse().map_err(|_| invalid())?
        };
        let frac: u64 = if frac.is_empty() {
            0
        } else {
            frac.parse().map_err(|_| invalid())?
        };
        let numer = int
            .checked_mul(denom)
            .and_then(|v| v.checked_add(frac))
            .ok_or_else(invalid)?;
        Phi::new(numer, denom).map_err(|_| invalid())
    }
}

impl fmt::Display for Phi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::report::decimal_trimmed(self.0))
    }
}

/// Per-prefix host counts of one snapshot over one partition.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HostCounts {
    /// Responsive prefixes only.
    pub counts: BTreeMap<Ipv4Prefix, u64>,
    /// Snapshot addresses outside the routed space.
    pub unrouted: u64,
}

impl HostCounts {
    /// Hosts attributed to some partition prefix.
    pub fn routed(&self) -> u64 {
        self.counts.values().sum()
    }
}

const COUNT_CHUNK: usize = 1 << 16;

/// Attribute every snapshot address to its partition prefix.
///
/// Work is split over the current rayon pool; the result does not depend on
/// the number of workers.
pub fn count_hosts(partition: &RoutedPartition, snapshot: &ScanSnapshot) -> HostCounts {
    let per_chunk: Vec<(Vec<(usize, u64)>, u64)> = snapshot
        .addresses()
        .par_chunks(COUNT_CHUNK)
        .map(|chunk| {
            let mut runs: Vec<(usize, u64)> = Vec::new();
            let mut unrouted = 0;
            for &addr in chunk {
                match partition.index_of(addr) {
                    Some(idx) => match runs.last_mut() {
                        Some((last, n)) if *last == idx => *n += 1,
                        _ => runs.push((idx, 1)),
                    },
                    None => unrouted += 1,
                }
            }
            (runs, unrouted)
        })
        .collect();

    let mut out = HostCounts::default();
    for (runs, unrouted) in per_chunk {
        out.unrouted += unrouted;
        for (idx, n) in runs {
            *out.counts.entry(partition.prefixes()[idx]).or_default() += n;
        }
    }
    out
}

/// One responsive prefix with its host count, density and host share.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrefixDensityRecord {
    pub prefix: Ipv4Prefix,
    pub host_count: u64,
    /// `host_count / 2^(32 - len)`.
    pub density: Fraction,
    /// `host_count / N`.
    pub coverage_share: Fraction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensityStatus {
    Ok,
    /// The seed had no routed hosts; there is nothing to rank.
    EmptySeed,
}

/// Turn host counts into density records. Zero-count prefixes are dropped.
pub fn compute_densities(
    counts: &BTreeMap<Ipv4Prefix, u64>,
    total_hosts: u64,
) -> Result<(Vec<PrefixDensityRecord>, DensityStatus), SelectorError> {
    let summed: u64 = counts.values().sum();
    if summed != total_hosts {
        return Err(SelectorError::InconsistentTotal {
            given: total_hosts,
            summed,
        });
    }
    if total_hosts == 0 {
        return Ok((Vec::new(), DensityStatus::EmptySeed));
    }
    let mut records = Vec::with_capacity(counts.len());
    for (&prefix, &host_count) in counts {
        if host_count == 0 {
            continue;
        }
        if host_count > prefix.size() {
            return Err(SelectorError::CountExceedsSize {
                prefix,
                hosts: host_count,
                size: prefix.size(),
            });
        }
        records.push(PrefixDensityRecord {
            prefix,
            host_count,
            density: Ratio::new(host_count, prefix.size()),
            coverage_share: Ratio::new(host_count, total_hosts),
        });
    }
    Ok((records, DensityStatus::Ok))
}

/// Density descending, then host count descending, then (network, length).
pub fn density_order(a: &PrefixDensityRecord, b: &PrefixDensityRecord) -> Ordering {
    b.density
        .cmp(&a.density)
        .then_with(|| b.host_count.cmp(&a.host_count))
        .then_with(|| a.prefix.cmp(&b.prefix))
}

pub fn rank_by_density(mut records: Vec<PrefixDensityRecord>) -> Vec<PrefixDensityRecord> {
    records.sort_by(density_order);
    records
}

/// The outcome of a coverage-driven selection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectionResult {
    pub phi_target: Phi,
    /// All responsive prefixes in density order.
    pub ranked: Vec<PrefixDensityRecord>,
    /// Number of ranked prefixes selected.
    pub k: usize,
    /// N, the routed hosts of the seed scan.
    pub total_hosts: u64,
    /// Hosts inside the selected prefixes.
    pub selected_hosts: u64,
    /// Addresses inside the selected prefixes.
    pub selected_addresses: u64,
    /// Addresses in the whole partition.
    pub routed_total: u64,
    pub seed_snapshot_id: String,
    pub partition_mode: PartitionMode,
    pub partition_id: String,
}

impl SelectionResult {
    /// The first `k` ranked prefixes, in rank order.
    pub fn selected(&self) -> &[PrefixDensityRecord] {
        &self.ranked[..self.k]
    }

    pub fn selected_prefixes(&self) -> Vec<Ipv4Prefix> {
        self.selected().iter().map(|r| r.prefix).collect()
    }

    /// Selected prefixes sorted by network then length, as a scanner
    /// allowlist expects.
    pub fn target_list(&self) -> Vec<Ipv4Prefix> {
        let mut targets = self.selected_prefixes();
        targets.sort_unstable();
        targets
    }

    /// Share of seed hosts inside the selection.
    pub fn cum_host_coverage(&self) -> Fraction {
        Ratio::new(self.selected_hosts, self.total_hosts)
    }

    /// Share of the routed address space inside the selection.
    pub fn cum_address_coverage(&self) -> Fraction {
        Ratio::new(self.selected_addresses, self.routed_total)
    }
}

/// Smallest `k` with `sum(c_1..c_k) / N > phi`, or every prefix for `phi = 1`.
pub fn select_prefixes(
    ranked: Vec<PrefixDensityRecord>,
    phi_target: Phi,
    partition: &RoutedPartition,
) -> Result<SelectionResult, SelectorError> {
    if ranked.is_empty() {
        return Err(SelectorError::NoResponsivePrefixes);
    }
    if partition.total_addresses() == 0 {
        return Err(SelectorError::EmptyRoutedSpace);
    }
    if let Some(r) = ranked
        .iter()
        .find(|r| partition.position(&r.prefix).is_none())
    {
        return Err(SelectorError::NotInPartition(r.prefix));
    }
    let total_hosts: u64 = ranked.iter().map(|r| r.host_count).sum();
    let phi = phi_target.as_fraction();
    let (p, q) = (u128::from(*phi.numer()), u128::from(*phi.denom()));

    let k = if phi_target.is_one() {
        ranked.len()
    } else {
        let mut hosts = 0u128;
        let mut k = ranked.len();
        for (i, r) in ranked.iter().enumerate() {
            hosts += u128::from(r.host_count);
            if hosts * q > p * u128::from(total_hosts) {
                k = i + 1;
                break;
            }
        }
        k
    };

    let selected_hosts = ranked[..k].iter().map(|r| r.host_count).sum();
    let selected_addresses = ranked[..k].iter().map(|r| r.prefix.size()).sum();
    Ok(SelectionResult {
        phi_target,
        ranked,
        k,
        total_hosts,
        selected_hosts,
        selected_addresses,
        routed_total: partition.total_addresses(),
        seed_snapshot_id: String::new(),
        partition_mode: partition.mode(),
        partition_id: partition.id().to_string(),
    })
}

/// Selected address count over `routed_total`.
pub fn address_space_coverage(
    selection: &SelectionResult,
    routed_total: u64,
) -> Result<Fraction, SelectorError> {
    if routed_total == 0 {
        return Err(SelectorError::EmptyRoutedSpace);
    }
    Ok(Ratio::new(selection.selected_addresses, routed_total))
}

/// Seed-scan bookkeeping that accompanies a selection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedSummary {
    pub snapshot_size: usize,
    pub routed_hosts: u64,
    pub unrouted: u64,
    pub responsive_prefixes: usize,
    pub partition_prefixes: usize,
}

/// Run count, density, rank and select for one seed snapshot.
pub fn select_from_snapshot(
    partition: &RoutedPartition,
    seed: &ScanSnapshot,
    phi_target: Phi,
) -> Result<(SelectionResult, SeedSummary), SelectorError> {
    let counts = count_hosts(partition, seed);
    let routed = counts.routed();
    let (records, _) = compute_densities(&counts.counts, routed)?;
    let summary = SeedSummary {
        snapshot_size: seed.len(),
        routed_hosts: routed,
        unrouted: counts.unrouted,
        responsive_prefixes: records.len(),
        partition_prefixes: partition.len(),
    };
    let mut selection = select_prefixes(rank_by_density(records), phi_target, partition)?;
    selection.seed_snapshot_id = seed.source_id.clone();
    Ok((selection, summary))
}

/// One row of the ranking statistics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StatRow {
    /// 1-based rank.
    pub rank: usize,
    pub prefix: Ipv4Prefix,
    pub host_count: u64,
    pub density: Fraction,
    pub cum_host_coverage: Fraction,
    pub cum_addr_coverage: Fraction,
}

/// Density, cumulative host coverage and cumulative address coverage for
/// every ranked prefix.
pub fn emit_statistics(selection: &SelectionResult) -> Vec<StatRow> {
    let mut hosts = 0u64;
    let mut addrs = 0u64;
    selection
        .ranked
        .iter()
        .enumerate()
        .map(|(i, r)| {
            hosts += r.host_count;
            addrs += r.prefix.size();
            StatRow {
                rank: i + 1,
                prefix: r.prefix,
                host_count: r.host_count,
                density: r.density,
                cum_host_coverage: Ratio::new(hosts, selection.total_hosts),
                cum_addr_coverage: Ratio::new(addrs, selection.routed_total),
            }
        })
        .collect()
}
