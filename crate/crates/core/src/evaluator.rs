// SPDX-License-Identifier: Apache-2.0
// Copyright The TASS Toolkit Authors

//! Replay later full scans against a frozen seed-time plan.
//!
//! Two strategies are compared with what a full scan finds:
//!
//! * hitlist: rescan exactly the addresses responsive in the seed scan;
//! * TASS: rescan the prefixes selected at seed time.
//!
//! The ground truth for a later snapshot is every address in it, including
//! addresses outside the seed-time routed space.

use std::collections::HashSet;
use std::fmt;

use num_rational::Ratio;
use rayon::prelude::*;
use thiserror::Error;

use crate::ingest::ScanSnapshot;
use crate::partition::{PartitionMode, RoutedPartition};
use crate::selector::{Fraction, Phi, SelectionResult};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvaluatorError {
    #[error("no later snapshots to evaluate")]
    NoSnapshots,
    #[error("snapshot {id} has protocol {found:?}, expected {expected:?}")]
    ProtocolMismatch {
        id: String,
        expected: String,
        found: String,
    },
    #[error("snapshot {id} ({at}) is older than the snapshot before it")]
    OutOfOrder { id: String, at: String },
    #[error("selection was built from partition {selection}, not {partition}")]
    PartitionMismatch {
        selection: String,
        partition: String,
    },
    #[error("series cover different snapshots")]
    SnapshotMismatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    Hitlist,
    Tass,
}

impl Strategy {
    pub fn as_str(&self) -> &'static str {
        match self {
            Strategy::Hitlist => "hitlist",
            Strategy::Tass => "tass",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HitratePoint {
    pub snapshot_id: String,
    pub snapshot_time: String,
    pub ground_truth_hosts: u64,
    pub covered_hosts: u64,
}

impl HitratePoint {
    /// `covered / ground_truth`, or `None` for an empty snapshot.
    pub fn hitrate(&self) -> Option<Fraction> {
        (self.ground_truth_hosts > 0)
            .then(|| Ratio::new(self.covered_hosts, self.ground_truth_hosts))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HitrateSeries {
    pub strategy: Strategy,
    /// TASS only.
    pub phi_target: Option<Phi>,
    /// TASS only.
    pub partition_mode: Option<PartitionMode>,
    pub points: Vec<HitratePoint>,
}

fn check_sequence(protocol: &str, later: &[ScanSnapshot]) -> Result<(), EvaluatorError> {
    if later.is_empty() {
        return Err(EvaluatorError::NoSnapshots);
    }
    for s in later {
        if s.protocol != protocol {
            return Err(EvaluatorError::ProtocolMismatch {
                id: s.source_id.clone(),
                expected: protocol.to_string(),
                found: s.protocol.clone(),
            });
        }
    }
    for pair in later.windows(2) {
        if pair[1].captured_at < pair[0].captured_at {
            return Err(EvaluatorError::OutOfOrder {
                id: pair[1].source_id.clone(),
                at: pair[1].captured_at.clone(),
            });
        }
    }
    Ok(())
}

fn point(snapshot: &ScanSnapshot, covered: u64) -> HitratePoint {
    HitratePoint {
        snapshot_id: snapshot.source_id.clone(),
        snapshot_time: snapshot.captured_at.clone(),
        ground_truth_hosts: snapshot.len() as u64,
        covered_hosts: covered,
    }
}

/// Size of the intersection of two sorted, duplicate-free slices.
fn intersection_len(a: &[u32], b: &[u32]) -> u64 {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// Hitrate of rescanning exactly the seed's responsive addresses.
pub fn simulate_hitlist(
    seed: &ScanSnapshot,
    later: &[ScanSnapshot],
) -> Result<HitrateSeries, EvaluatorError> {
    check_sequence(&seed.protocol, later)?;
    let points = later
        .par_iter()
        .map(|s| point(s, intersection_len(seed.addresses(), s.addresses())))
        .collect();
    Ok(HitrateSeries {
        strategy: Strategy::Hitlist,
        phi_target: None,
        partition_mode: None,
        points,
    })
}

/// Hitrate of rescanning the prefixes selected at seed time.
///
/// The selection stays frozen across all later snapshots.
pub fn simulate_tass(
    selection: &SelectionResult,
    partition: &RoutedPartition,
    later: &[ScanSnapshot],
) -> Result<HitrateSeries, EvaluatorError> {
    if selection.partition_id != partition.id() {
        return Err(EvaluatorError::PartitionMismatch {
            selection: selection.partition_id.clone(),
            partition: partition.id().to_string(),
        });
    }
    let protocol = &later.first().ok_or(EvaluatorError::NoSnapshots)?.protocol;
    check_sequence(protocol, later)?;

    let mut selected = vec![false; partition.len()];
    for r in selection.selected() {
        // select_prefixes guarantees membership.
        if let Some(i) = partition.position(&r.prefix) {
            selected[i] = true;
        }
    }
    let points = later
        .par_iter()
        .map(|s| {
            let covered = s
                .addresses()
                .iter()
                .filter(|&&a| partition.index_of(a).is_some_and(|i| selected[i]))
                .count();
            point(s, covered as u64)
        })
        .collect();
    Ok(HitrateSeries {
        strategy: Strategy::Tass,
        phi_target: Some(selection.phi_target),
        partition_mode: Some(selection.partition_mode),
        points,
    })
}

/// Check that later snapshots match the seed protocol and are time ordered.
pub fn check_same_protocol(
    seed: &ScanSnapshot,
    later: &[ScanSnapshot],
) -> Result<(), EvaluatorError> {
    check_sequence(&seed.protocol, later)
}

/// Host counts per prefix length: index 0..=24 for /0../24, then /25 and
/// longer together.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrefixLengthHistogram {
    pub snapshot_id: String,
    pub by_length: [u64; 25],
    pub ge25: u64,
    pub unrouted: u64,
}

impl PrefixLengthHistogram {
    pub fn routed(&self) -> u64 {
        self.by_length.iter().sum::<u64>() + self.ge25
    }
}

pub fn prefix_length_histogram(
    partition: &RoutedPartition,
    snapshot: &ScanSnapshot,
) -> PrefixLengthHistogram {
    let mut hist = PrefixLengthHistogram {
        snapshot_id: snapshot.source_id.clone(),
        by_length: [0; 25],
        ge25: 0,
        unrouted: 0,
    };
    for &addr in snapshot.addresses() {
        match partition
            .longest_match(addr)
            .map(|p| usize::from(p.length()))
        {
            Some(len) if len <= 24 => hist.by_length[len] += 1,
            Some(_) => hist.ge25 += 1,
            None => hist.unrouted += 1,
        }
    }
    hist
}

/// Per-snapshot hitrate difference between two series.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeltaRow {
    pub snapshot_id: String,
    pub snapshot_time: String,
    pub hitrate_a: Option<Fraction>,
    pub hitrate_b: Option<Fraction>,
}

impl DeltaRow {
    /// `a - b` as an exact signed fraction: (negative, magnitude).
    pub fn delta(&self) -> Option<(bool, Ratio<u128>)> {
        let (a, b) = (self.hitrate_a?, self.hitrate_b?);
        let widen = |r: Fraction| Ratio::new(u128::from(*r.numer()), u128::from(*r.denom()));
        let (a, b) = (widen(a), widen(b));
        Some(if a >= b {
            (false, a - b)
        } else {
            (true, b - a)
        })
    }

    pub fn delta_f64(&self) -> Option<f64> {
        self.delta().map(|(neg, m)| {
            let v = *m.numer() as f64 / *m.denom() as f64;
            if neg {
                -v
            } else {
                v
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeltaReport {
    pub strategy_a: Strategy,
    pub strategy_b: Strategy,
    pub rows: Vec<DeltaRow>,
}

pub fn compare_series(a: &HitrateSeries, b: &HitrateSeries) -> Result<DeltaReport, EvaluatorError> {
    let ids = |s: &HitrateSeries| {
        s.points
            .iter()
            .map(|p| p.snapshot_id.clone())
            .collect::<Vec<_>>()
    };
    let (ia, ib) = (ids(a), ids(b));
    let same_set = ia.iter().collect::<HashSet<_>>() == ib.iter().collect::<HashSet<_>>();
    if ia.len() != ib.len() || !same_set {
        return Err(EvaluatorError::SnapshotMismatch);
    }
    let rows = a
        .points
        .iter()
        .map(|pa| {
            let pb = b
                .points
                .iter()
                .find(|pb| pb.snapshot_id == pa.snapshot_id)
                .expect("ids checked above");
            DeltaRow {
                snapshot_id: pa.snapshot_id.clone(),
                snapshot_time: pa.snapshot_time.clone(),
                hitrate_a: pa.hitrate(),
                hitrate_b: pb.hitrate(),
            }
        })
        .collect();
    Ok(DeltaReport {
        strategy_a: a.strategy,
        strategy_b: b.strategy,
        rows,
    })
}
