// SPDX-License-Identifier: Apache-2.0
// Copyright The TASS Toolkit Authors

//! Topology-aware scan target planning.
//!
//! Instead of rescanning the whole announced IPv4 space, scan it once, rank
//! the routed prefixes by how densely they are populated with responsive
//! hosts, and rescan only the densest prefixes that together hold a target
//! share of the hosts. This crate builds the pieces of that workflow:
//!
//! * [`partition`]: a disjoint prefix partition from a pfx2as table, in
//!   less specific or more specific mode;
//! * [`ingest`]: pfx2as and scan snapshot readers;
//! * [`selector`]: host counting, density ranking and coverage selection;
//! * [`evaluator`]: replay of later scans to measure how the selection and
//!   a plain address hitlist age;
//! * [`report`] and [`manifest`]: deterministic CSV output and run manifests.
//!
//! ```
//! use tass_core::partition::{build_partition, AnnouncedPrefixTable, PartitionMode};
//! use tass_core::ingest::ScanSnapshot;
//! use tass_core::selector::{select_from_snapshot, Phi};
//!
//! let mut table = AnnouncedPrefixTable::new();
//! table.insert("100.0.0.0/8".parse().unwrap(), ["64496"]);
//! table.insert("100.0.0.0/12".parse().unwrap(), ["64497"]);
//! let partition = build_partition(&table, PartitionMode::MoreSpecific);
//! assert_eq!(partition.len(), 5);
//!
//! let seed = ScanSnapshot::new("ftp", "2015-09-07", "seed", [0x6400_0001, 0x6480_0001]);
//! let (selection, _) = select_from_snapshot(&partition, &seed, Phi::ONE).unwrap();
//! assert_eq!(selection.k, 2);
//! ```

pub mod cli;
pub mod evaluator;
pub mod ingest;
pub mod manifest;
pub mod partition;
pub mod prefix;
pub mod report;
pub mod selector;

pub use evaluator::{HitrateSeries, PrefixLengthHistogram, Strategy};
pub use ingest::ScanSnapshot;
pub use partition::{AnnouncedPrefixTable, PartitionMode, RoutedPartition};
pub use prefix::Ipv4Prefix;
pub use selector::{Phi, PrefixDensityRecord, SelectionResult};
