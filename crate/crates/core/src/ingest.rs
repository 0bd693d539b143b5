// SPDX-License-Identifier: Apache-2.0
// Copyright The TASS Toolkit Authors

//! Readers for pfx2as prefix tables, scan snapshots and partition files.
//!
//! Data lines that fail to parse are skipped and counted; only I/O errors
//! abort a load.

use std::io::{self, BufRead, Write};

use serde::Serialize;
use thiserror::Error;

use crate::partition::{AnnouncedPrefixTable, PartitionError, PartitionMode, RoutedPartition};
use crate::prefix::{self, Ipv4Prefix, PrefixError};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {source}")]
    Prefix { line: usize, source: PrefixError },
    #[error(transparent)]
    Partition(#[from] PartitionError),
}

/// Line accounting for one load.
///
/// `accepted + duplicates + rejected + skipped == lines`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LoadReport {
    pub lines: usize,
    /// Data lines that added a new entry.
    pub accepted: usize,
    /// Data lines merged into an existing entry.
    pub duplicates: usize,
    pub rejected: usize,
    /// Comment and blank lines.
    pub skipped: usize,
    /// First few rejected lines, for diagnostics.
    pub first_rejects: Vec<(usize, String)>,
}

const MAX_REPORTED_REJECTS: usize = 8;

impl LoadReport {
    fn reject(&mut self, line_no: usize, line: &str) {
        self.rejected += 1;
        if self.first_rejects.len() < MAX_REPORTED_REJECTS {
            self.first_rejects.push((line_no, line.to_string()));
        }
    }
}

/// Iterate over lines, handing each to `f` with its 1-based number. The
/// line buffer is reused, so `f` must copy anything it keeps.
fn for_each_line<R: BufRead>(mut reader: R, mut f: impl FnMut(usize, &str)) -> io::Result<()> {
    let mut buf = String::new();
    let mut line_no = 0;
    loop {
        buf.clear();
        if reader.read_line(&mut buf)? == 0 {
            return Ok(());
        }
        line_no += 1;
        f(line_no, buf.trim_end_matches(['\n', '\r']));
    }
}

fn is_skippable(line: &str) -> bool {
    let t = line.trim();
    t.is_empty() || t.starts_with('#')
}

fn parse_pfx2as_line(line: &str) -> Option<(Ipv4Prefix, Vec<&str>)> {
    let mut fields = line.trim_end().split('\t');
    let (addr, len, asn) = (fields.next()?, fields.next()?, fields.next()?);
    if fields.next().is_some() {
        return None;
    }
    let network = prefix::parse_addr(addr).ok()?;
    let length = prefix::parse_length(len).ok()?;
    let pfx = Ipv4Prefix::new(network, length).ok()?;
    let origins: Vec<&str> = asn
        .split(['_', ','])
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect();
    if origins.is_empty() {
        return None;
    }
    Some((pfx, origins))
}

/// Load a CAIDA-style pfx2as table: `network<TAB>length<TAB>as-field`.
///
/// The AS field is split on `_` (multi-origin) and `,` (AS set).
pub fn load_pfx2as<R: BufRead>(
    reader: R,
) -> Result<(AnnouncedPrefixTable, LoadReport), IngestError> {
    let mut table = AnnouncedPrefixTable::new();
    let mut report = LoadReport::default();
    for_each_line(reader, |line_no, line| {
        report.lines += 1;
        if is_skippable(line) {
            report.skipped += 1;
            return;
        }
        match parse_pfx2as_line(line) {
            Some((pfx, origins)) => {
                if table.insert(pfx, origins) {
                    report.accepted += 1;
                } else {
                    report.duplicates += 1;
                }
            }
            None => report.reject(line_no, line),
        }
    })?;
    Ok((table, report))
}

/// Write a table in pfx2as format, one line per prefix with origins joined
/// by `_`.
pub fn write_pfx2as<W: Write>(table: &AnnouncedPrefixTable, mut out: W) -> io::Result<()> {
    for (pfx, origins) in table.iter() {
        let joined: Vec<&str> = origins.iter().map(String::as_str).collect();
        writeln!(
            out,
            "{}\t{}\t{}",
            pfx.network_addr(),
            pfx.length(),
            joined.join("_")
        )?;
    }
    Ok(())
}

/// The responsive addresses of one protocol from one full scan.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScanSnapshot {
    pub protocol: String,
    /// ISO-8601 date or timestamp; only its ordering matters.
    pub captured_at: String,
    pub source_id: String,
    addresses: Vec<u32>,
}

impl ScanSnapshot {
    /// Build a snapshot from any address collection; duplicates collapse.
    pub fn new(
        protocol: impl Into<String>,
        captured_at: impl Into<String>,
        source_id: impl Into<String>,
        addresses: impl IntoIterator<Item = u32>,
    ) -> Self {
        let mut addresses: Vec<u32> = addresses.into_iter().collect();
        addresses.sort_unstable();
        addresses.dedup();
        ScanSnapshot {
            protocol: protocol.into(),
            captured_at: captured_at.into(),
            source_id: source_id.into(),
            addresses,
        }
    }

    /// Sorted, duplicate-free addresses.
    pub fn addresses(&self) -> &[u32] {
        &self.addresses
    }

    pub fn len(&self) -> usize {
        self.addresses.len()
    }

    /// Empty snapshots load fine but cannot seed a selection.
    pub fn is_empty(&self) -> bool {
        self.addresses.is_empty()
    }

    pub fn contains(&self, addr: u32) -> bool {
        self.addresses.binary_search(&addr).is_ok()
    }
}

/// Header values found in `# key: value` comments of a snapshot file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SnapshotHeader {
    pub protocol: Option<String>,
    pub captured_at: Option<String>,
}

fn header_field(line: &str) -> Option<(&str, &str)> {
    let body = line.trim().strip_prefix('#')?;
    let (key, value) = body.split_once(':').or_else(|| body.split_once('='))?;
    let value = value.trim();
    (!value.is_empty()).then_some((key.trim(), value))
}

fn read_addresses<R: BufRead>(
    reader: R,
) -> Result<(Vec<u32>, SnapshotHeader, LoadReport), IngestError> {
    let mut addresses = Vec::new();
    let mut header = SnapshotHeader::default();
    let mut report = LoadReport::default();
    for_each_line(reader, |line_no, line| {
        report.lines += 1;
        if is_skippable(line) {
            report.skipped += 1;
            match header_field(line) {
                Some(("protocol", v)) if header.protocol.is_none() => {
                    header.protocol = Some(v.to_string())
                }
                Some(("captured_at", v)) if header.captured_at.is_none() => {
                    header.captured_at = Some(v.to_string())
                }
                _ => {}
            }
            return;
        }
        match prefix::parse_addr(line.trim()) {
            Ok(addr) => addresses.push(addr),
            Err(_) => report.reject(line_no, line),
        }
    })?;
    let parsed = addresses.len();
    addresses.sort_unstable();
    addresses.dedup();
    report.accepted = addresses.len();
    report.duplicates = parsed - addresses.len();
    Ok((addresses, header, report))
}

/// Load a newline-delimited dotted-quad snapshot. `#` lines are comments.
pub fn load_snapshot<R: BufRead>(
    reader: R,
    protocol: &str,
    captured_at: &str,
) -> Result<(ScanSnapshot, LoadReport), IngestError> {
    let (addresses, _, report) = read_addresses(reader)?;
    let snapshot = ScanSnapshot {
        protocol: protocol.to_string(),
        captured_at: captured_at.to_string(),
        source_id: String::new(),
        addresses,
    };
    Ok((snapshot, report))
}

/// Like [`load_snapshot`], but takes protocol and capture time from
/// `# protocol: ...` and `# captured_at: ...` comments when present.
pub fn load_snapshot_with_header<R: BufRead>(
    reader: R,
    source_id: &str,
) -> Result<(ScanSnapshot, SnapshotHeader, LoadReport), IngestError> {
    let (addresses, header, report) = read_addresses(reader)?;
    let snapshot = ScanSnapshot {
        protocol: header.protocol.clone().unwrap_or_else(|| "unknown".into()),
        captured_at: header.captured_at.clone().unwrap_or_default(),
        source_id: source_id.to_string(),
        addresses,
    };
    Ok((snapshot, header, report))
}

/// Read a partition file (sorted CIDR lines). Unlike the feeds, this is our
/// own output, so any malformed or overlapping line is an error.
pub fn load_partition<R: BufRead>(
    reader: R,
    mode: PartitionMode,
) -> Result<RoutedPartition, IngestError> {
    let mut prefixes = Vec::new();
    let mut bad = None;
    for_each_line(reader, |line_no, line| {
        if bad.is_some() || is_skippable(line) {
            return;
        }
        match prefix::parse_prefix(line.trim()) {
            Ok(p) => prefixes.push(p),
            Err(source) => {
                bad = Some(IngestError::Prefix {
                    line: line_no,
                    source,
                })
            }
        }
    })?;
    if let Some(err) = bad {
        return Err(err);
    }
    Ok(RoutedPartition::from_prefixes(mode, prefixes)?)
}

/// Read a CIDR list such as a target list.
pub fn load_prefix_list<R: BufRead>(reader: R) -> Result<Vec<Ipv4Prefix>, IngestError> {
    let mut prefixes = Vec::new();
    let mut bad = None;
    for_each_line(reader, |line_no, line| {
        if bad.is_some() || is_skippable(line) {
            return;
        }
        match prefix::parse_prefix(line.trim()) {
            Ok(p) => prefixes.push(p),
            Err(source) => {
                bad = Some(IngestError::Prefix {
                    line: line_no,
                    source,
                })
            }
        }
    })?;
    match bad {
        Some(err) => Err(err),
        None => Ok(prefixes),
    }
}
