// SPDX-License-Identifier: Apache-2.0
// Copyright The TASS Toolkit Authors

//! C ABI over `tass-core`.
//!
//! Objects cross the boundary as opaque handles created by `tass_*_new`-style
//! constructors and released with the matching `tass_*_free`. Every fallible
//! function returns a [`TassStatus`]; on failure a description is available
//! from [`tass_last_error`] on the same thread. Results are written through
//! out-pointers, which are left untouched on failure.
//!
//! The generated header lives in `include/tass.h`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use tass_core::evaluator::{simulate_hitlist, simulate_tass};
use tass_core::ingest::{self, ScanSnapshot};
use tass_core::partition::{build_partition, AnnouncedPrefixTable, PartitionMode, RoutedPartition};
use tass_core::prefix::{parse_prefix, Ipv4Prefix};
use tass_core::selector::{select_from_snapshot, Phi, SelectionResult};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TassStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ParseError = 3,
    NotFound = 4,
    Empty = 5,
    Mismatch = 6,
    OutOfRange = 7,
    Panic = 99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TassMode {
    LessSpecific = 0,
    MoreSpecific = 1,
}

impl From<TassMode> for PartitionMode {
    fn from(m: TassMode) -> Self {
        match m {
            TassMode::LessSpecific => PartitionMode::LessSpecific,
            TassMode::MoreSpecific => PartitionMode::MoreSpecific,
        }
    }
}

/// A disjoint routed partition.
pub struct TassPartition {
    inner: RoutedPartition,
}

/// A set of responsive addresses from one scan.
pub struct TassSnapshot {
    inner: ScanSnapshot,
}

/// A density-ranked selection.
pub struct TassSelection {
    inner: SelectionResult,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn fail(status: TassStatus, msg: impl Into<String>) -> TassStatus {
    set_error(msg);
    status
}

/// Run `f`, turning a panic into `TassStatus::Panic`.
fn guard(f: impl FnOnce() -> TassStatus) -> TassStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => fail(TassStatus::Panic, "internal panic"),
    }
}

unsafe fn opt_str<'a>(p: *const c_char) -> Result<Option<&'a str>, TassStatus> {
    if p.is_null() {
        return Ok(None);
    }
    CStr::from_ptr(p)
        .to_str()
        .map(Some)
        .map_err(|_| fail(TassStatus::InvalidArgument, "string is not valid UTF-8"))
}

unsafe fn bytes<'a>(data: *const c_char, len: usize) -> Result<&'a [u8], TassStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(fail(TassStatus::NullPointer, "data is NULL"));
    }
    Ok(slice::from_raw_parts(data.cast::<u8>(), len))
}

macro_rules! try_status {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(status) => return status,
        }
    };
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            return fail(TassStatus::NullPointer, concat!(stringify!($p), " is NULL"));
        })+
    };
}

/// Message for the last failed call on this thread, or NULL. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn tass_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tass_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parse `a.b.c.d/len`; host bits below `len` are rejected.
///
/// # Safety
/// `text` must be a NUL-terminated string; the out-pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn tass_prefix_parse(
    text: *const c_char,
    network: *mut u32,
    length: *mut u8,
) -> TassStatus {
    guard(|| {
        non_null!(text, network, length);
        let text = try_status!(opt_str(text)).unwrap_or_default();
        match parse_prefix(text) {
            Ok(p) => {
                *network = p.network();
                *length = p.length();
                TassStatus::Ok
            }
            Err(e) => fail(TassStatus::ParseError, e.to_string()),
        }
    })
}

fn finish_partition(
    table: &AnnouncedPrefixTable,
    mode: TassMode,
    out: *mut *mut TassPartition,
) -> TassStatus {
    let inner = build_partition(table, mode.into());
    // SAFETY: callers check `out` for NULL.
    unsafe { *out = Box::into_raw(Box::new(TassPartition { inner })) };
    TassStatus::Ok
}

/// Build a partition from pfx2as text (`network<TAB>length<TAB>as`).
/// Malformed lines are skipped; a table without valid lines is `Empty`.
///
/// # Safety
/// `data` must point to `len` readable bytes; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tass_partition_from_pfx2as(
    data: *const c_char,
    len: usize,
    mode: TassMode,
    out: *mut *mut TassPartition,
) -> TassStatus {
    guard(|| {
        non_null!(out);
        let data = try_status!(bytes(data, len));
        let (table, _) = match ingest::load_pfx2as(data) {
            Ok(v) => v,
            Err(e) => return fail(TassStatus::ParseError, e.to_string()),
        };
        if table.is_empty() {
            return fail(TassStatus::Empty, "no valid pfx2as entries");
        }
        finish_partition(&table, mode, out)
    })
}

/// Build a partition from `count` announced prefixes given as parallel
/// network and length arrays. Nested prefixes are resolved per `mode`.
///
/// # Safety
/// `networks` and `lengths` must each hold `count` elements; `out` must be
/// valid.
#[no_mangle]
pub unsafe extern "C" fn tass_partition_build(
    networks: *const u32,
    lengths: *const u8,
    count: usize,
    mode: TassMode,
    out: *mut *mut TassPartition,
) -> TassStatus {
    guard(|| {
        non_null!(out);
        if count > 0 {
            non_null!(networks, lengths);
        }
        let mut table = AnnouncedPrefixTable::new();
        for i in 0..count {
            let (net, len) = (*networks.add(i), *lengths.add(i));
            match Ipv4Prefix::new(net, len) {
                Ok(p) => {
                    table.insert(p, std::iter::empty::<String>());
                }
                Err(e) => return fail(TassStatus::InvalidArgument, format!("prefix {i}: {e}")),
            }
        }
        finish_partition(&table, mode, out)
    })
}

/// # Safety
/// `partition` must come from a tass constructor and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn tass_partition_free(partition: *mut TassPartition) {
    if !partition.is_null() {
        drop(Box::from_raw(partition));
    }
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn tass_partition_len(
    partition: *const TassPartition,
    len: *mut usize,
) -> TassStatus {
    guard(|| {
        non_null!(partition, len);
        *len = (*partition).inner.len();
        TassStatus::Ok
    })
}

/// Sum of the partition's prefix sizes.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn tass_partition_total_addresses(
    partition: *const TassPartition,
    total: *mut u64,
) -> TassStatus {
    guard(|| {
        non_null!(partition, total);
        *total = (*partition).inner.total_addresses();
        TassStatus::Ok
    })
}

/// Prefix at `index` in ascending network order.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn tass_partition_get(
    partition: *const TassPartition,
    index: usize,
    network: *mut u32,
    length: *mut u8,
) -> TassStatus {
    guard(|| {
        non_null!(partition, network, length);
        match (*partition).inner.prefixes().get(index) {
            Some(p) => {
                *network = p.network();
                *length = p.length();
                TassStatus::Ok
            }
            None => fail(
                TassStatus::OutOfRange,
                format!("index {index} out of range"),
            ),
        }
    })
}

/// The partition prefix holding `address` (host byte order), or `NotFound`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn tass_partition_longest_match(
    partition: *const TassPartition,
    address: u32,
    network: *mut u32,
    length: *mut u8,
) -> TassStatus {
    guard(|| {
        non_null!(partition, network, length);
        match (*partition).inner.longest_match(address) {
            Some(p) => {
                *network = p.network();
                *length = p.length();
                TassStatus::Ok
            }
            None => fail(TassStatus::NotFound, "address is not routed"),
        }
    })
}

/// Build a snapshot from `count` addresses; duplicates collapse. String
/// arguments may be NULL.
///
/// # Safety
/// `addresses` must hold `count` elements; strings must be NUL-terminated;
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tass_snapshot_from_addresses(
    addresses: *const u32,
    count: usize,
    protocol: *const c_char,
    captured_at: *const c_char,
    source_id: *const c_char,
    out: *mut *mut TassSnapshot,
) -> TassStatus {
    guard(|| {
        non_null!(out);
        if count > 0 {
            non_null!(addresses);
        }
        let protocol = try_status!(opt_str(protocol)).unwrap_or("unknown");
        let captured_at = try_status!(opt_str(captured_at)).unwrap_or_default();
        let source_id = try_status!(opt_str(source_id)).unwrap_or_default();
        let addrs: &[u32] = if count == 0 {
            &[]
        } else {
            slice::from_raw_parts(addresses, count)
        };
        let inner = ScanSnapshot::new(protocol, captured_at, source_id, addrs.iter().copied());
        *out = Box::into_raw(Box::new(TassSnapshot { inner }));
        TassStatus::Ok
    })
}

/// Build a snapshot from newline-delimited dotted quads. `# protocol: x` and
/// `# captured_at: y` comment lines set the metadata.
///
/// # Safety
/// `data` must point to `len` readable bytes; `source_id` may be NULL;
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tass_snapshot_from_text(
    data: *const c_char,
    len: usize,
    source_id: *const c_char,
    out: *mut *mut TassSnapshot,
) -> TassStatus {
    guard(|| {
        non_null!(out);
        let data = try_status!(bytes(data, len));
        let source_id = try_status!(opt_str(source_id)).unwrap_or_default();
        match ingest::load_snapshot_with_header(data, source_id) {
            Ok((inner, _, _)) => {
                *out = Box::into_raw(Box::new(TassSnapshot { inner }));
                TassStatus::Ok
            }
            Err(e) => fail(TassStatus::ParseError, e.to_string()),
        }
    })
}

/// # Safety
/// `snapshot` must come from a tass constructor and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn tass_snapshot_free(snapshot: *mut TassSnapshot) {
    if !snapshot.is_null() {
        drop(Box::from_raw(snapshot));
    }
}

/// Number of distinct addresses.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn tass_snapshot_len(
    snapshot: *const TassSnapshot,
    len: *mut usize,
) -> TassStatus {
    guard(|| {
        non_null!(snapshot, len);
        *len = (*snapshot).inner.len();
        TassStatus::Ok
    })
}

/// Rank the seed's responsive prefixes and select the smallest prefix of the
/// ranking whose host share exceeds `phi_numer / phi_denom` (all of them for
/// phi = 1).
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn tass_select(
    partition: *const TassPartition,
    seed: *const TassSnapshot,
    phi_numer: u64,
    phi_denom: u64,
    out: *mut *mut TassSelection,
) -> TassStatus {
    guard(|| {
        non_null!(partition, seed, out);
        let phi = match Phi::new(phi_numer, phi_denom) {
            Ok(p) => p,
            Err(e) => return fail(TassStatus::InvalidArgument, e.to_string()),
        };
        match select_from_snapshot(&(*partition).inner, &(*seed).inner, phi) {
            Ok((inner, _)) => {
                *out = Box::into_raw(Box::new(TassSelection { inner }));
                TassStatus::Ok
            }
            Err(e) => fail(TassStatus::Empty, e.to_string()),
        }
    })
}

/// # Safety
/// `selection` must come from [`tass_select`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn tass_selection_free(selection: *mut TassSelection) {
    if !selection.is_null() {
        drop(Box::from_raw(selection));
    }
}

/// Number of selected prefixes and number of ranked (responsive) prefixes.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn tass_selection_counts(
    selection: *const TassSelection,
    k: *mut usize,
    ranked: *mut usize,
) -> TassStatus {
    guard(|| {
        non_null!(selection, k, ranked);
        let s = &(*selection).inner;
        *k = s.k;
        *ranked = s.ranked.len();
        TassStatus::Ok
    })
}

/// Ranked prefix at 0-based `rank`; ranks below `k` are selected.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn tass_selection_get(
    selection: *const TassSelection,
    rank: usize,
    network: *mut u32,
    length: *mut u8,
    host_count: *mut u64,
) -> TassStatus {
    guard(|| {
        non_null!(selection, network, length, host_count);
        let ranked = &(*selection).inner.ranked;
        match ranked.get(rank) {
            Some(r) => {
                *network = r.prefix.network();
                *length = r.prefix.length();
                *host_count = r.host_count;
                TassStatus::Ok
            }
            None => fail(TassStatus::OutOfRange, format!("rank {rank} out of range")),
        }
    })
}

/// Exact coverage of the selection as numerator/denominator pairs: seed
/// hosts covered over routed seed hosts, and selected addresses over routed
/// addresses.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn tass_selection_coverage(
    selection: *const TassSelection,
    hosts_selected: *mut u64,
    hosts_total: *mut u64,
    addresses_selected: *mut u64,
    addresses_total: *mut u64,
) -> TassStatus {
    guard(|| {
        non_null!(
            selection,
            hosts_selected,
            hosts_total,
            addresses_selected,
            addresses_total
        );
        let s = &(*selection).inner;
        *hosts_selected = s.selected_hosts;
        *hosts_total = s.total_hosts;
        *addresses_selected = s.selected_addresses;
        *addresses_total = s.routed_total;
        TassStatus::Ok
    })
}

/// Hosts of `later` inside the selected prefixes. The hitrate is
/// `covered / ground_truth`; `ground_truth` is 0 for an empty snapshot.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn tass_simulate_tass(
    selection: *const TassSelection,
    partition: *const TassPartition,
    later: *const TassSnapshot,
    covered: *mut u64,
    ground_truth: *mut u64,
) -> TassStatus {
    guard(|| {
        non_null!(selection, partition, later, covered, ground_truth);
        let later = std::slice::from_ref(&(*later).inner);
        match simulate_tass(&(*selection).inner, &(*partition).inner, later) {
            Ok(series) => {
                *covered = series.points[0].covered_hosts;
                *ground_truth = series.points[0].ground_truth_hosts;
                TassStatus::Ok
            }
            Err(e) => fail(TassStatus::Mismatch, e.to_string()),
        }
    })
}

/// Hosts of `later` that were already responsive in `seed`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn tass_simulate_hitlist(
    seed: *const TassSnapshot,
    later: *const TassSnapshot,
    covered: *mut u64,
    ground_truth: *mut u64,
) -> TassStatus {
    guard(|| {
        non_null!(seed, later, covered, ground_truth);
        let later = std::slice::from_ref(&(*later).inner);
        match simulate_hitlist(&(*seed).inner, later) {
            Ok(series) => {
                *covered = series.points[0].covered_hosts;
                *ground_truth = series.points[0].ground_truth_hosts;
                TassStatus::Ok
            }
            Err(e) => fail(TassStatus::Mismatch, e.to_string()),
        }
    })
}
