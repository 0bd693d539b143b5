// SPDX-License-Identifier: Apache-2.0
// Copyright The TASS Toolkit Authors

//! Text output: target lists, partition files and the CSV reports.
//!
//! Every number is rendered from an exact fraction, so outputs are identical
//! across platforms.

use std::io::{self, Write};

use num_rational::Ratio;

use crate::evaluator::{DeltaReport, HitrateSeries, PrefixLengthHistogram};
use crate::partition::RoutedPartition;
use crate::prefix::Ipv4Prefix;
use crate::selector::{emit_statistics, Fraction, SelectionResult};

pub const STATS_HEADER: &str =
    "rank,prefix,length,host_count,density,cum_host_coverage,cum_addr_coverage";
pub const SERIES_HEADER: &str =
    "snapshot_id,snapshot_time,strategy,phi,ground_truth,covered,hitrate";
pub const HISTOGRAM_HEADER: &str = "length,host_count";
pub const DELTA_HEADER: &str =
    "snapshot_id,snapshot_time,strategy_a,hitrate_a,strategy_b,hitrate_b,delta";

/// Written in place of a hitrate whose ground truth is empty.
pub const UNDEFINED: &str = "undefined";

fn pow10(n: u32) -> u128 {
    10u128.pow(n)
}

/// `round(n / d)` with halves rounded up.
fn div_round(n: u128, d: u128) -> u128 {
    (n + d / 2) / d
}

fn render_scaled(v: u128, places: u32) -> String {
    if places == 0 {
        return v.to_string();
    }
    let scale = pow10(places);
    format!(
        "{}.{:0width$}",
        v / scale,
        v % scale,
        width = places as usize
    )
}

fn fixed_u128(numer: u128, denom: u128, places: u32) -> String {
    render_scaled(div_round(numer * pow10(places), denom), places)
}

/// Decimal with exactly six fractional digits, rounded half up.
pub fn fixed6(x: Fraction) -> String {
    fixed_u128(u128::from(*x.numer()), u128::from(*x.denom()), 6)
}

/// Decimal with six significant digits, rounded half up.
pub fn sig6(x: Fraction) -> String {
    let (n, d) = (u128::from(*x.numer()), u128::from(*x.denom()));
    if n == 0 {
        return "0".to_string();
    }
    let lower = pow10(5);
    let upper = pow10(6);
    if n >= d * upper {
        // Integers this large never occur for densities or shares.
        return fixed_u128(n, d, 0);
    }
    let mut places = 0u32;
    while n * pow10(places) < lower * d {
        places += 1;
    }
    let mut v = div_round(n * pow10(places), d);
    if v == upper && places > 0 {
        v = lower;
        places -= 1;
    }
    render_scaled(v, places)
}

/// Shortest exact decimal for fractions with a power-of-ten denominator,
/// six places otherwise.
pub fn decimal_trimmed(x: Fraction) -> String {
    let (n, d) = (u128::from(*x.numer()), u128::from(*x.denom()));
    match (0..=18).find(|&p| pow10(p) % d == 0) {
        Some(places) => render_scaled(n * pow10(places) / d, places),
        None => fixed6(x),
    }
}

fn signed_fixed6(neg: bool, magnitude: Ratio<u128>) -> String {
    let s = fixed_u128(*magnitude.numer(), *magnitude.denom(), 6);
    if neg && s.bytes().any(|b| b.is_ascii_digit() && b != b'0') {
        format!("-{s}")
    } else {
        s
    }
}

/// One CIDR per line, sorted by network then length.
pub fn write_target_list<W: Write>(selection: &SelectionResult, out: W) -> io::Result<()> {
    write_prefix_lines(&selection.target_list(), out)
}

pub fn write_partition<W: Write>(partition: &RoutedPartition, out: W) -> io::Result<()> {
    write_prefix_lines(partition.prefixes(), out)
}

fn write_prefix_lines<W: Write>(prefixes: &[Ipv4Prefix], mut out: W) -> io::Result<()> {
    for p in prefixes {
        writeln!(out, "{p}")?;
    }
    Ok(())
}

/// Ranking statistics, one row per responsive prefix.
pub fn write_statistics<W: Write>(selection: &SelectionResult, mut out: W) -> io::Result<()> {
    writeln!(out, "{STATS_HEADER}")?;
    for row in emit_statistics(selection) {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            row.rank,
            row.prefix.network_addr(),
            row.prefix.length(),
            row.host_count,
            sig6(row.density),
            fixed6(row.cum_host_coverage),
            fixed6(row.cum_addr_coverage),
        )?;
    }
    Ok(())
}

pub fn write_series_header<W: Write>(mut out: W) -> io::Result<()> {
    writeln!(out, "{SERIES_HEADER}")
}

/// Series rows without a header, so several series can share one file.
pub fn write_series_rows<W: Write>(series: &HitrateSeries, mut out: W) -> io::Result<()> {
    let phi = series.phi_target.map(|p| p.to_string()).unwrap_or_default();
    for pt in &series.points {
        let hitrate = pt.hitrate().map_or_else(|| UNDEFINED.to_string(), fixed6);
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            pt.snapshot_id,
            pt.snapshot_time,
            series.strategy,
            phi,
            pt.ground_truth_hosts,
            pt.covered_hosts,
            hitrate
        )?;
    }
    Ok(())
}

pub fn write_series<W: Write>(series: &HitrateSeries, mut out: W) -> io::Result<()> {
    write_series_header(&mut out)?;
    write_series_rows(series, out)
}

pub fn write_histogram<W: Write>(hist: &PrefixLengthHistogram, mut out: W) -> io::Result<()> {
    writeln!(out, "{HISTOGRAM_HEADER}")?;
    for (len, count) in hist.by_length.iter().enumerate() {
        writeln!(out, "{len},{count}")?;
    }
    writeln!(out, "ge25,{}", hist.ge25)?;
    writeln!(out, "unrouted,{}", hist.unrouted)
}

pub fn write_delta_report<W: Write>(report: &DeltaReport, mut out: W) -> io::Result<()> {
    writeln!(out, "{DELTA_HEADER}")?;
    let rate = |r: Option<Fraction>| r.map_or_else(|| UNDEFINED.to_string(), fixed6);
    for row in &report.rows {
        let delta = row
            .delta()
            .map_or_else(|| UNDEFINED.to_string(), |(neg, m)| signed_fixed6(neg, m));
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            row.snapshot_id,
            row.snapshot_time,
            report.strategy_a,
            rate(row.hitrate_a),
            report.strategy_b,
            rate(row.hitrate_b),
            delta
        )?;
    }
    Ok(())
}
