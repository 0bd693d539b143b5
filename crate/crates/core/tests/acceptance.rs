// SPDX-License-Identifier: Apache-2.0
// Copyright The TASS Toolkit Authors

//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any failed.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use num_rational::Ratio;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tass_core::cli::{cmd_select, SelectArgs};
use tass_core::evaluator::{simulate_hitlist, simulate_tass};
use tass_core::ingest::{load_pfx2as, load_snapshot, ScanSnapshot};
use tass_core::partition::{build_partition, AnnouncedPrefixTable, PartitionMode, RoutedPartition};
use tass_core::prefix::Ipv4Prefix;
use tass_core::report::{write_statistics, write_target_list};
use tass_core::selector::{
    compute_densities, count_hosts, rank_by_density, select_from_snapshot, select_prefixes, Phi,
    SelectionResult,
};

const MODES: [PartitionMode; 2] = [PartitionMode::LessSpecific, PartitionMode::MoreSpecific];

struct Outcome {
    failures: Vec<String>,
    notes: String,
}

impl Outcome {
    fn new() -> Self {
        Outcome {
            failures: Vec::new(),
            notes: String::new(),
        }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok && self.failures.len() < 5 {
            self.failures.push(what());
        } else if !ok {
            self.failures.push(String::new());
        }
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn pfx(s: &str) -> Ipv4Prefix {
    s.parse().unwrap()
}

fn random_prefix(rng: &mut impl Rng, base: Ipv4Prefix, min_len: u8, max_len: u8) -> Ipv4Prefix {
    let len = rng.gen_range(min_len.max(base.length())..=max_len);
    let host = rng.gen::<u32>() & !base.mask();
    Ipv4Prefix::new_truncated(base.network() | host, len)
}

fn random_table(
    rng: &mut impl Rng,
    base: Ipv4Prefix,
    count: usize,
    min_len: u8,
    max_len: u8,
) -> AnnouncedPrefixTable {
    let mut table = AnnouncedPrefixTable::new();
    for _ in 0..count {
        let p = random_prefix(rng, base, min_len, max_len);
        table.insert(p, ["64496"]);
    }
    table
}

fn random_addr_in(rng: &mut impl Rng, p: Ipv4Prefix) -> u32 {
    p.network() | (rng.gen::<u32>() & !p.mask())
}

/// Pick `n` addresses: mostly inside random partition prefixes, some anywhere.
fn random_snapshot(
    rng: &mut impl Rng,
    partition: &RoutedPartition,
    n: usize,
    stray: f64,
) -> ScanSnapshot {
    let prefixes = partition.prefixes();
    let hot: Vec<Ipv4Prefix> = prefixes
        .choose_multiple(rng, (prefixes.len() / 3).max(1))
        .copied()
        .collect();
    let addrs: Vec<u32> = (0..n)
        .map(|_| {
            if rng.gen_bool(stray) {
                rng.gen()
            } else {
                {
                    let p = *hot.choose(rng).unwrap();
                    random_addr_in(rng, p)
                }
            }
        })
        .collect();
    ScanSnapshot::new("ftp", "2015-09-07", "seed", addrs)
}

fn criterion_1() -> Outcome {
    let mut out = Outcome::new();
    let mut table = AnnouncedPrefixTable::new();
    table.insert(pfx("100.0.0.0/8"), ["64496"]);
    table.insert(pfx("100.0.0.0/12"), ["64497"]);
    let expected_more: Vec<Ipv4Prefix> = [
        "100.0.0.0/12",
        "100.16.0.0/12",
        "100.32.0.0/11",
        "100.64.0.0/10",
        "100.128.0.0/9",
    ]
    .iter()
    .map(|s| pfx(s))
    .collect();
    let more = build_partition(&table, PartitionMode::MoreSpecific);
    let less = build_partition(&table, PartitionMode::LessSpecific);
    out.check(more.prefixes() == expected_more, || {
        format!("more: {:?}", more.prefixes())
    });
    out.check(less.prefixes() == [pfx("100.0.0.0/8")], || {
        format!("less: {:?}", less.prefixes())
    });
    out.notes = format!("more={} prefixes, less={}", more.len(), less.len());
    out
}

const SLASH16: u32 = 0x0a00_0000;

fn criterion_2() -> Outcome {
    let mut out = Outcome::new();
    let base = pfx("10.0.0.0/16");
    let mut rng = rng(2);
    let mut addresses_checked = 0u64;
    let mut owner = vec![usize::MAX; 1 << 16];
    let mut announced_depth = vec![0i32; (1 << 16) + 1];
    for case in 0..500 {
        let count = rng.gen_range(1..=1000);
        let max_len = if case % 2 == 0 { 32 } else { 26 };
        let table = random_table(&mut rng, base, count, 16, max_len);

        // Brute-force coverage of the announced table.
        announced_depth.iter_mut().for_each(|d| *d = 0);
        for p in table.prefixes() {
            let lo = (p.network() - SLASH16) as usize;
            announced_depth[lo] += 1;
            announced_depth[lo + p.size() as usize] -= 1;
        }
        let mut covered = vec![false; 1 << 16];
        let mut depth = 0;
        for (i, c) in covered.iter_mut().enumerate() {
            depth += announced_depth[i];
            *c = depth > 0;
        }

        for mode in MODES {
            let partition = build_partition(&table, mode);
            owner.iter_mut().for_each(|o| *o = usize::MAX);
            let mut overlap = false;
            for (i, p) in partition.prefixes().iter().enumerate() {
                out.check(base.contains(p), || {
                    format!("case {case}: {p} escapes {base}")
                });
                if !base.contains(p) {
                    continue;
                }
                let lo = (p.network() - SLASH16) as usize;
                for o in &mut owner[lo..lo + p.size() as usize] {
                    overlap |= *o != usize::MAX;
                    *o = i;
                }
            }
            out.check(!overlap, || {
                format!("case {case} {mode}: overlapping partition prefixes")
            });
            for a in 0..(1u32 << 16) {
                let addr = SLASH16 | a;
                let expected = match owner[a as usize] {
                    usize::MAX => None,
                    i => Some(partition.prefixes()[i]),
                };
                let got = partition.longest_match(addr);
                out.check(covered[a as usize] == expected.is_some() && got == expected, || {
                    format!("case {case} {mode}: {addr:#x} covered={} expected={expected:?} got={got:?}", covered[a as usize])
                });
            }
            addresses_checked += 1 << 16;
            for probe in [SLASH16 - 1, SLASH16 + (1 << 16)] {
                out.check(partition.longest_match(probe).is_none(), || {
                    format!("case {case}: {probe:#x} matched")
                });
            }
            if mode == PartitionMode::MoreSpecific {
                for p in table.prefixes() {
                    let m = partition.longest_match(p.network()).unwrap();
                    out.check(m.length() >= p.length(), || {
                        format!("case {case}: {m} straddles {p}")
                    });
                }
            }
        }
    }
    out.notes = format!("1000 partitions, {addresses_checked} address checks");
    out
}

fn phis() -> Vec<Phi> {
    ["0.5", "0.7", "0.95", "0.99", "1"]
        .iter()
        .map(|s| s.parse().unwrap())
        .collect()
}

/// Random disjoint partition with random host counts; ties are common.
fn random_profile(
    rng: &mut impl Rng,
    max_prefixes: usize,
) -> (RoutedPartition, BTreeMap<Ipv4Prefix, u64>) {
    let count = rng.gen_range(1..=max_prefixes);
    let table = random_table(rng, pfx("10.0.0.0/8"), count, 8, 32);
    let partition = build_partition(&table, PartitionMode::MoreSpecific);
    let mut counts = BTreeMap::new();
    for p in partition.prefixes() {
        let c = match rng.gen_range(0..4) {
            0 => 0,
            1 => p.size() >> rng.gen_range(0..=u32::from(32 - p.length()).min(6)),
            _ => rng.gen_range(0..=p.size().min(5000)),
        };
        counts.insert(*p, c);
    }
    if counts.values().all(|&c| c == 0) {
        *counts.values_mut().next().unwrap() = 1;
    }
    (partition, counts)
}

fn selection_for(
    partition: &RoutedPartition,
    counts: &BTreeMap<Ipv4Prefix, u64>,
    phi: Phi,
) -> SelectionResult {
    let total = counts.values().sum();
    let (records, _) = compute_densities(counts, total).unwrap();
    select_prefixes(rank_by_density(records), phi, partition).unwrap()
}

/// Naive reference: sort by cross-multiplied density, then scan cumulative
/// coverage as a fraction.
fn reference_selection(
    counts: &BTreeMap<Ipv4Prefix, u64>,
    phi: Ratio<u128>,
) -> (Vec<Ipv4Prefix>, usize) {
    let mut rows: Vec<(Ipv4Prefix, u128, u128)> = counts
        .iter()
        .filter(|(_, &c)| c > 0)
        .map(|(p, &c)| (*p, u128::from(c), u128::from(p.size())))
        .collect();
    rows.sort_by(|a, b| {
        let by_density = (b.1 * a.2).cmp(&(a.1 * b.2));
        let by_hosts = b.1.cmp(&a.1);
        let by_prefix = (a.0.network(), a.0.length()).cmp(&(b.0.network(), b.0.length()));
        by_density.then(by_hosts).then(by_prefix)
    });
    let total: u128 = rows.iter().map(|r| r.1).sum();
    let k = if phi == Ratio::from_integer(1) {
        rows.len()
    } else {
        let mut cum = 0;
        let mut k = rows.len();
        for (i, r) in rows.iter().enumerate() {
            cum += r.1;
            if Ratio::new(cum, total) > phi {
                k = i + 1;
                break;
            }
        }
        k
    };
    (rows.into_iter().map(|r| r.0).collect(), k)
}

fn criterion_3() -> Outcome {
    let mut out = Outcome::new();
    let mut rng = rng(3);
    let mut checks = 0;
    for case in 0..1000 {
        let (partition, counts) = random_profile(&mut rng, 200);
        let total: u128 = counts.values().map(|&c| u128::from(c)).sum();
        let nonzero = counts.values().filter(|&&c| c > 0).count();
        for phi in phis() {
            let f = phi.as_fraction();
            let phi_exact = Ratio::new(u128::from(*f.numer()), u128::from(*f.denom()));
            let sel = selection_for(&partition, &counts, phi);
            let (ref_order, ref_k) = reference_selection(&counts, phi_exact);
            let order: Vec<Ipv4Prefix> = sel.ranked.iter().map(|r| r.prefix).collect();
            out.check(order == ref_order, || {
                format!("case {case} phi {phi}: ranking differs")
            });
            out.check(sel.k == ref_k, || {
                format!("case {case} phi {phi}: k {} vs reference {ref_k}", sel.k)
            });

            let cov = |k: usize| {
                Ratio::new(
                    sel.ranked[..k]
                        .iter()
                        .map(|r| u128::from(r.host_count))
                        .sum::<u128>(),
                    total,
                )
            };
            if phi.is_one() {
                out.check(sel.k == nonzero, || {
                    format!("case {case}: phi=1 selected {} of {nonzero}", sel.k)
                });
            } else {
                out.check(
                    sel.k >= 1 && cov(sel.k - 1) <= phi_exact && phi_exact < cov(sel.k),
                    || {
                        format!(
                            "case {case} phi {phi}: k={} violates the coverage bracket",
                            sel.k
                        )
                    },
                );
            }
            checks += 1;
        }
    }
    out.notes = format!("{checks} selections agree with the reference");
    out
}

fn criterion_4() -> Outcome {
    let mut out = Outcome::new();
    let mut rng = rng(4);
    let mut subsets = 0u64;
    for case in 0..200 {
        let n = rng.gen_range(1..=15);
        let (partition, mut counts) = random_profile(&mut rng, 60);
        // Exactly n responsive prefixes when the partition is large enough.
        let mut all: Vec<Ipv4Prefix> = counts.keys().copied().collect();
        all.shuffle(&mut rng);
        for (i, p) in all.iter().enumerate() {
            let c = if i < n { counts[p].max(1) } else { 0 };
            counts.insert(*p, c);
        }
        let sel = selection_for(&partition, &counts, Phi::ONE);
        let items: Vec<(u64, u64)> = sel
            .ranked
            .iter()
            .map(|r| (r.host_count, r.prefix.size()))
            .collect();
        let m = items.len();

        // Every subset's (hosts, addresses), built from the lowest set bit.
        let mut hosts = vec![0u64; 1 << m];
        let mut cost = vec![0u64; 1 << m];
        for mask in 1usize..(1 << m) {
            let bit = mask.trailing_zeros() as usize;
            let rest = mask & (mask - 1);
            hosts[mask] = hosts[rest] + items[bit].0;
            cost[mask] = cost[rest] + items[bit].1;
        }
        subsets += 1 << m;

        for phi in phis() {
            let k = selection_for(&partition, &counts, phi).k;
            let (gh, gc) = (hosts[(1 << k) - 1], cost[(1 << k) - 1]);
            let dominated = (0..1usize << m)
                .find(|&s| cost[s] <= gc && hosts[s] >= gh && (cost[s] < gc || hosts[s] > gh));
            out.check(dominated.is_none(), || {
                let s = dominated.unwrap();
                format!("case {case} phi {phi}: k={k} ({gh} hosts, {gc} addrs) dominated by {s:#b} ({} hosts, {} addrs)", hosts[s], cost[s])
            });
        }
    }
    out.notes = format!("200 instances, {subsets} subsets enumerated");
    out
}

fn mask(len: u32) -> u32 {
    if len == 0 {
        0
    } else {
        u32::MAX << (32 - len)
    }
}

fn oracle_covered(selected: &HashSet<(u32, u8)>, addrs: &[u32]) -> u64 {
    addrs
        .iter()
        .filter(|&&a| (0..=32u32).any(|l| selected.contains(&(a & mask(l), l as u8))))
        .count() as u64
}

/// Later snapshots with survival, in-prefix moves, deaths and births.
fn churn_sequence(
    rng: &mut impl Rng,
    partition: &RoutedPartition,
    seed: &ScanSnapshot,
) -> Vec<ScanSnapshot> {
    let mut current: Vec<u32> = seed.addresses().to_vec();
    (1..=6)
        .map(|t| {
            let mut next = Vec::with_capacity(current.len() + 1000);
            for &a in &current {
                let roll: f64 = rng.gen();
                if roll < 0.9 {
                    next.push(a);
                } else if roll < 0.96 {
                    match partition.longest_match(a) {
                        Some(p) => next.push(random_addr_in(rng, p)),
                        None => next.push(rng.gen()),
                    }
                }
            }
            for _ in 0..current.len() / 20 {
                let p = partition.prefixes()[rng.gen_range(0..partition.len())];
                next.push(if rng.gen_bool(0.9) {
                    random_addr_in(rng, p)
                } else {
                    rng.gen()
                });
            }
            current = next;
            ScanSnapshot::new(
                "ftp",
                format!("2015-{:02}-01", 9 + t),
                format!("t{t}"),
                current.iter().copied(),
            )
        })
        .collect()
}

fn criterion_5() -> Outcome {
    let mut out = Outcome::new();
    let mut rng = rng(5);
    let mut points = 0;
    let mut max_size = 0;
    for case in 0..6 {
        let table = random_table(&mut rng, pfx("10.0.0.0/8"), 400, 10, 24);
        let n = rng.gen_range(10_000..=60_000);
        for mode in MODES {
            let partition = build_partition(&table, mode);
            let seed = random_snapshot(&mut rng, &partition, n, 0.05);
            let later = churn_sequence(&mut rng, &partition, &seed);
            max_size = later
                .iter()
                .map(|s| s.len())
                .chain([seed.len(), max_size])
                .max()
                .unwrap();

            let seed_set: HashSet<u32> = seed.addresses().iter().copied().collect();
            let hitlist = simulate_hitlist(&seed, &later).unwrap();
            for (pt, snap) in hitlist.points.iter().zip(&later) {
                let expected = snap
                    .addresses()
                    .iter()
                    .filter(|a| seed_set.contains(a))
                    .count() as u64;
                out.check(
                    pt.covered_hosts == expected && pt.ground_truth_hosts == snap.len() as u64,
                    || {
                        format!(
                            "case {case}: hitlist {}/{} vs oracle {expected}/{}",
                            pt.covered_hosts,
                            pt.ground_truth_hosts,
                            snap.len()
                        )
                    },
                );
                points += 1;
            }
            for phi in phis() {
                let (sel, _) = select_from_snapshot(&partition, &seed, phi).unwrap();
                let selected: HashSet<(u32, u8)> = sel
                    .selected()
                    .iter()
                    .map(|r| (r.prefix.network(), r.prefix.length()))
                    .collect();
                let series = simulate_tass(&sel, &partition, &later).unwrap();
                for (pt, snap) in series.points.iter().zip(&later) {
                    let expected = oracle_covered(&selected, snap.addresses());
                    out.check(
                        pt.covered_hosts == expected && pt.ground_truth_hosts == snap.len() as u64,
                        || {
                            format!(
                                "case {case} {mode} phi {phi}: tass {}/{} vs oracle {expected}",
                                pt.covered_hosts, pt.ground_truth_hosts
                            )
                        },
                    );
                    points += 1;
                }
            }
        }
    }

    // Within-prefix churn: hosts move inside their prefix and nothing else
    // changes.
    let table = random_table(&mut rng, pfx("10.0.0.0/8"), 300, 12, 22);
    let partition = build_partition(&table, PartitionMode::MoreSpecific);
    let seed = random_snapshot(&mut rng, &partition, 50_000, 0.0);
    let seed_set: HashSet<u32> = seed.addresses().iter().copied().collect();
    let n = seed.len();
    let mut order: Vec<u32> = seed.addresses().to_vec();
    order.shuffle(&mut rng);
    let mut later = Vec::new();
    let mut moved_at = Vec::new();
    for t in 1..=6u64 {
        let moved = n * t as usize / 20;
        let mut addrs: Vec<u32> = order[moved..].to_vec();
        let mut taken: HashSet<u32> = addrs.iter().copied().collect();
        for &a in &order[..moved] {
            let p = partition.longest_match(a).unwrap();
            loop {
                let b = random_addr_in(&mut rng, p);
                if !seed_set.contains(&b) && taken.insert(b) {
                    addrs.push(b);
                    break;
                }
            }
        }
        later.push(ScanSnapshot::new(
            "ftp",
            format!("2015-{:02}-01", 9 + t),
            format!("m{t}"),
            addrs,
        ));
        moved_at.push(moved as u64);
    }
    let (sel, _) = select_from_snapshot(&partition, &seed, Phi::ONE).unwrap();
    let tass = simulate_tass(&sel, &partition, &later).unwrap();
    let hitlist = simulate_hitlist(&seed, &later).unwrap();
    let mut rates = Vec::new();
    for ((tp, hp), moved) in tass.points.iter().zip(&hitlist.points).zip(&moved_at) {
        let stayed = Ratio::new(n as u64 - moved, n as u64);
        out.check(tp.hitrate() == Some(Ratio::from_integer(1)), || {
            format!("churn: tass hitrate {:?}", tp.hitrate())
        });
        out.check(hp.hitrate() == Some(stayed), || {
            format!("churn: hitlist {:?} vs {stayed}", hp.hitrate())
        });
        rates.push(format!(
            "{:.2}",
            *stayed.numer() as f64 / *stayed.denom() as f64
        ));
    }
    out.notes = format!(
        "{points} points match, max snapshot {max_size}; churn fixture tass 1.0, hitlist [{}]",
        rates.join(" ")
    );
    out
}

fn criterion_6() -> Outcome {
    let mut out = Outcome::new();
    let mut rng = rng(6);
    let (mut sum_more, mut sum_less) = (0.0, 0.0);
    for case in 0..100 {
        let count = rng.gen_range(5..=400);
        let table = random_table(&mut rng, pfx("10.0.0.0/8"), count, 8, 26);
        let less = build_partition(&table, PartitionMode::LessSpecific);
        let more = build_partition(&table, PartitionMode::MoreSpecific);
        let n = rng.gen_range(100..=20_000);
        let seed = random_snapshot(&mut rng, &more, n, 0.02);
        let (sl, _) = select_from_snapshot(&less, &seed, Phi::ONE).unwrap();
        let (sm, _) = select_from_snapshot(&more, &seed, Phi::ONE).unwrap();
        out.check(sl.routed_total == sm.routed_total, || {
            format!("case {case}: routed totals differ")
        });
        out.check(sm.selected_addresses <= sl.selected_addresses, || {
            format!(
                "case {case}: more {} > less {}",
                sm.selected_addresses, sl.selected_addresses
            )
        });
        let frac = |s: &SelectionResult| s.selected_addresses as f64 / s.routed_total as f64;
        sum_more += frac(&sm);
        sum_less += frac(&sl);
    }
    out.notes = format!(
        "mean address coverage more {:.3} <= less {:.3}",
        sum_more / 100.0,
        sum_less / 100.0
    );
    out
}

fn synthetic_pfx2as(rng: &mut impl Rng, count: usize) -> (String, Vec<Ipv4Prefix>) {
    let mut text = String::with_capacity(count * 24);
    let mut prefixes: Vec<Ipv4Prefix> = Vec::with_capacity(count);
    let mut seen = HashSet::with_capacity(count);
    while prefixes.len() < count {
        let p = if !prefixes.is_empty() && rng.gen_bool(0.2) {
            let outer = prefixes[rng.gen_range(0..prefixes.len())];
            if outer.length() >= 24 {
                continue;
            }
            random_prefix(rng, outer, outer.length() + 1, 24)
        } else {
            let len = if rng.gen_bool(0.55) {
                24
            } else {
                rng.gen_range(8..=23)
            };
            let first = rng.gen_range(1u32..=223) << 24;
            Ipv4Prefix::new_truncated(first | (rng.gen::<u32>() & 0x00ff_ffff), len)
        };
        if !seen.insert(p) {
            continue;
        }
        let origin = rng.gen_range(1..=65_000);
        let origin = if rng.gen_bool(0.01) {
            format!("{origin}_{}", origin + 1)
        } else {
            origin.to_string()
        };
        writeln!(text, "{}\t{}\t{origin}", p.network_addr(), p.length()).unwrap();
        prefixes.push(p);
    }
    (text, prefixes)
}

fn peak_rss_kib() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    line.split_whitespace().nth(1)?.parse().ok()
}

fn criterion_7() -> Outcome {
    let mut out = Outcome::new();
    let mut rng = rng(7);
    let (pfx2as, announced) = synthetic_pfx2as(&mut rng, 100_000);
    let mut snapshot_text = String::with_capacity(16 * 1_000_000);
    for _ in 0..1_000_000 {
        let a = if rng.gen_bool(0.9) {
            {
                let p = announced[rng.gen_range(0..announced.len())];
                random_addr_in(&mut rng, p)
            }
        } else {
            rng.gen()
        };
        writeln!(snapshot_text, "{}", std::net::Ipv4Addr::from(a)).unwrap();
    }

    let start = Instant::now();
    let (table, report) = load_pfx2as(pfx2as.as_bytes()).unwrap();
    let partition = build_partition(&table, PartitionMode::MoreSpecific);
    let (seed, _) = load_snapshot(snapshot_text.as_bytes(), "ftp", "2015-09-07").unwrap();
    let counts = count_hosts(&partition, &seed);
    let (records, _) = compute_densities(&counts.counts, counts.routed()).unwrap();
    let ranked = rank_by_density(records);
    let sel = select_prefixes(ranked, "0.95".parse().unwrap(), &partition).unwrap();
    let mut targets = Vec::new();
    let mut stats = Vec::new();
    write_target_list(&sel, &mut targets).unwrap();
    write_statistics(&sel, &mut stats).unwrap();
    let elapsed = start.elapsed();

    let rss = peak_rss_kib();
    out.check(report.accepted == 100_000, || {
        format!("accepted {} lines", report.accepted)
    });
    out.check(elapsed < Duration::from_secs(30), || {
        format!("pipeline took {elapsed:.2?}")
    });
    out.check(rss.is_some_and(|kib| kib < 2 * 1024 * 1024), || {
        format!("peak RSS {rss:?} KiB")
    });
    out.check(!targets.is_empty() && !stats.is_empty(), || {
        "empty outputs".into()
    });
    out.notes = format!(
        "pipeline {:.2}s, peak RSS {} MiB, {} partition prefixes, {} snapshot hosts, k={}",
        elapsed.as_secs_f64(),
        rss.map_or(0, |k| k / 1024),
        partition.len(),
        seed.len(),
        sel.k
    );
    out
}

fn write_determinism_fixture(dir: &Path) {
    let mut rng = rng(8);
    let (pfx2as, announced) = synthetic_pfx2as(&mut rng, 5_000);
    std::fs::write(dir.join("pfx2as.txt"), pfx2as).unwrap();
    let mut snap = String::from("# protocol: ftp\n# captured_at: 2015-09-07\n");
    for _ in 0..200_000 {
        let a = {
            let p = announced[rng.gen_range(0..announced.len())];
            random_addr_in(&mut rng, p)
        };
        writeln!(snap, "{}", std::net::Ipv4Addr::from(a)).unwrap();
    }
    std::fs::write(dir.join("seed.txt"), snap).unwrap();
}

fn run_tass(args: &[&str], threads: &str, dir: &Path) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_tass"))
        .args(args)
        .current_dir(dir)
        .env("TASS_THREADS", threads)
        .output()
        .map_err(|e| e.to_string())?;
    if status.status.success() {
        Ok(())
    } else {
        Err(String::from_utf8_lossy(&status.stderr).into_owned())
    }
}

fn criterion_8() -> Outcome {
    let mut out = Outcome::new();
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    write_determinism_fixture(dir);
    if let Err(e) = run_tass(
        &[
            "partition",
            "--pfx2as",
            "pfx2as.txt",
            "--mode",
            "more",
            "--out",
            "partition.txt",
        ],
        "1",
        dir,
    ) {
        out.check(false, || format!("partition failed: {e}"));
        return out;
    }

    let mut runs: Vec<(String, Vec<u8>, Vec<u8>)> = Vec::new();
    for (i, threads) in ["1", "4", "1"].iter().enumerate() {
        let (t, s) = (format!("targets{i}.txt"), format!("stats{i}.csv"));
        let args = [
            "select",
            "--partition",
            "partition.txt",
            "--snapshot",
            "seed.txt",
            "--phi",
            "0.95",
            "--targets",
            &t,
            "--stats",
            &s,
        ];
        match run_tass(&args, threads, dir) {
            Ok(()) => runs.push((
                format!("binary TASS_THREADS={threads}"),
                std::fs::read(dir.join(&t)).unwrap(),
                std::fs::read(dir.join(&s)).unwrap(),
            )),
            Err(e) => out.check(false, || format!("select failed: {e}")),
        }
    }
    for i in 0..2 {
        let args = SelectArgs {
            partition: dir.join("partition.txt"),
            snapshot: dir.join("seed.txt"),
            phi: "0.95".into(),
            stats: dir.join(format!("lib_stats{i}.csv")),
            targets: dir.join(format!("lib_targets{i}.txt")),
            mode: None,
            manifest: None,
        };
        match cmd_select(&args) {
            Ok(_) => runs.push((
                format!("in-process run {i}"),
                std::fs::read(&args.targets).unwrap(),
                std::fs::read(&args.stats).unwrap(),
            )),
            Err(e) => out.check(false, || format!("cmd_select failed: {e}")),
        }
    }
    let (_, t0, s0) = &runs[0];
    out.check(!t0.is_empty() && s0.len() > 100, || {
        "outputs are empty".into()
    });
    for (name, t, s) in &runs[1..] {
        out.check(t == t0, || format!("{name}: target list differs"));
        out.check(s == s0, || format!("{name}: stats differ"));
    }
    out.notes = format!(
        "{} runs identical ({} target bytes, {} stats bytes)",
        runs.len(),
        t0.len(),
        s0.len()
    );
    out
}

type Criterion = (u8, &'static str, fn() -> Outcome, Option<u64>);

fn main() {
    let criteria: [Criterion; 8] = [
        (1, "nested announcement split", criterion_1, Some(1)),
        (2, "partition exact cover", criterion_2, Some(60)),
        (3, "selection correctness", criterion_3, Some(30)),
        (4, "greedy efficiency optimality", criterion_4, Some(60)),
        (5, "hitrate oracle equivalence", criterion_5, Some(30)),
        (6, "mode dominance", criterion_6, None),
        (7, "scale smoke test", criterion_7, None),
        (8, "determinism", criterion_8, None),
    ];
    let filter: Vec<u8> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failed = 0;
    for (id, name, run, limit) in criteria {
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let mut outcome = run();
        let elapsed = start.elapsed();
        if let Some(secs) = limit {
            outcome.check(elapsed < Duration::from_secs(secs), || {
                format!("took {elapsed:.2?}, limit {secs}s")
            });
        }
        let pass = outcome.failures.is_empty();
        failed += usize::from(!pass);
        println!(
            "criterion {id} {name}: {} ({:.2}s) {}",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            outcome.notes
        );
        for f in outcome.failures.iter().filter(|f| !f.is_empty()) {
            println!("    {f}");
        }
        if outcome.failures.len() > 5 {
            println!("    ... {} failures in total", outcome.failures.len());
        }
    }
    if failed > 0 {
        println!("acceptance: {failed} criteria failed");
        std::process::exit(1);
    }
    println!("acceptance: all criteria passed");
}
