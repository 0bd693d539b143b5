// SPDX-License-Identifier: Apache-2.0
// Copyright The TASS Toolkit Authors

//! The `tass` command line.
//!
//! Every command writes its data files atomically, then a JSON manifest next
//! to its primary output. Data files never contain timestamps.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::evaluator::{
    check_same_protocol, compare_series, prefix_length_histogram, simulate_hitlist, simulate_tass,
    HitrateSeries,
};
use crate::ingest::{self, ScanSnapshot};
use crate::manifest::{default_manifest_path, resolve_recorded, sha256_hex, RunManifest};
use crate::partition::{build_partition, PartitionMode, RoutedPartition};
use crate::report;
use crate::selector::{select_from_snapshot, Phi, SelectionResult};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Output(String),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Input(_) => "input",
            CliError::Data(_) => "data",
            CliError::Output(_) => "output",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }

    /// Single-line JSON suitable for stderr.
    pub fn to_json_line(&self) -> String {
        serde_json::json!({ "error": self.kind(), "message": self.to_string() }).to_string()
    }
}

#[derive(Debug, Parser)]
#[command(name = "tass", version, about = "Topology-aware scan target planning")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Less,
    More,
}

impl From<ModeArg> for PartitionMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Less => PartitionMode::LessSpecific,
            ModeArg::More => PartitionMode::MoreSpecific,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Tass,
    Hitlist,
    Both,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a disjoint prefix partition from a pfx2as table.
    Partition {
        /// pfx2as file, or `-` for standard input.
        #[arg(long)]
        pfx2as: PathBuf,
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long)]
        out: PathBuf,
        /// Defaults to `<out>.manifest.json`.
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Rank responsive prefixes of a seed scan and select targets.
    Select {
        #[arg(long)]
        partition: PathBuf,
        /// Seed snapshot, or `-` for standard input.
        #[arg(long)]
        snapshot: PathBuf,
        /// Target host coverage in (0, 1], e.g. 0.95 or 19/20.
        #[arg(long)]
        phi: String,
        #[arg(long)]
        stats: PathBuf,
        #[arg(long)]
        targets: PathBuf,
        /// Partition mode; read from the partition's manifest when omitted.
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Defaults to `<targets>.manifest.json`.
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Replay later snapshots against a selection and a hitlist.
    Evaluate {
        /// Manifest written by `tass select`.
        #[arg(long)]
        targets_manifest: PathBuf,
        #[arg(long, num_args = 1.., required = true)]
        snapshots: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "both")]
        strategy: StrategyArg,
        #[arg(long)]
        out: PathBuf,
        /// Delta report for `--strategy both`; defaults to `<out>` with a
        /// `.delta.csv` suffix.
        #[arg(long)]
        delta: Option<PathBuf>,
        /// Defaults to `<out>.manifest.json`.
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Host counts per partition prefix length.
    Histogram {
        #[arg(long)]
        partition: PathBuf,
        #[arg(long)]
        snapshot: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
}

/// Parse arguments and run. Returns the text for stdout, which for `--help`
/// is the help page.
pub fn run<I, T>(args: I) -> Result<String, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => match e.kind() {
            clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                return Ok(e.to_string())
            }
            _ => return Err(CliError::Usage(first_line(&e.to_string()))),
        },
    };
    execute(cli.command)
}

fn first_line(s: &str) -> String {
    s.lines()
        .find(|l| !l.trim().is_empty())
        .unwrap_or("invalid arguments")
        .trim_start_matches("error: ")
        .to_string()
}

pub fn execute(command: Command) -> Result<String, CliError> {
    match command {
        Command::Partition {
            pfx2as,
            mode,
            out,
            manifest,
        } => cmd_partition(&pfx2as, mode.into(), &out, manifest),
        Command::Select {
            partition,
            snapshot,
            phi,
            stats,
            targets,
            mode,
            manifest,
        } => cmd_select(&SelectArgs {
            partition,
            snapshot,
            phi,
            stats,
            targets,
            mode: mode.map(Into::into),
            manifest,
        }),
        Command::Evaluate {
            targets_manifest,
            snapshots,
            strategy,
            out,
            delta,
            manifest,
        } => cmd_evaluate(&EvaluateArgs {
            targets_manifest,
            snapshots,
            strategy,
            out,
            delta,
            manifest,
        }),
        Command::Histogram {
            partition,
            snapshot,
            out,
            mode,
            manifest,
        } => cmd_histogram(&partition, &snapshot, &out, mode.map(Into::into), manifest),
    }
}

fn is_stdin(path: &Path) -> bool {
    path.as_os_str() == "-"
}

fn read_input(path: &Path) -> Result<Vec<u8>, CliError> {
    let result = if is_stdin(path) {
        let mut buf = Vec::new();
        io::stdin().read_to_end(&mut buf).map(|_| buf)
    } else {
        fs::read(path)
    };
    result.map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

fn source_id(path: &Path) -> String {
    if is_stdin(path) {
        return "stdin".to_string();
    }
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Render into memory, then write via a temp file in the target directory
/// and rename over the destination.
fn write_atomic(path: &Path, content: &[u8]) -> Result<(), CliError> {
    let err = |e: &dyn std::fmt::Display| {
        CliError::Output(format!("cannot write {}: {e}", path.display()))
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| err(&e))?;
    {
        let mut w = BufWriter::new(tmp.as_file_mut());
        w.write_all(content).map_err(|e| err(&e))?;
        w.flush().map_err(|e| err(&e))?;
    }
    tmp.persist(path).map_err(|e| err(&e.error))?;
    Ok(())
}

fn render(f: impl FnOnce(&mut Vec<u8>) -> io::Result<()>) -> Vec<u8> {
    let mut buf = Vec::new();
    f(&mut buf).expect("writing to memory cannot fail");
    buf
}

fn load_snapshot_file(path: &Path) -> Result<(ScanSnapshot, Vec<u8>), CliError> {
    let bytes = read_input(path)?;
    let (snapshot, _, report) =
        ingest::load_snapshot_with_header(bytes.as_slice(), &source_id(path))
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    if report.rejected > 0 {
        eprintln!(
            "warning: {}: skipped {} malformed lines",
            path.display(),
            report.rejected
        );
    }
    Ok((snapshot, bytes))
}

fn partition_mode_from_manifest(partition: &Path) -> Option<PartitionMode> {
    let text = fs::read_to_string(default_manifest_path(partition)).ok()?;
    let manifest = RunManifest::from_json(&text).ok()?;
    manifest.parameters.get("mode")?.parse().ok()
}

fn resolve_mode(
    explicit: Option<PartitionMode>,
    partition: &Path,
) -> Result<PartitionMode, CliError> {
    explicit
        .or_else(|| partition_mode_from_manifest(partition))
        .ok_or_else(|| {
            CliError::Usage(format!(
                "partition mode unknown for {}: pass --mode or keep its manifest alongside",
                partition.display()
            ))
        })
}

fn load_partition_file(
    path: &Path,
    mode: PartitionMode,
) -> Result<(RoutedPartition, Vec<u8>), CliError> {
    let bytes = read_input(path)?;
    let partition = ingest::load_partition(bytes.as_slice(), mode)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Ok((partition, bytes))
}

fn percent(part: u64, whole: u64) -> String {
    if whole == 0 {
        return "0.00".to_string();
    }
    format!("{:.2}", part as f64 * 100.0 / whole as f64)
}

pub fn cmd_partition(
    pfx2as: &Path,
    mode: PartitionMode,
    out: &Path,
    manifest_path: Option<PathBuf>,
) -> Result<String, CliError> {
    let bytes = read_input(pfx2as)?;
    let (table, load) = ingest::load_pfx2as(bytes.as_slice())
        .map_err(|e| CliError::Input(format!("{}: {e}", pfx2as.display())))?;
    if table.is_empty() {
        return Err(CliError::Data(format!(
            "{}: no valid pfx2as entries ({} lines, {} rejected)",
            pfx2as.display(),
            load.lines,
            load.rejected
        )));
    }
    let partition = build_partition(&table, mode);
    let summary = table.summary();
    let data = render(|b| report::write_partition(&partition, b));
    write_atomic(out, &data)?;

    let mut m = RunManifest::new("partition");
    m.param("mode", mode)
        .input("pfx2as", pfx2as, &bytes)
        .output("partition", out, &data)
        .note("announced_prefixes", summary.announced)
        .note("m_prefixes", summary.more_specific)
        .note("partition_prefixes", partition.len())
        .note("total_addresses", partition.total_addresses())
        .note("partition_id", partition.id());
    let manifest_path = manifest_path.unwrap_or_else(|| default_manifest_path(out));
    write_atomic(&manifest_path, m.to_json().as_bytes())?;

    let mut s = String::new();
    let _ = writeln!(
        s,
        "lines={} accepted={} duplicates={} rejected={}",
        load.lines, load.accepted, load.duplicates, load.rejected
    );
    let _ = writeln!(s, "announced_prefixes={}", summary.announced);
    let _ = writeln!(
        s,
        "m_prefixes={} ({}%)",
        summary.more_specific,
        percent(summary.more_specific as u64, summary.announced as u64)
    );
    let _ = writeln!(
        s,
        "m_prefix_addresses={} ({}% of announced space)",
        summary.more_specific_addresses,
        percent(summary.more_specific_addresses, summary.announced_addresses)
    );
    let _ = writeln!(s, "mode={mode}");
    let _ = writeln!(s, "partition_prefixes={}", partition.len());
    let _ = writeln!(s, "total_addresses={}", partition.total_addresses());
    Ok(s)
}

pub struct SelectArgs {
    pub partition: PathBuf,
    pub snapshot: PathBuf,
    pub phi: String,
    pub stats: PathBuf,
    pub targets: PathBuf,
    pub mode: Option<PartitionMode>,
    pub manifest: Option<PathBuf>,
}

pub fn cmd_select(args: &SelectArgs) -> Result<String, CliError> {
    let phi: Phi = args
        .phi
        .parse()
        .map_err(|e: crate::selector::SelectorError| CliError::Usage(e.to_string()))?;
    let mode = resolve_mode(args.mode, &args.partition)?;
    let (partition, partition_bytes) = load_partition_file(&args.partition, mode)?;
    let (seed, seed_bytes) = load_snapshot_file(&args.snapshot)?;
    let (selection, seed_summary) = select_from_snapshot(&partition, &seed, phi).map_err(|e| {
        let hint = match e {
            crate::selector::SelectorError::NoResponsivePrefixes => {
                " (no routed hosts in seed snapshot)"
            }
            _ => "",
        };
        CliError::Data(format!("{}: {e}{hint}", args.snapshot.display()))
    })?;

    let targets = render(|b| report::write_target_list(&selection, b));
    let stats = render(|b| report::write_statistics(&selection, b));
    write_atomic(&args.targets, &targets)?;
    write_atomic(&args.stats, &stats)?;

    let host_cov = report::fixed6(selection.cum_host_coverage());
    let addr_cov = report::fixed6(selection.cum_address_coverage());
    let mut m = RunManifest::new("select");
    m.param("mode", mode)
        .param("phi", phi)
        .input("partition", &args.partition, &partition_bytes)
        .input("snapshot", &args.snapshot, &seed_bytes)
        .output("targets", &args.targets, &targets)
        .output("stats", &args.stats, &stats)
        .note("protocol", &seed.protocol)
        .note("captured_at", &seed.captured_at)
        .note("total_hosts", selection.total_hosts)
        .note("unrouted", seed_summary.unrouted)
        .note("k", selection.k)
        .note("cum_host_coverage", &host_cov)
        .note("cum_addr_coverage", &addr_cov)
        .note("partition_id", partition.id());
    let manifest_path = args
        .manifest
        .clone()
        .unwrap_or_else(|| default_manifest_path(&args.targets));
    write_atomic(&manifest_path, m.to_json().as_bytes())?;

    let mut s = String::new();
    let _ = writeln!(s, "snapshot_addresses={}", seed_summary.snapshot_size);
    let _ = writeln!(s, "N={}", selection.total_hosts);
    let _ = writeln!(s, "unrouted={}", seed_summary.unrouted);
    let _ = writeln!(
        s,
        "responsive_prefixes={}",
        seed_summary.responsive_prefixes
    );
    let _ = writeln!(s, "phi={phi}");
    let _ = writeln!(s, "k={}", selection.k);
    let _ = writeln!(s, "cum_host_coverage={host_cov}");
    let _ = writeln!(s, "cum_addr_coverage={addr_cov}");
    Ok(s)
}

pub struct EvaluateArgs {
    pub targets_manifest: PathBuf,
    pub snapshots: Vec<PathBuf>,
    pub strategy: StrategyArg,
    pub out: PathBuf,
    pub delta: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
}

/// Everything needed to replay a selection, recovered from its manifest.
struct SelectionContext {
    partition: RoutedPartition,
    seed: ScanSnapshot,
    selection: SelectionResult,
    recorded: Vec<(String, PathBuf, Vec<u8>)>,
}

fn recorded_file(
    manifest: &RunManifest,
    manifest_path: &Path,
    role: &str,
    output: bool,
) -> Result<(PathBuf, Vec<u8>), CliError> {
    let entry = if output {
        manifest.find_output(role)
    } else {
        manifest.find_input(role)
    }
    .ok_or_else(|| CliError::Data(format!("{}: no {role} recorded", manifest_path.display())))?;
    let path = resolve_recorded(&entry.path, manifest_path);
    let bytes = fs::read(&path).map_err(|e| {
        let what = if role == "snapshot" {
            "missing seed"
        } else {
            "missing input"
        };
        CliError::Input(format!(
            "{what}: cannot read {role} {}: {e}",
            path.display()
        ))
    })?;
    if sha256_hex(&bytes) != entry.sha256 {
        return Err(CliError::Data(format!(
            "{role} {} changed since the selection was made (sha256 mismatch)",
            path.display()
        )));
    }
    Ok((path, bytes))
}

fn load_selection_context(manifest_path: &Path) -> Result<SelectionContext, CliError> {
    let text = fs::read_to_string(manifest_path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", manifest_path.display())))?;
    let manifest = RunManifest::from_json(&text).map_err(|e| {
        CliError::Input(format!("{}: not a manifest: {e}", manifest_path.display()))
    })?;
    if manifest.command != "select" {
        return Err(CliError::Data(format!(
            "{}: written by `{}`, expected a `select` manifest",
            manifest_path.display(),
            manifest.command
        )));
    }
    let param = |key: &str| {
        manifest.parameters.get(key).ok_or_else(|| {
            CliError::Data(format!(
                "{}: missing parameter {key}",
                manifest_path.display()
            ))
        })
    };
    let mode: PartitionMode = param("mode")?
        .parse()
        .map_err(|e: crate::partition::PartitionError| CliError::Data(e.to_string()))?;
    let phi: Phi = param("phi")?
        .parse()
        .map_err(|e: crate::selector::SelectorError| CliError::Data(e.to_string()))?;

    let (partition_path, partition_bytes) =
        recorded_file(&manifest, manifest_path, "partition", false)?;
    let (seed_path, seed_bytes) = recorded_file(&manifest, manifest_path, "snapshot", false)?;
    let (targets_path, targets_bytes) = recorded_file(&manifest, manifest_path, "targets", true)?;

    let partition = ingest::load_partition(partition_bytes.as_slice(), mode)
        .map_err(|e| CliError::Input(format!("{}: {e}", partition_path.display())))?;
    let (seed, _, _) =
        ingest::load_snapshot_with_header(seed_bytes.as_slice(), &source_id(&seed_path))
            .map_err(|e| CliError::Input(format!("{}: {e}", seed_path.display())))?;
    let targets = ingest::load_prefix_list(targets_bytes.as_slice())
        .map_err(|e| CliError::Input(format!("{}: {e}", targets_path.display())))?;

    let (selection, _) = select_from_snapshot(&partition, &seed, phi)
        .map_err(|e| CliError::Data(format!("{}: {e}", seed_path.display())))?;
    if selection.target_list() != targets {
        return Err(CliError::Data(format!(
            "{} does not match the selection recomputed from its manifest",
            targets_path.display()
        )));
    }
    Ok(SelectionContext {
        partition,
        seed,
        selection,
        recorded: vec![
            ("partition".into(), partition_path, partition_bytes),
            ("seed".into(), seed_path, seed_bytes),
            ("targets".into(), targets_path, targets_bytes),
        ],
    })
}

fn delta_path(out: &Path) -> PathBuf {
    let s = out.to_string_lossy();
    match s.strip_suffix(".csv") {
        Some(stem) => PathBuf::from(format!("{stem}.delta.csv")),
        None => PathBuf::from(format!("{s}.delta.csv")),
    }
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<String, CliError> {
    let ctx = load_selection_context(&args.targets_manifest)?;

    let mut later = Vec::with_capacity(args.snapshots.len());
    let mut later_bytes = Vec::with_capacity(args.snapshots.len());
    for path in &args.snapshots {
        let (snapshot, bytes) = load_snapshot_file(path)?;
        later.push(snapshot);
        later_bytes.push((path.clone(), bytes));
    }
    // Stable, so snapshots sharing a timestamp keep their command-line order.
    later.sort_by(|a, b| a.captured_at.cmp(&b.captured_at));
    check_same_protocol(&ctx.seed, &later).map_err(|e| CliError::Data(e.to_string()))?;

    let mut series: Vec<HitrateSeries> = Vec::new();
    if matches!(args.strategy, StrategyArg::Tass | StrategyArg::Both) {
        series.push(
            simulate_tass(&ctx.selection, &ctx.partition, &later)
                .map_err(|e| CliError::Data(e.to_string()))?,
        );
    }
    if matches!(args.strategy, StrategyArg::Hitlist | StrategyArg::Both) {
        series
            .push(simulate_hitlist(&ctx.seed, &later).map_err(|e| CliError::Data(e.to_string()))?);
    }

    let data = render(|b| {
        report::write_series_header(&mut *b)?;
        for s in &series {
            report::write_series_rows(s, &mut *b)?;
        }
        Ok(())
    });
    let delta = match (args.strategy, series.as_slice()) {
        (StrategyArg::Both, [tass, hitlist]) => {
            let report =
                compare_series(tass, hitlist).map_err(|e| CliError::Data(e.to_string()))?;
            let path = args.delta.clone().unwrap_or_else(|| delta_path(&args.out));
            Some((path, render(|b| report::write_delta_report(&report, b))))
        }
        _ => None,
    };

    write_atomic(&args.out, &data)?;
    if let Some((path, bytes)) = &delta {
        write_atomic(path, bytes)?;
    }

    let mut m = RunManifest::new("evaluate");
    m.param("strategy", format!("{:?}", args.strategy).to_lowercase())
        .param("phi", ctx.selection.phi_target)
        .param("mode", ctx.selection.partition_mode);
    m.input(
        "targets_manifest",
        &args.targets_manifest,
        &fs::read(&args.targets_manifest).unwrap_or_default(),
    );
    for (role, path, bytes) in &ctx.recorded {
        m.input(role, path, bytes);
    }
    for (path, bytes) in &later_bytes {
        m.input("snapshot", path, bytes);
    }
    m.output("series", &args.out, &data);
    if let Some((path, bytes)) = &delta {
        m.output("delta", path, bytes);
    }
    let manifest_path = args
        .manifest
        .clone()
        .unwrap_or_else(|| default_manifest_path(&args.out));
    write_atomic(&manifest_path, m.to_json().as_bytes())?;

    let mut s = String::new();
    for ser in &series {
        for pt in &ser.points {
            let rate = pt
                .hitrate()
                .map_or_else(|| report::UNDEFINED.to_string(), report::fixed6);
            let _ = writeln!(
                s,
                "{} {} {} hitrate={}",
                ser.strategy, pt.snapshot_time, pt.snapshot_id, rate
            );
        }
    }
    Ok(s)
}

pub fn cmd_histogram(
    partition: &Path,
    snapshot: &Path,
    out: &Path,
    mode: Option<PartitionMode>,
    manifest_path: Option<PathBuf>,
) -> Result<String, CliError> {
    // The histogram does not depend on the mode; fall back to `more`.
    let mode = mode
        .or_else(|| partition_mode_from_manifest(partition))
        .unwrap_or(PartitionMode::MoreSpecific);
    let (part, part_bytes) = load_partition_file(partition, mode)?;
    let (snap, snap_bytes) = load_snapshot_file(snapshot)?;
    let hist = prefix_length_histogram(&part, &snap);
    let data = render(|b| report::write_histogram(&hist, b));
    write_atomic(out, &data)?;

    let mut m = RunManifest::new("histogram");
    m.input("partition", partition, &part_bytes)
        .input("snapshot", snapshot, &snap_bytes)
        .output("histogram", out, &data);
    let manifest_path = manifest_path.unwrap_or_else(|| default_manifest_path(out));
    write_atomic(&manifest_path, m.to_json().as_bytes())?;

    Ok(format!(
        "snapshot_addresses={} routed={} unrouted={}\n",
        snap.len(),
        hist.routed(),
        hist.unrouted
    ))
}
