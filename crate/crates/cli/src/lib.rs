//! Subcommand implementations behind the `tceer` binary.
//!
//! Each command writes its outputs to disk and returns a report whose
//! `Display` form is what the binary prints. Everything printed is also
//! written to a file in the output directory.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use tceer_core::{
    fmt_rounds, run_router, trace_source, Lifetime, NodeId, RouteTrace, RouterKind, RunOptions, SimConfig,
};

/// Loads a scenario (or the defaults when `path` is `None`), then applies
/// `key=value` overrides in order.
pub fn load_config(path: Option<&Path>, overrides: &[String]) -> Result<SimConfig> {
    let mut config = match path {
        Some(p) => SimConfig::from_file(p).with_context(|| format!("loading {}", p.display()))?,
        None => SimConfig::default(),
    };
    for o in overrides {
        config.apply_override(o)?;
    }
    config.validate()?;
    Ok(config)
}

/// Parses `7`, `1-10` or `1,4,9` (ranges may be mixed into lists).
pub fn parse_seeds(text: &str) -> Result<Vec<u64>> {
    let mut seeds = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b): (u64, u64) = (a.trim().parse()?, b.trim().parse()?);
                if a > b {
                    bail!("empty seed range `{part}`");
                }
                seeds.extend(a..=b);
            }
            None => seeds.push(part.parse().with_context(|| format!("bad seed `{part}`"))?),
        }
    }
    if seeds.is_empty() {
        bail!("no seeds given");
    }
    Ok(seeds)
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
}

fn prepare_out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub out_dir: PathBuf,
    pub lifetime: Lifetime,
    pub delivered: u64,
    pub packets: u64,
    pub blocked: Vec<NodeId>,
    pub malicious: Vec<NodeId>,
    pub energy_consumed: f64,
}

impl fmt::Display for RunReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |ids: &[NodeId]| ids.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ");
        writeln!(f, "rounds-to-1%-dead: {}", fmt_rounds(self.lifetime.first_dead))?;
        writeln!(f, "rounds-to-50%-dead: {}", fmt_rounds(self.lifetime.half_dead))?;
        writeln!(f, "rounds-to-100%-dead: {}", fmt_rounds(self.lifetime.all_dead))?;
        writeln!(f, "packets delivered: {} of {}", self.delivered, self.packets)?;
        writeln!(f, "energy consumed (J): {}", self.energy_consumed)?;
        writeln!(f, "malicious: [{}]", list(&self.malicious))?;
        write!(f, "blocked: [{}]", list(&self.blocked))
    }
}

/// Runs TCEER on `config` and writes rounds.csv, routes.txt, trust.csv,
/// resolved-config.txt and summary.txt into `out_dir`, plus topology.txt
/// when asked.
pub fn cmd_run(config: &SimConfig, out_dir: &Path, dump_topology: bool) -> Result<RunReport> {
    prepare_out_dir(out_dir)?;
    let output = run_router(config, RouterKind::Tceer, RunOptions::default())?;
    write(out_dir, "resolved-config.txt", &config.to_scenario_string())?;
    write(out_dir, "rounds.csv", &output.rounds_csv())?;
    write(out_dir, "routes.txt", &output.routes_text())?;
    write(out_dir, "trust.csv", &output.trust_csv())?;
    if dump_topology {
        write(out_dir, "topology.txt", &output.topology.to_text())?;
    }

    let report = RunReport {
        out_dir: out_dir.to_path_buf(),
        lifetime: output.lifetime(),
        delivered: output.rounds.iter().map(|r| r.delivered as u64).sum(),
        packets: output.traces.len() as u64,
        blocked: output.blocked.clone(),
        malicious: output.malicious.clone(),
        energy_consumed: output.energy_consumed,
    };
    write(out_dir, "summary.txt", &format!("{report}\n"))?;
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompareRow {
    pub seed: u64,
    pub tceer_r50: Option<u64>,
    pub baseline_r50: Option<u64>,
}

impl CompareRow {
    /// TCEER lasts at least as long. A mark that was never reached counts
    /// as later than any round.
    pub fn tceer_at_least_baseline(&self) -> bool {
        self.tceer_r50.unwrap_or(u64::MAX) >= self.baseline_r50.unwrap_or(u64::MAX)
    }

    fn csv_line(&self) -> String {
        let cell = |r: Option<u64>| r.map(|r| r.to_string()).unwrap_or_default();
        format!("{},{},{}", self.seed, cell(self.tceer_r50), cell(self.baseline_r50))
    }
}

#[derive(Debug, Clone)]
pub struct CompareReport {
    pub rows: Vec<CompareRow>,
}

impl CompareReport {
    pub const CSV_HEADER: &'static str = "seed,tceer_r50,baseline_r50";

    pub fn wins(&self) -> usize {
        self.rows
            .iter()
            .filter(|r| r.tceer_at_least_baseline() && r.tceer_r50 != r.baseline_r50)
            .count()
    }

    pub fn ties(&self) -> usize {
        self.rows.iter().filter(|r| r.tceer_r50 == r.baseline_r50).count()
    }

    pub fn losses(&self) -> usize {
        self.rows.len() - self.wins() - self.ties()
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        for r in &self.rows {
            out.push_str(&r.csv_line());
            out.push('\n');
        }
        out
    }
}

impl fmt::Display for CompareReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "seed  tceer_r50  baseline_r50")?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<5} {:<10} {}",
                r.seed,
                fmt_rounds(r.tceer_r50),
                fmt_rounds(r.baseline_r50)
            )?;
        }
        write!(
            f,
            "tceer wins: {}, ties: {}, losses: {} (of {} seeds)",
            self.wins(),
            self.ties(),
            self.losses(),
            self.rows.len()
        )
    }
}

/// Runs TCEER and the greedy baseline for every seed and writes
/// compare.csv and summary.txt. Seeds run in parallel; rows keep the
/// order of `seeds`.
pub fn cmd_compare(config: &SimConfig, seeds: &[u64], out_dir: &Path) -> Result<CompareReport> {
    prepare_out_dir(out_dir)?;
    let options = RunOptions { skip_trust_log: true };
    let rows = seeds
        .par_iter()
        .map(|&seed| -> Result<CompareRow> {
            let cfg = SimConfig { seed, ..config.clone() };
            let tceer = run_router(&cfg, RouterKind::Tceer, options)?;
            let baseline = run_router(&cfg, RouterKind::Greedy, options)?;
            log::info!("seed {seed} done");
            Ok(CompareRow {
                seed,
                tceer_r50: tceer.lifetime().half_dead,
                baseline_r50: baseline.lifetime().half_dead,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let report = CompareReport { rows };
    write(out_dir, "resolved-config.txt", &config.to_scenario_string())?;
    write(out_dir, "compare.csv", &report.to_csv())?;
    write(out_dir, "summary.txt", &format!("{report}\n"))?;
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct TraceReport {
    pub traces: Vec<RouteTrace>,
}

impl TraceReport {
    pub fn distinct_routes(&self) -> usize {
        self.traces.iter().map(|t| &t.hops).collect::<BTreeSet<_>>().len()
    }
}

impl fmt::Display for TraceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in &self.traces {
            writeln!(f, "{t}")?;
        }
        write!(f, "distinct routes: {}", self.distinct_routes())
    }
}

/// Sends `packets` packets from `source` and reports their paths. With
/// `out_dir`, the report is also written to trace.txt.
pub fn cmd_trace(
    config: &SimConfig,
    source: NodeId,
    packets: usize,
    freeze_state: bool,
    out_dir: Option<&Path>,
) -> Result<TraceReport> {
    let report = TraceReport {
        traces: trace_source(config, source, packets, freeze_state)?,
    };
    if let Some(dir) = out_dir {
        prepare_out_dir(dir)?;
        write(dir, "trace.txt", &format!("{report}\n"))?;
    }
    Ok(report)
}
