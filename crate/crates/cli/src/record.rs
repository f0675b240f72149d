//! Run-level summaries written next to each snapshot table.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use popdyn::export::{write_group_histogram_csv, write_min_signals_csv, write_snapshots_csv, write_snapshots_json};
use popdyn::metrics::{convergence_time, holding_time};
use popdyn::{CorrectnessBand, Holding, Scenario, Snapshot};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const SNAPSHOTS_CSV: &str = "snapshots.csv";
pub const SNAPSHOTS_JSON: &str = "snapshots.json";
pub const RUN_RECORD: &str = "run.json";

/// Band used for every convergence and holding figure the CLI reports.
pub const BAND: CorrectnessBand = CorrectnessBand::CountingWindow;

/// Stretch of a run between two adversary events. Period 0 starts at time 0;
/// period `k` starts when event `k - 1` fires.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodSummary {
    pub start: f64,
    pub event: Option<usize>,
    /// Population size at the start of the period.
    pub size: usize,
    /// Time from `start` until the first converged snapshot.
    pub convergence_time: Option<f64>,
    /// How long the estimates stayed in band after converging. Censored when
    /// the period ended first.
    pub holding: Option<Holding>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    /// SHA-256 of the scenario file, hex encoded.
    pub scenario_digest: String,
    pub seed: u64,
    pub snapshots: String,
    pub snapshot_count: usize,
    pub periods: Vec<PeriodSummary>,
}

pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn periods(scenario: &Scenario, snaps: &[Snapshot]) -> Vec<PeriodSummary> {
    let mut starts = vec![(0.0, None)];
    starts.extend(scenario.events.iter().enumerate().map(|(i, e)| (e.at, Some(i))));
    let mut out = Vec::with_capacity(starts.len());
    for (k, &(start, event)) in starts.iter().enumerate() {
        let end = starts.get(k + 1).map_or(f64::INFINITY, |s| s.0);
        // A snapshot that coincides with an event is taken after it fires, so
        // it belongs to the later period.
        let slice: Vec<Snapshot> = snaps
            .iter()
            .filter(|s| s.time >= start - 1e-9 && s.time < end - 1e-9)
            .cloned()
            .collect();
        let size = slice.first().map_or(0, |s| s.size);
        let convergence = convergence_time(&slice, &BAND, start);
        let holding = convergence.map(|c| holding_time(&slice, &BAND, start + c));
        out.push(PeriodSummary { start, event, size, convergence_time: convergence, holding });
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// Writes the snapshot table, optional detail tables and `run.json` into
/// `dir`, which must already exist.
pub fn write_run(
    dir: &Path,
    scenario: &Scenario,
    scenario_digest: &str,
    snaps: &[Snapshot],
    detail: bool,
    format: Format,
) -> popdyn::Result<RunRecord> {
    write_snapshots_csv(snaps, BufWriter::new(File::create(dir.join(SNAPSHOTS_CSV))?))?;
    if format == Format::Json {
        write_snapshots_json(snaps, BufWriter::new(File::create(dir.join(SNAPSHOTS_JSON))?))?;
    }
    if detail {
        for (k, snap) in snaps.iter().enumerate() {
            write_group_histogram_csv(snap, BufWriter::new(File::create(dir.join(format!("group_hist_{k}.csv")))?))?;
            write_min_signals_csv(snap, BufWriter::new(File::create(dir.join(format!("min_signals_{k}.csv")))?))?;
        }
    }
    let record = RunRecord {
        scenario_digest: scenario_digest.to_string(),
        seed: scenario.seed,
        snapshots: SNAPSHOTS_CSV.to_string(),
        snapshot_count: snaps.len(),
        periods: periods(scenario, snaps),
    };
    let mut text = serde_json::to_string_pretty(&record).expect("record serializes");
    text.push('\n');
    fs::write(dir.join(RUN_RECORD), text)?;
    Ok(record)
}
