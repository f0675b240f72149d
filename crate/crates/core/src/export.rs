//! Snapshot serialization: the canonical CSV table, per-snapshot detail
//! tables and a JSON mirror.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{Snapshot, HISTOGRAM_GROUPS};

/// Column order of `snapshots.csv`.
pub const SNAPSHOT_COLUMNS: [&str; 12] = [
    "time",
    "size",
    "interactions",
    "phase_normal",
    "phase_waiting",
    "phase_updating",
    "est_min",
    "est_max",
    "est_mode",
    "est_mode_count",
    "global_fmv",
    "max_stored_integer",
];

/// One row of `snapshots.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotRow {
    pub time: f64,
    pub size: usize,
    pub interactions: u64,
    pub phase_normal: u64,
    pub phase_waiting: u64,
    pub phase_updating: u64,
    pub est_min: u32,
    pub est_max: u32,
    pub est_mode: u32,
    pub est_mode_count: u64,
    pub global_fmv: u32,
    pub max_stored_integer: u32,
}

impl From<&Snapshot> for SnapshotRow {
    fn from(s: &Snapshot) -> Self {
        SnapshotRow {
            time: s.time,
            size: s.size,
            interactions: s.interactions,
            phase_normal: s.phase_counts[0],
            phase_waiting: s.phase_counts[1],
            phase_updating: s.phase_counts[2],
            est_min: s.estimate_min,
            est_max: s.estimate_max,
            est_mode: s.estimate_mode,
            est_mode_count: s.estimate_mode_count,
            global_fmv: s.global_fmv,
            max_stored_integer: s.max_stored_integer,
        }
    }
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::new(std::io::ErrorKind::InvalidData, format!("{other:?}"))),
    }
}

pub fn write_snapshots_csv<W: Write>(snaps: &[Snapshot], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for s in snaps {
        w.serialize(SnapshotRow::from(s)).map_err(csv_error)?;
    }
    if snaps.is_empty() {
        w.write_record(SNAPSHOT_COLUMNS).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_snapshots_csv<R: Read>(input: R) -> Result<Vec<SnapshotRow>> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers().map_err(csv_error)?.clone();
    if headers.iter().ne(SNAPSHOT_COLUMNS) {
        return Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            format!("unexpected header {headers:?}"),
        )));
    }
    r.deserialize().map(|row| row.map_err(csv_error)).collect()
}

/// `group,count` rows for groups 1..=64 followed by an `overflow` row.
pub fn write_group_histogram_csv<W: Write>(snap: &Snapshot, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["group", "count"]).map_err(csv_error)?;
    for g in 1..=HISTOGRAM_GROUPS as u32 {
        w.write_record([g.to_string(), snap.group_histogram.count(g).to_string()])
            .map_err(csv_error)?;
    }
    w.write_record(["overflow".to_string(), snap.group_histogram.overflow.to_string()])
        .map_err(csv_error)?;
    w.flush()?;
    Ok(())
}

/// `index,min_signal` rows, 1-indexed.
pub fn write_min_signals_csv<W: Write>(snap: &Snapshot, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["index", "min_signal"]).map_err(csv_error)?;
    for (i, v) in snap.min_signal_profile.iter().enumerate() {
        w.write_record([(i + 1).to_string(), v.to_string()]).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_snapshots_json<W: Write>(snaps: &[Snapshot], mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, snaps).map_err(|e| Error::Io(e.into()))?;
    out.write_all(b"\n")?;
    Ok(())
}
