//! Data files: CSV for traces and profiles, JSON lines for fault events,
//! JSON for metrics and summaries.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use resilient_sdc::fault::{FaultEvent, FaultKind};
use resilient_sdc::problems::IgnitionSurrogate;
use resilient_sdc::{SweepTrace, Trajectory};
use serde::Serialize;

use crate::error::CliError;

fn csv_writer(path: &Path) -> Result<csv::Writer<File>, CliError> {
    csv::Writer::from_path(path).map_err(|e| csv_error(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    let source = match e.into_kind() {
        csv::ErrorKind::Io(io) => io,
        other => std::io::Error::other(format!("{other:?}")),
    };
    CliError::Io { path: path.to_path_buf(), source }
}

pub fn write_csv<R: Serialize>(path: &Path, rows: impl IntoIterator<Item = R>) -> Result<(), CliError> {
    let mut w = csv_writer(path)?;
    for row in rows {
        w.serialize(row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(CliError::io(path))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable record");
    text.push('\n');
    std::fs::write(path, text).map_err(CliError::io(path))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualRow {
    pub step: usize,
    pub sweep: usize,
    pub residual: f64,
}

/// One row per (step, sweep); sweep 1 is the predictor.
pub fn residual_rows(traces: &[SweepTrace]) -> Vec<ResidualRow> {
    traces
        .iter()
        .enumerate()
        .flat_map(|(step, t)| {
            t.residual_maxnorms
                .iter()
                .enumerate()
                .map(move |(k, &residual)| ResidualRow { step, sweep: k + 1, residual })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileRow {
    pub x: f64,
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(rename = "Y")]
    pub y: f64,
}

pub fn profile_rows(p: &IgnitionSurrogate, state: &[f64]) -> Vec<ProfileRow> {
    let n = p.n_grid;
    (0..n).map(|i| ProfileRow { x: p.x(i), t: state[i], y: state[n + i] }).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearRow {
    pub t: f64,
    pub y: f64,
    pub exact: f64,
    pub error: f64,
}

pub fn linear_rows(traj: &Trajectory, exact: impl Fn(f64) -> f64) -> Vec<LinearRow> {
    traj.times
        .iter()
        .zip(&traj.states)
        .map(|(&t, s)| {
            let e = exact(t);
            LinearRow { t, y: s[0], exact: e, error: (s[0] - e).abs() }
        })
        .collect()
}

/// Event log record. Values are also given as raw IEEE-754 bits so that a
/// flip can be checked exactly.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventRecord<'a> {
    pub run_id: u64,
    pub sim_time: f64,
    pub step: usize,
    pub sweep: usize,
    pub node: usize,
    pub stream: usize,
    pub call_index: u64,
    pub kernel_id: &'a str,
    pub offset: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bit: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    pub old: f64,
    pub new: f64,
    pub old_bits: String,
    pub new_bits: String,
}

impl<'a> EventRecord<'a> {
    pub fn new(run_id: u64, e: &'a FaultEvent) -> Self {
        let (bit, scale) = match e.kind {
            FaultKind::BitFlip(b) => (Some(b), None),
            FaultKind::Scale(s) => (None, Some(s)),
        };
        EventRecord {
            run_id,
            sim_time: e.site.time,
            step: e.site.step,
            sweep: e.site.sweep,
            node: e.site.node,
            stream: e.stream,
            call_index: e.call_index,
            kernel_id: e.kernel,
            offset: e.offset,
            bit,
            scale,
            old: e.old_value,
            new: e.new_value,
            old_bits: format!("{:#018x}", e.old_value.to_bits()),
            new_bits: format!("{:#018x}", e.new_value.to_bits()),
        }
    }
}

pub fn write_events(path: &Path, run_id: u64, events: &[FaultEvent]) -> Result<(), CliError> {
    let file = File::create(path).map_err(CliError::io(path))?;
    let mut w = BufWriter::new(file);
    for e in events {
        let line = serde_json::to_string(&EventRecord::new(run_id, e)).expect("serializable event");
        writeln!(w, "{line}").map_err(CliError::io(path))?;
    }
    w.flush().map_err(CliError::io(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use resilient_sdc::EvalSite;

    #[test]
    fn residual_rows_number_sweeps_from_one() {
        let t = SweepTrace { residual_maxnorms: vec![1.0, 0.1], sweeps_taken: 2, ..Default::default() };
        let rows = residual_rows(&[t.clone(), t]);
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[3], ResidualRow { step: 1, sweep: 2, residual: 0.1 });
    }

    #[test]
    fn event_record_carries_bits() {
        let e = FaultEvent {
            call_index: 7,
            stream: 0,
            kernel: "reaction_rate",
            offset: 3,
            kind: FaultKind::BitFlip(63),
            old_value: 1.0,
            new_value: -1.0,
            site: EvalSite { step: 2, sweep: 3, node: 1, time: 0.5 },
        };
        let json = serde_json::to_value(EventRecord::new(9, &e)).unwrap();
        assert_eq!(json["old_bits"], "0x3ff0000000000000");
        assert_eq!(json["new_bits"], "0xbff0000000000000");
        assert_eq!(json["bit"], 63);
        assert!(json.get("scale").is_none());
        assert_eq!(json["kernel_id"], "reaction_rate");
    }

    #[test]
    fn csv_header_uses_column_names() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        write_csv(&path, [ProfileRow { x: 0.5, t: 1000.0, y: 1.0 }]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().next(), Some("x,T,Y"));
    }
}
