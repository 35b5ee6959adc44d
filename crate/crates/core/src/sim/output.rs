//! Trace writers. Column orders are fixed; timestamps are integer
//! nanoseconds and absent values are empty cells (CSV) or `null` (JSON).

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;

use super::{FrameRecord, RunOutput};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

pub const FRAME_COLUMNS: [&str; 9] = [
    "flow_id",
    "seq",
    "tc",
    "size",
    "t_talker_ns",
    "t_ue_ingress_ns",
    "t_gnb_egress_ns",
    "t_listener_ns",
    "fate",
];

#[derive(Serialize)]
struct FrameRow {
    flow_id: u32,
    seq: u32,
    tc: u8,
    size: u32,
    t_talker_ns: Option<u64>,
    t_ue_ingress_ns: Option<u64>,
    t_gnb_egress_ns: Option<u64>,
    t_listener_ns: Option<u64>,
    fate: &'static str,
}

impl From<&FrameRecord> for FrameRow {
    fn from(r: &FrameRecord) -> Self {
        FrameRow {
            flow_id: r.flow_id,
            seq: r.seq,
            tc: r.tc,
            size: r.size,
            t_talker_ns: r.t_talker.map(|d| d.as_ns()),
            t_ue_ingress_ns: r.t_ue_ingress.map(|d| d.as_ns()),
            t_gnb_egress_ns: r.t_gnb_egress.map(|d| d.as_ns()),
            t_listener_ns: r.t_listener.map(|d| d.as_ns()),
            fate: r.fate.name(),
        }
    }
}

fn csv_rows<T: Serialize>(rows: impl IntoIterator<Item = T>) -> io::Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(io::Error::other)?;
    }
    w.into_inner().map_err(|e| io::Error::other(e.to_string()))
}

fn json_rows<T: Serialize>(rows: &[T]) -> io::Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(rows).map_err(io::Error::other)?;
    v.push(b'\n');
    Ok(v)
}

pub fn frames_csv(records: &[FrameRecord]) -> io::Result<Vec<u8>> {
    if records.is_empty() {
        let mut v = FRAME_COLUMNS.join(",").into_bytes();
        v.push(b'\n');
        return Ok(v);
    }
    csv_rows(records.iter().map(FrameRow::from))
}

pub fn summary_json<T: Serialize>(summary: &T) -> io::Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(summary).map_err(io::Error::other)?;
    v.push(b'\n');
    Ok(v)
}

fn put(dir: &Path, name: &str, bytes: &[u8]) -> io::Result<()> {
    let mut f = fs::File::create(dir.join(name))?;
    f.write_all(bytes)
}

/// Writes the trace set of one run into `dir`, creating it if needed.
pub fn write_run(dir: &Path, out: &RunOutput, format: Format) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    match format {
        Format::Csv => {
            put(dir, "frames.csv", &frames_csv(&out.records)?)?;
            put(dir, "rb_ledger.csv", &csv_rows(&out.ledger)?)?;
            put(dir, "grants.csv", &csv_rows(&out.grants)?)?;
            put(dir, "cqi.csv", &csv_rows(&out.cqi)?)?;
        }
        Format::Json => {
            let frames: Vec<FrameRow> = out.records.iter().map(FrameRow::from).collect();
            put(dir, "frames.json", &json_rows(&frames)?)?;
            put(dir, "rb_ledger.json", &json_rows(&out.ledger)?)?;
            put(dir, "grants.json", &json_rows(&out.grants)?)?;
            put(dir, "cqi.json", &json_rows(&out.cqi)?)?;
        }
    }
    put(dir, "summary.json", &summary_json(&out.summary)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::Fate;
    use crate::time::Duration;

    #[test]
    fn frame_csv_layout() {
        let r = FrameRecord {
            flow_id: 3,
            seq: 1,
            tc: 6,
            size: 64,
            t_talker: Some(Duration::from_ns(10)),
            t_ue_ingress: Some(Duration::from_ns(20)),
            t_gnb_egress: None,
            t_listener: None,
            fate: Fate::LostRadio,
        };
        let text = String::from_utf8(frames_csv(&[r]).unwrap()).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), FRAME_COLUMNS.join(","));
        assert_eq!(lines.next().unwrap(), "3,1,6,64,10,20,,,lost_radio");
        assert!(!text.contains('\r'));
        let empty = String::from_utf8(frames_csv(&[]).unwrap()).unwrap();
        assert_eq!(empty.trim_end(), FRAME_COLUMNS.join(","));
    }
}
