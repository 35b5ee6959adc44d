//! Post-run statistics over frame records and the RB ledger.

use std::collections::BTreeMap;

use serde::Serialize;

use super::ran::LedgerRow;
use super::{Fate, FrameRecord};
use crate::time::Duration;

/// Percentage of sent frames that did not arrive within `deadline`.
/// Absent when nothing was sent.
pub fn per_pct(sent: u64, on_time: u64) -> Option<f64> {
    (sent > 0).then(|| 100.0 * (1.0 - on_time as f64 / sent as f64))
}

/// Used RB-slots over schedulable uplink RB-slots, in percent.
pub fn rb_utilization(ledger: &[LedgerRow]) -> f64 {
    let cap: u64 = ledger.iter().map(|r| r.capacity as u64).sum();
    if cap == 0 {
        return 0.0;
    }
    let used: u64 = ledger.iter().map(|r| (r.gf_used + r.dyn_used) as u64).sum();
    100.0 * used as f64 / cap as f64
}

/// Population coefficient of variation; needs two windows and a nonzero
/// mean.
pub fn cv(windows: &[u64]) -> Option<f64> {
    if windows.len() < 2 {
        return None;
    }
    let n = windows.len() as f64;
    let mean = windows.iter().sum::<u64>() as f64 / n;
    if mean == 0.0 {
        return None;
    }
    let var = windows.iter().map(|&w| (w as f64 - mean).powi(2)).sum::<f64>() / n;
    Some(var.sqrt() / mean)
}

/// Nearest-rank percentile of sorted samples: the value at 1-based rank
/// `ceil(n * per_10k / 10000)`.
pub fn nearest_rank(sorted: &[u64], per_10k: u64) -> Option<u64> {
    if sorted.is_empty() {
        return None;
    }
    let n = sorted.len() as u64;
    let rank = (n * per_10k).div_ceil(10_000).clamp(1, n);
    Some(sorted[rank as usize - 1])
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DelayStats {
    pub count: u64,
    pub mean_ns: f64,
    pub p99_ns: u64,
    pub p999_ns: u64,
    pub min_ns: u64,
    pub max_ns: u64,
}

pub fn delay_stats(samples: &mut [u64]) -> Option<DelayStats> {
    if samples.is_empty() {
        return None;
    }
    samples.sort_unstable();
    let n = samples.len();
    Some(DelayStats {
        count: n as u64,
        mean_ns: samples.iter().map(|&s| s as f64).sum::<f64>() / n as f64,
        p99_ns: nearest_rank(samples, 9_900)?,
        p999_ns: nearest_rank(samples, 9_990)?,
        min_ns: samples[0],
        max_ns: samples[n - 1],
    })
}

/// Talker-to-listener delay of a delivered frame.
pub fn e2e(r: &FrameRecord) -> Option<Duration> {
    match (r.fate, r.t_talker, r.t_listener) {
        (Fate::Delivered, Some(a), Some(b)) => Some(b - a),
        _ => None,
    }
}

/// 5G-segment delay: translator ingress to the end of the carrying slot.
pub fn segment_delay(r: &FrameRecord) -> Option<Duration> {
    Some(r.t_gnb_egress? - r.t_ue_ingress?)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TcSummary {
    pub flows: u32,
    pub sent: u64,
    pub delivered: u64,
    pub on_time: u64,
    pub per_pct: Option<f64>,
    pub max_path_delay_ns: u64,
    pub delay: Option<DelayStats>,
    pub segment_min_ns: Option<u64>,
    pub segment_max_ns: Option<u64>,
    /// Delivered frames slower than their stream's packet delay budget.
    pub over_pdb_pct: Option<f64>,
    pub throughput_cv: Option<f64>,
}

pub struct TcInputs<'a> {
    pub records: &'a [FrameRecord],
    /// Max path delay per class.
    pub deadline: &'a BTreeMap<u8, Duration>,
    /// Packet delay budget per stream.
    pub pdb: &'a BTreeMap<u32, Duration>,
    /// Streams per class.
    pub flows: &'a BTreeMap<u8, Vec<u32>>,
    pub horizon: Duration,
    pub window: Duration,
}

pub fn per_tc(inp: &TcInputs) -> BTreeMap<u8, TcSummary> {
    let mut out = BTreeMap::new();
    for (&tc, ids) in inp.flows {
        let deadline = inp.deadline.get(&tc).copied().unwrap_or(Duration::MAX);
        let recs: Vec<&FrameRecord> = inp.records.iter().filter(|r| r.tc == tc).collect();
        let mut delays: Vec<u64> = Vec::new();
        let mut on_time = 0;
        let mut over_pdb = 0u64;
        for r in &recs {
            if let Some(d) = e2e(r) {
                delays.push(d.as_ns());
                if d <= deadline {
                    on_time += 1;
                }
                if inp.pdb.get(&r.flow_id).is_some_and(|&p| d > p) {
                    over_pdb += 1;
                }
            }
        }
        let seg: Vec<u64> = recs.iter().filter_map(|r| segment_delay(r)).map(Duration::as_ns).collect();

        let n_windows = inp.horizon.div_floor(inp.window) as usize;
        let cvs: Vec<f64> = ids
            .iter()
            .filter_map(|&id| {
                let mut w = vec![0u64; n_windows];
                for r in recs.iter().filter(|r| r.flow_id == id && r.fate == Fate::Delivered) {
                    let k = r.t_listener?.div_floor(inp.window) as usize;
                    if k < n_windows {
                        w[k] += r.size as u64;
                    }
                }
                cv(&w)
            })
            .collect();
        let delivered = delays.len() as u64;
        out.insert(
            tc,
            TcSummary {
                flows: ids.len() as u32,
                sent: recs.len() as u64,
                delivered,
                on_time,
                per_pct: per_pct(recs.len() as u64, on_time),
                max_path_delay_ns: deadline.as_ns(),
                over_pdb_pct: (delivered > 0).then(|| 100.0 * over_pdb as f64 / delivered as f64),
                delay: delay_stats(&mut delays),
                segment_min_ns: seg.iter().min().copied(),
                segment_max_ns: seg.iter().max().copied(),
                throughput_cv: (!cvs.is_empty()).then(|| cvs.iter().sum::<f64>() / cvs.len() as f64),
            },
        );
    }
    out
}
