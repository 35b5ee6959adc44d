//! Multi-seed execution and aggregation.

use std::collections::BTreeMap;
use std::io;
use std::path::Path;

use serde::Serialize;

use crate::scenario::Scenario;
use crate::sim::output::{summary_json, write_run, Format};
use crate::sim::{run, SimError, Summary};

/// Mean and range of one metric across seeds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Spread {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl Spread {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Option<Spread> {
        let v: Vec<f64> = values.into_iter().collect();
        if v.is_empty() {
            return None;
        }
        Some(Spread {
            mean: v.iter().sum::<f64>() / v.len() as f64,
            min: v.iter().copied().fold(f64::INFINITY, f64::min),
            max: v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            n: v.len(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TcAggregate {
    pub per_pct: Option<Spread>,
    pub mean_delay_ns: Option<Spread>,
    pub p99_ns: Option<Spread>,
    pub p999_ns: Option<Spread>,
    pub over_pdb_pct: Option<Spread>,
    pub throughput_cv: Option<Spread>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Aggregate {
    pub scenario: String,
    pub scheduler: String,
    pub seeds: Vec<u64>,
    pub rb_utilization_pct: Option<Spread>,
    pub per_tc: BTreeMap<u8, TcAggregate>,
}

/// Combines per-seed summaries. The result does not depend on their order.
pub fn aggregate(summaries: &[Summary]) -> Aggregate {
    let mut sorted: Vec<&Summary> = summaries.iter().collect();
    sorted.sort_by_key(|s| s.seed);
    let tcs: std::collections::BTreeSet<u8> = sorted.iter().flat_map(|s| s.per_tc.keys().copied()).collect();
    let per_tc = tcs
        .into_iter()
        .map(|tc| {
            let pick = |f: &dyn Fn(&crate::sim::TcSummary) -> Option<f64>| {
                Spread::of(sorted.iter().filter_map(|s| s.per_tc.get(&tc).and_then(f)))
            };
            (
                tc,
                TcAggregate {
                    per_pct: pick(&|t| t.per_pct),
                    mean_delay_ns: pick(&|t| t.delay.as_ref().map(|d| d.mean_ns)),
                    p99_ns: pick(&|t| t.delay.as_ref().map(|d| d.p99_ns as f64)),
                    p999_ns: pick(&|t| t.delay.as_ref().map(|d| d.p999_ns as f64)),
                    over_pdb_pct: pick(&|t| t.over_pdb_pct),
                    throughput_cv: pick(&|t| t.throughput_cv),
                },
            )
        })
        .collect();
    Aggregate {
        scenario: sorted.first().map(|s| s.scenario.clone()).unwrap_or_default(),
        scheduler: sorted.first().map(|s| s.scheduler.clone()).unwrap_or_default(),
        seeds: sorted.iter().map(|s| s.seed).collect(),
        rb_utilization_pct: Spread::of(sorted.iter().map(|s| s.rb_utilization_pct)),
        per_tc,
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BatchError {
    #[error("seed {seed}: {source}")]
    Run { seed: u64, source: SimError },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Runs every seed, writing `seed-<n>/` trace sets and `aggregate.json`
/// under `out`.
pub fn run_batch(s: &Scenario, seeds: &[u64], out: &Path, format: Format) -> Result<Aggregate, BatchError> {
    let mut summaries = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let o = run(s, seed).map_err(|source| BatchError::Run { seed, source })?;
        write_run(&out.join(format!("seed-{seed}")), &o, format)?;
        summaries.push(o.summary);
    }
    let agg = aggregate(&summaries);
    std::fs::write(out.join("aggregate.json"), summary_json(&agg)?)?;
    Ok(agg)
}
