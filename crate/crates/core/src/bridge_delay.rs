//! Uplink bridge-delay bounds of the 5G system and the traffic-class to
//! allocation-mode mapping.
//!
//! All bounds are measured from the frame's arrival at the DS-TT ingress to
//! the end of the uplink slot that carries it. `delta` covers forwarding
//! between the translator and the UE.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flow::{FlowSpec, TrafficClass};
use crate::time::{Duration, SlotLabel, TddPattern};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelayParams {
    pub delta: Duration,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BridgeDelayBounds {
    pub min: Duration,
    pub max: Duration,
    pub frame_size_dependent: Option<Duration>,
    pub frame_size_independent: Option<Duration>,
}

impl BridgeDelayBounds {
    fn new(min: Duration, max: Duration, delta: Duration) -> Self {
        BridgeDelayBounds {
            min,
            max,
            frame_size_dependent: Some(Duration::ZERO),
            frame_size_independent: Some(max - delta),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AllocationMode {
    GrantFreeSingleSlot,
    GrantFree,
    DynamicBsKnown,
    Dynamic,
}

impl AllocationMode {
    /// Nominal mode of a traffic class, before any precondition check.
    pub fn for_tc(tc: TrafficClass) -> Self {
        match tc.get() {
            6 => AllocationMode::GrantFreeSingleSlot,
            5 => AllocationMode::GrantFree,
            4 => AllocationMode::DynamicBsKnown,
            _ => AllocationMode::Dynamic,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JitterCondition {
    /// Arrival phase does not line up with the target slot.
    Phase,
    /// Period is not a multiple of the TDD cycle.
    Period,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JitterCheck {
    Ok,
    Violated(JitterCondition),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BdError {
    #[error("pattern {0:?} has no uplink slot")]
    NoUplink(String),
    #[error("slot {0} is a downlink slot")]
    DownlinkSlot(usize),
    #[error("slot {0} outside the TDD cycle")]
    SlotOutOfRange(usize),
    #[error("{0} needs the flow description to compute its bridge delay")]
    MissingFlow(TrafficClass),
}

fn require_uplink(pattern: &TddPattern) -> Result<(), BdError> {
    if pattern.labels().iter().any(|l| l.is_uplink_capable()) {
        Ok(())
    } else {
        Err(BdError::NoUplink(pattern.label_string()))
    }
}

pub fn max_dynamic_bd(
    pattern: &TddPattern,
    p: DelayParams,
    bs_known: bool,
) -> Result<Duration, BdError> {
    require_uplink(pattern)?;
    let cycles = if bs_known { 2 } else { 3 };
    Ok(p.delta + pattern.t_tdd() * cycles + pattern.t_slot())
}

pub fn min_dynamic_bd(
    pattern: &TddPattern,
    p: DelayParams,
    bs_known: bool,
) -> Result<Duration, BdError> {
    require_uplink(pattern)?;
    let base = p.delta + pattern.t_slot() * (pattern.s_dl() as u64 + 2);
    Ok(if bs_known { base } else { base + pattern.t_tdd() })
}

pub fn static_bd_bounds(
    pattern: &TddPattern,
    p: DelayParams,
    single_slot: bool,
) -> Result<BridgeDelayBounds, BdError> {
    require_uplink(pattern)?;
    let min = p.delta + pattern.t_slot();
    let max = if single_slot {
        min
    } else {
        p.delta + pattern.t_tdd() + pattern.t_slot()
    };
    Ok(BridgeDelayBounds::new(min, max, p.delta))
}

pub fn dynamic_bd_bounds(
    pattern: &TddPattern,
    p: DelayParams,
    bs_known: bool,
) -> Result<BridgeDelayBounds, BdError> {
    Ok(BridgeDelayBounds::new(
        min_dynamic_bd(pattern, p, bs_known)?,
        max_dynamic_bd(pattern, p, bs_known)?,
        p.delta,
    ))
}

/// Checks whether `flow` can be served jitter-free in slot `x` of every
/// cycle: the UE must see each burst exactly at the start of slot `x`, and
/// the period must be a whole number of cycles.
pub fn check_jitter_free(
    flow: &FlowSpec,
    pattern: &TddPattern,
    p: DelayParams,
    x: usize,
) -> Result<JitterCheck, BdError> {
    if x >= pattern.len() {
        return Err(BdError::SlotOutOfRange(x));
    }
    if pattern.label(x) == SlotLabel::Downlink {
        return Err(BdError::DownlinkSlot(x));
    }
    let t_tdd = pattern.t_tdd().as_ns() as i128;
    let lhs = (flow.bat.as_ns() as i128).rem_euclid(t_tdd);
    let rhs = ((pattern.t_slot().as_ns() * x as u64) as i128 - p.delta.as_ns() as i128)
        .rem_euclid(t_tdd);
    let phase_ok = lhs == rhs;
    let period_ok = flow.period.as_ns() as i128 % t_tdd == 0;
    Ok(match (phase_ok, period_ok) {
        (true, true) => JitterCheck::Ok,
        (false, true) => JitterCheck::Violated(JitterCondition::Phase),
        (true, false) => JitterCheck::Violated(JitterCondition::Period),
        (false, false) => JitterCheck::Violated(JitterCondition::Both),
    })
}

/// The slot index at which the UE sees the flow's bursts, if the arrival
/// falls exactly on a slot start that can carry uplink data.
pub fn single_slot_index(flow: &FlowSpec, pattern: &TddPattern, p: DelayParams) -> Option<usize> {
    let phase = (flow.bat + p.delta) % pattern.t_tdd();
    if !phase.as_ns().is_multiple_of(pattern.t_slot().as_ns()) {
        return None;
    }
    let x = phase.div_floor(pattern.t_slot()) as usize;
    (pattern.capacity(x) > 0).then_some(x)
}

/// Bridge delay granted to one traffic class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TcBridgeDelay {
    pub mode: AllocationMode,
    pub bounds: BridgeDelayBounds,
    /// Set when a single-slot stream falls back to windowed grant-free
    /// allocation and the controller must be told about the larger bound.
    pub increased_bd: bool,
    /// Slot pinned for single-slot service.
    pub slot: Option<usize>,
}

pub fn bd_for_tc(
    tc: TrafficClass,
    pattern: &TddPattern,
    p: DelayParams,
    flow: Option<&FlowSpec>,
) -> Result<TcBridgeDelay, BdError> {
    let mode = AllocationMode::for_tc(tc);
    let plain = |mode, bounds| TcBridgeDelay {
        mode,
        bounds,
        increased_bd: false,
        slot: None,
    };
    match mode {
        AllocationMode::GrantFreeSingleSlot => {
            let flow = flow.ok_or(BdError::MissingFlow(tc))?;
            let x = single_slot_index(flow, pattern, p);
            let ok = match x {
                Some(x) => check_jitter_free(flow, pattern, p, x)? == JitterCheck::Ok,
                None => false,
            };
            if ok {
                Ok(TcBridgeDelay {
                    mode,
                    bounds: static_bd_bounds(pattern, p, true)?,
                    increased_bd: false,
                    slot: x,
                })
            } else {
                Ok(TcBridgeDelay {
                    mode: AllocationMode::GrantFree,
                    bounds: static_bd_bounds(pattern, p, false)?,
                    increased_bd: true,
                    slot: None,
                })
            }
        }
        AllocationMode::GrantFree => {
            flow.ok_or(BdError::MissingFlow(tc))?;
            Ok(plain(mode, static_bd_bounds(pattern, p, false)?))
        }
        AllocationMode::DynamicBsKnown => Ok(plain(mode, dynamic_bd_bounds(pattern, p, true)?)),
        AllocationMode::Dynamic => Ok(plain(mode, dynamic_bd_bounds(pattern, p, false)?)),
    }
}

/// One row of the per-class bridge-delay report.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BdReportRow {
    pub tc: TrafficClass,
    pub mode: AllocationMode,
    pub min_ns: u64,
    pub max_ns: u64,
    pub frame_size_dependent_ns: u64,
    pub frame_size_independent_ns: u64,
    pub increased_bd: bool,
}

impl BdReportRow {
    pub fn new(tc: TrafficClass, d: &TcBridgeDelay) -> Self {
        BdReportRow {
            tc,
            mode: d.mode,
            min_ns: d.bounds.min.as_ns(),
            max_ns: d.bounds.max.as_ns(),
            frame_size_dependent_ns: d.bounds.frame_size_dependent.unwrap_or_default().as_ns(),
            frame_size_independent_ns: d.bounds.frame_size_independent.unwrap_or_default().as_ns(),
            increased_bd: d.increased_bd,
        }
    }
}

/// Nominal per-class report for a pattern, assuming single-slot streams meet
/// their alignment preconditions.
pub fn nominal_report(pattern: &TddPattern, p: DelayParams) -> Result<Vec<BdReportRow>, BdError> {
    TrafficClass::all()
        .map(|tc| {
            let d = match AllocationMode::for_tc(tc) {
                AllocationMode::GrantFreeSingleSlot => TcBridgeDelay {
                    mode: AllocationMode::GrantFreeSingleSlot,
                    bounds: static_bd_bounds(pattern, p, true)?,
                    increased_bd: false,
                    slot: None,
                },
                AllocationMode::GrantFree => TcBridgeDelay {
                    mode: AllocationMode::GrantFree,
                    bounds: static_bd_bounds(pattern, p, false)?,
                    increased_bd: false,
                    slot: None,
                },
                _ => bd_for_tc(tc, pattern, p, None)?,
            };
            Ok(BdReportRow::new(tc, &d))
        })
        .collect()
}
