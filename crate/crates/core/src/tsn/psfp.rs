use serde::{Deserialize, Serialize};

use super::gcl::GateControlList;
use super::meter::{meter_color, Color, TwoRateMeterState};
use crate::flow::TrafficClass;
use crate::time::Duration;

#[derive(Clone, Debug)]
pub struct StreamFilter {
    pub flow_id: u32,
    /// Stream gate; the frame passes when its class is open at arrival.
    pub gate: Option<GateControlList>,
    /// Internal priority value replacing the frame's class.
    pub ipv: Option<TrafficClass>,
    pub meter: Option<TwoRateMeterState>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    Gate,
    Meter,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FilterVerdict {
    Pass(TrafficClass),
    Drop(DropReason),
}

impl StreamFilter {
    pub fn passthrough(flow_id: u32) -> Self {
        StreamFilter {
            flow_id,
            gate: None,
            ipv: None,
            meter: None,
        }
    }
}

/// Ingress filtering of one frame arriving at `t`.
pub fn psfp_filter(filter: &mut StreamFilter, pcp: TrafficClass, bytes: u32, t: Duration) -> FilterVerdict {
    if let Some(g) = &filter.gate {
        if !g.is_open(pcp, t) {
            return FilterVerdict::Drop(DropReason::Gate);
        }
    }
    if let Some(m) = &mut filter.meter {
        if meter_color(m, bytes, t) == Color::Red {
            return FilterVerdict::Drop(DropReason::Meter);
        }
    }
    FilterVerdict::Pass(filter.ipv.unwrap_or(pcp))
}
