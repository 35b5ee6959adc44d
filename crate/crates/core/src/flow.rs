//! Stream descriptors shared by the schedulers and the simulator.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::time::Duration;

/// IEEE 802.1Q traffic class, 0 (lowest) to 7.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct TrafficClass(u8);

impl TrafficClass {
    pub const fn new(tc: u8) -> Option<Self> {
        if tc < 8 {
            Some(TrafficClass(tc))
        } else {
            None
        }
    }

    pub const fn get(self) -> u8 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = TrafficClass> {
        (0..8).map(TrafficClass)
    }

    pub fn mask(self) -> u8 {
        1 << self.0
    }
}

impl TryFrom<u8> for TrafficClass {
    type Error = FlowError;
    fn try_from(v: u8) -> Result<Self, FlowError> {
        TrafficClass::new(v).ok_or(FlowError::TrafficClass(v))
    }
}

impl From<TrafficClass> for u8 {
    fn from(tc: TrafficClass) -> u8 {
        tc.0
    }
}

impl fmt::Display for TrafficClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TC{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ResourceType {
    DcGbr,
    Gbr,
    NonGbr,
}

/// 5G QoS characteristics attached to a stream.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QosProfile {
    /// Lower value is more urgent.
    pub priority: u8,
    pub pdb: Duration,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mdbv: Option<u32>,
    pub resource_type: ResourceType,
}

/// A stream's TSCAI tuple plus its QoS profile.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSpec {
    pub id: u32,
    pub ue_id: u32,
    /// Burst arrival time at the DS-TT ingress.
    pub bat: Duration,
    /// Burst size in bytes.
    pub bs: u32,
    pub period: Duration,
    pub tc: TrafficClass,
    pub qos: QosProfile,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FlowError {
    #[error("traffic class {0} out of range 0..=7")]
    TrafficClass(u8),
    #[error("flow {0}: period must be positive")]
    ZeroPeriod(u32),
    #[error("flow {0}: burst size must be positive")]
    ZeroBurst(u32),
    #[error("flow {0}: packet delay budget must be positive")]
    ZeroPdb(u32),
    #[error("flow {0}: mdbv must be positive when present")]
    ZeroMdbv(u32),
}

impl FlowSpec {
    pub fn validate(&self) -> Result<(), FlowError> {
        if self.period == Duration::ZERO {
            return Err(FlowError::ZeroPeriod(self.id));
        }
        if self.bs == 0 {
            return Err(FlowError::ZeroBurst(self.id));
        }
        if self.qos.pdb == Duration::ZERO {
            return Err(FlowError::ZeroPdb(self.id));
        }
        if self.qos.mdbv == Some(0) {
            return Err(FlowError::ZeroMdbv(self.id));
        }
        Ok(())
    }

    pub fn is_grant_free(&self) -> bool {
        matches!(self.tc.get(), 5 | 6)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn traffic_class_range() {
        assert!(TrafficClass::new(7).is_some());
        assert!(TrafficClass::new(8).is_none());
        assert_eq!(TrafficClass::all().count(), 8);
        let e: Result<TrafficClass, _> = serde_json::from_str("9");
        assert!(e.is_err());
    }

    #[test]
    fn flow_validation() {
        let mut f = FlowSpec {
            id: 3,
            ue_id: 3,
            bat: Duration::ZERO,
            bs: 10,
            period: Duration::from_ms(5),
            tc: TrafficClass::new(5).unwrap(),
            qos: QosProfile {
                priority: 1,
                pdb: Duration::from_ms(5),
                mdbv: None,
                resource_type: ResourceType::DcGbr,
            },
        };
        assert!(f.validate().is_ok());
        f.period = Duration::ZERO;
        assert_eq!(f.validate(), Err(FlowError::ZeroPeriod(3)));
    }
}
