//! Link adaptation: CQI and MCS values, the CQI -> MCS -> TBS chain, mean-CQI
//! RB eligibility and the transmission success model.

pub mod channel;
pub mod tables;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use channel::{ChannelParams, ChannelState};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinkError {
    #[error("CQI {0} out of range 1..=15")]
    Cqi(u8),
    #[error("MCS {0} out of range 0..=28")]
    Mcs(u8),
    #[error("MCS range [{0}, {1}] is empty")]
    EmptyRange(u8, u8),
    #[error("mean CQI of an empty RB set")]
    NoRbs,
    #[error("unknown UE {0}")]
    UnknownUe(u32),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Cqi(u8);

impl Cqi {
    pub const MIN: Cqi = Cqi(1);
    pub const MAX: Cqi = Cqi(15);

    pub fn new(v: u8) -> Result<Self, LinkError> {
        if (1..=15).contains(&v) {
            Ok(Cqi(v))
        } else {
            Err(LinkError::Cqi(v))
        }
    }

    pub const fn get(self) -> u8 {
        self.0
    }
}

impl TryFrom<u8> for Cqi {
    type Error = LinkError;
    fn try_from(v: u8) -> Result<Self, LinkError> {
        Cqi::new(v)
    }
}

impl From<Cqi> for u8 {
    fn from(c: Cqi) -> u8 {
        c.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Mcs(u8);

impl Mcs {
    pub const MIN: Mcs = Mcs(0);
    pub const MAX: Mcs = Mcs(28);

    pub fn new(v: u8) -> Result<Self, LinkError> {
        if v <= 28 {
            Ok(Mcs(v))
        } else {
            Err(LinkError::Mcs(v))
        }
    }

    pub const fn get(self) -> u8 {
        self.0
    }
}

impl TryFrom<u8> for Mcs {
    type Error = LinkError;
    fn try_from(v: u8) -> Result<Self, LinkError> {
        Mcs::new(v)
    }
}

impl From<Mcs> for u8 {
    fn from(m: Mcs) -> u8 {
        m.0
    }
}

impl fmt::Display for Mcs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawRange", into = "RawRange")]
pub struct McsRange {
    min: Mcs,
    max: Mcs,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRange {
    min: u8,
    max: u8,
}

impl TryFrom<RawRange> for McsRange {
    type Error = LinkError;
    fn try_from(r: RawRange) -> Result<Self, LinkError> {
        McsRange::new(Mcs::new(r.min)?, Mcs::new(r.max)?)
    }
}

impl From<McsRange> for RawRange {
    fn from(r: McsRange) -> RawRange {
        RawRange {
            min: r.min.get(),
            max: r.max.get(),
        }
    }
}

impl McsRange {
    pub const FULL: McsRange = McsRange {
        min: Mcs::MIN,
        max: Mcs::MAX,
    };

    pub fn new(min: Mcs, max: Mcs) -> Result<Self, LinkError> {
        if min > max {
            return Err(LinkError::EmptyRange(min.get(), max.get()));
        }
        Ok(McsRange { min, max })
    }

    pub fn fixed(m: Mcs) -> Self {
        McsRange { min: m, max: m }
    }

    pub fn min(self) -> Mcs {
        self.min
    }

    pub fn max(self) -> Mcs {
        self.max
    }

    pub fn clamp(self, m: Mcs) -> Mcs {
        m.clamp(self.min, self.max)
    }
}

/// Table MCS of a CQI, without any range applied.
pub fn table_mcs(cqi: Cqi) -> Mcs {
    Mcs(tables::CQI_TO_MCS[cqi.get() as usize - 1])
}

/// CQI -> MCS lookup clamped into `range`.
pub fn cqi_to_mcs(cqi: Cqi, range: McsRange) -> Mcs {
    range.clamp(table_mcs(cqi))
}

/// Like [`cqi_to_mcs`] but refuses to raise a value that falls below the
/// range minimum.
pub fn cqi_to_mcs_strict(cqi: Cqi, range: McsRange) -> Option<Mcs> {
    let m = table_mcs(cqi);
    (m >= range.min()).then(|| range.clamp(m))
}

/// Largest CQI whose table MCS does not exceed `mcs`. Used to pin a channel
/// to the minimum MCS for admission.
pub fn cqi_for_mcs(mcs: Mcs) -> Cqi {
    let idx = tables::CQI_TO_MCS
        .iter()
        .rposition(|&m| m <= mcs.get())
        .unwrap_or(0);
    Cqi(idx as u8 + 1)
}

/// Transport block size in bytes.
pub fn tbs(mcs: Mcs, n_rb: u32) -> u32 {
    tables::tbs_bytes(mcs.get(), n_rb)
}

/// Smallest RB count carrying at least `bytes`, searching `1..=max_rbs`.
pub fn min_rbs_for(mcs: Mcs, bytes: u32, max_rbs: u32) -> Option<u32> {
    if bytes == 0 {
        return Some(0);
    }
    if max_rbs == 0 || tbs(mcs, max_rbs) < bytes {
        return None;
    }
    let (mut lo, mut hi) = (1, max_rbs);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if tbs(mcs, mid) >= bytes {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Some(lo)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EffectiveMcs {
    pub mcs: Mcs,
    /// Positions (into the input slice) whose CQI is at least the mean.
    pub eligible: Vec<usize>,
}

/// Mean-CQI link adaptation over a candidate RB set.
pub fn effective_mcs(cqi_per_rb: &[Cqi], range: McsRange) -> Result<EffectiveMcs, LinkError> {
    if cqi_per_rb.is_empty() {
        return Err(LinkError::NoRbs);
    }
    let n = cqi_per_rb.len() as u32;
    let sum: u32 = cqi_per_rb.iter().map(|c| c.get() as u32).sum();
    let floor_mean = Cqi((sum / n) as u8);
    let eligible = cqi_per_rb
        .iter()
        .enumerate()
        .filter(|(_, c)| c.get() as u32 * n >= sum)
        .map(|(i, _)| i)
        .collect();
    Ok(EffectiveMcs {
        mcs: cqi_to_mcs(floor_mean, range),
        eligible,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TxOutcome {
    Delivered,
    Lost,
}

/// Threshold loss model: a transport block decodes iff its MCS does not
/// exceed what the channel supports at transmission time.
pub fn transmit_outcome(granted: Mcs, current_effective: Mcs) -> TxOutcome {
    if granted <= current_effective {
        TxOutcome::Delivered
    } else {
        TxOutcome::Lost
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cqis(v: &[u8]) -> Vec<Cqi> {
        v.iter().map(|&c| Cqi::new(c).unwrap()).collect()
    }

    fn m(v: u8) -> Mcs {
        Mcs::new(v).unwrap()
    }

    #[test]
    fn lookup_endpoints_and_clamping() {
        assert_eq!(cqi_to_mcs(Cqi::MAX, McsRange::FULL), m(28));
        assert_eq!(cqi_to_mcs(Cqi::MIN, McsRange::FULL), m(0));
        let r = McsRange::new(m(5), m(20)).unwrap();
        assert_eq!(cqi_to_mcs(Cqi::new(7).unwrap(), r), m(11));
        assert_eq!(cqi_to_mcs(Cqi::new(2).unwrap(), r), m(5));
        assert_eq!(cqi_to_mcs(Cqi::new(15).unwrap(), r), m(20));
        assert_eq!(cqi_to_mcs_strict(Cqi::new(2).unwrap(), r), None);
        assert!(McsRange::new(m(6), m(5)).is_err());
        assert!(Cqi::new(0).is_err() && Cqi::new(16).is_err() && Mcs::new(29).is_err());
    }

    #[test]
    fn admission_pinning() {
        assert_eq!(cqi_for_mcs(m(5)), Cqi::new(4).unwrap());
        assert_eq!(cqi_for_mcs(m(0)), Cqi::new(2).unwrap());
        assert_eq!(cqi_for_mcs(m(28)), Cqi::MAX);
        for v in 0..=28 {
            let r = McsRange::new(m(v), Mcs::MAX).unwrap();
            assert_eq!(cqi_to_mcs(cqi_for_mcs(m(v)), r), m(v));
        }
    }

    #[test]
    fn effective_mcs_examples() {
        let e = effective_mcs(&cqis(&[7, 7, 7, 7]), McsRange::FULL).unwrap();
        assert_eq!(e.eligible, vec![0, 1, 2, 3]);
        assert_eq!(e.mcs, cqi_to_mcs(Cqi::new(7).unwrap(), McsRange::FULL));

        let e = effective_mcs(&cqis(&[3, 5, 7, 9]), McsRange::FULL).unwrap();
        assert_eq!(e.eligible, vec![2, 3]);
        assert_eq!(e.mcs, table_mcs(Cqi::new(6).unwrap()));

        let e = effective_mcs(&cqis(&[1, 15]), McsRange::FULL).unwrap();
        assert_eq!(e.eligible, vec![1]);
        assert_eq!(e.mcs, table_mcs(Cqi::new(8).unwrap()));

        // Mean 22/3 is not floored before the eligibility test: 7 < 7.33.
        let e = effective_mcs(&cqis(&[7, 7, 8]), McsRange::FULL).unwrap();
        assert_eq!(e.eligible, vec![2]);
        assert_eq!(e.mcs, table_mcs(Cqi::new(7).unwrap()));

        assert_eq!(effective_mcs(&[], McsRange::FULL), Err(LinkError::NoRbs));
    }

    #[test]
    fn threshold_outcome() {
        assert_eq!(transmit_outcome(m(5), m(5)), TxOutcome::Delivered);
        assert_eq!(transmit_outcome(m(20), m(11)), TxOutcome::Lost);
    }

    #[test]
    fn min_rbs() {
        assert_eq!(min_rbs_for(m(5), 0, 10), Some(0));
        assert_eq!(min_rbs_for(m(5), 54, 10), Some(4));
        assert_eq!(min_rbs_for(m(5), 55, 4), None);
        assert_eq!(tbs(m(20), 0), 0);
        assert!(tbs(m(20), 10) >= tbs(m(5), 10));
    }

    proptest! {
        #[test]
        fn cqi_map_is_monotone(lo in 0u8..=28, hi in 0u8..=28, a in 1u8..=15, b in 1u8..=15) {
            let (lo, hi) = (lo.min(hi), lo.max(hi));
            let r = McsRange::new(m(lo), m(hi)).unwrap();
            let (a, b) = (a.min(b), a.max(b));
            prop_assert!(cqi_to_mcs(Cqi::new(a).unwrap(), r) <= cqi_to_mcs(Cqi::new(b).unwrap(), r));
        }

        #[test]
        fn eligibility_is_the_exact_mean_threshold(v in proptest::collection::vec(1u8..=15, 1..40)) {
            let c = cqis(&v);
            let e = effective_mcs(&c, McsRange::FULL).unwrap();
            let sum: u32 = v.iter().map(|&x| x as u32).sum();
            let n = v.len() as u32;
            for (i, &x) in v.iter().enumerate() {
                prop_assert_eq!(e.eligible.contains(&i), x as u32 * n >= sum);
            }
            prop_assert!(!e.eligible.is_empty());
        }

        #[test]
        fn min_rbs_is_minimal(mcs in 0u8..=28, bytes in 1u32..5000, cap in 1u32..=106) {
            match min_rbs_for(m(mcs), bytes, cap) {
                Some(k) => {
                    prop_assert!(tbs(m(mcs), k) >= bytes);
                    prop_assert!(k == 1 || tbs(m(mcs), k - 1) < bytes);
                }
                None => prop_assert!(tbs(m(mcs), cap) < bytes),
            }
        }
    }
}
