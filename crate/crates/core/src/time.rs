//! Integer-nanosecond time base and the TDD slot calendar.
//!
//! Every other module does its time arithmetic through [`Duration`] and
//! [`TddPattern`], so modular checks on arrival phases stay exact.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Rem, Sub};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A non-negative span of time in integer nanoseconds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Duration(u64);

impl Duration {
    pub const ZERO: Duration = Duration(0);
    pub const MAX: Duration = Duration(u64::MAX);

    pub const fn from_ns(ns: u64) -> Self {
        Duration(ns)
    }

    pub const fn from_us(us: u64) -> Self {
        Duration(us * 1_000)
    }

    pub const fn from_ms(ms: u64) -> Self {
        Duration(ms * 1_000_000)
    }

    pub const fn from_secs(s: u64) -> Self {
        Duration(s * 1_000_000_000)
    }

    pub const fn as_ns(self) -> u64 {
        self.0
    }

    pub fn as_ms_f64(self) -> f64 {
        self.0 as f64 / 1e6
    }

    pub fn checked_sub(self, rhs: Duration) -> Option<Duration> {
        self.0.checked_sub(rhs.0).map(Duration)
    }

    pub fn saturating_sub(self, rhs: Duration) -> Duration {
        Duration(self.0.saturating_sub(rhs.0))
    }

    pub fn checked_add(self, rhs: Duration) -> Option<Duration> {
        self.0.checked_add(rhs.0).map(Duration)
    }

    /// Number of whole `unit`s in `self`.
    pub fn div_floor(self, unit: Duration) -> u64 {
        self.0 / unit.0
    }

    pub fn div_ceil(self, unit: Duration) -> u64 {
        self.0.div_ceil(unit.0)
    }

    /// Transmission time of `bytes` on a link of `bits_per_sec`, rounded up to
    /// the next nanosecond.
    pub fn transmission(bytes: u64, bits_per_sec: u64) -> Duration {
        let bits = bytes as u128 * 8;
        let ns = (bits * 1_000_000_000).div_ceil(bits_per_sec as u128);
        Duration(ns as u64)
    }
}

impl Add for Duration {
    type Output = Duration;
    fn add(self, rhs: Duration) -> Duration {
        Duration(self.0 + rhs.0)
    }
}

impl AddAssign for Duration {
    fn add_assign(&mut self, rhs: Duration) {
        self.0 += rhs.0;
    }
}

impl Sub for Duration {
    type Output = Duration;
    fn sub(self, rhs: Duration) -> Duration {
        Duration(
            self.0
                .checked_sub(rhs.0)
                .expect("duration subtraction underflow"),
        )
    }
}

impl Mul<u64> for Duration {
    type Output = Duration;
    fn mul(self, rhs: u64) -> Duration {
        Duration(self.0 * rhs)
    }
}

impl Rem for Duration {
    type Output = Duration;
    fn rem(self, rhs: Duration) -> Duration {
        Duration(self.0 % rhs.0)
    }
}

impl fmt::Display for Duration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ns = self.0;
        if ns.is_multiple_of(1_000_000) {
            write!(f, "{} ms", ns / 1_000_000)
        } else if ns.is_multiple_of(1_000) {
            write!(f, "{} us", ns / 1_000)
        } else {
            write!(f, "{} ns", ns)
        }
    }
}

/// A rational number in `[0, 1]`, written `"num/den"` in scenario files.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Fraction {
    num: u32,
    den: u32,
}

impl Fraction {
    pub const ONE: Fraction = Fraction { num: 1, den: 1 };
    pub const ZERO: Fraction = Fraction { num: 0, den: 1 };

    pub fn new(num: u32, den: u32) -> Result<Self, TimeError> {
        if den == 0 || num > den {
            return Err(TimeError::InvalidFraction(format!("{num}/{den}")));
        }
        Ok(Fraction { num, den })
    }

    pub fn num(self) -> u32 {
        self.num
    }

    pub fn den(self) -> u32 {
        self.den
    }

    /// `floor(self * value)`.
    pub fn floor_mul(self, value: u64) -> u64 {
        value * self.num as u64 / self.den as u64
    }

    pub fn is_zero(self) -> bool {
        self.num == 0
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for Fraction {
    type Err = TimeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || TimeError::InvalidFraction(s.to_string());
        match s.split_once('/') {
            Some((n, d)) => {
                let n = n.trim().parse().map_err(|_| bad())?;
                let d = d.trim().parse().map_err(|_| bad())?;
                Fraction::new(n, d)
            }
            None => {
                let n: u32 = s.trim().parse().map_err(|_| bad())?;
                Fraction::new(n, 1)
            }
        }
    }
}

impl Serialize for Fraction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Fraction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TimeError {
    #[error("empty TDD pattern")]
    EmptyPattern,
    #[error("invalid slot label {0:?} at position {1} (expected D, S or U)")]
    InvalidLabel(char, usize),
    #[error("numerology {0} out of range 0..=3")]
    NumerologyOutOfRange(u8),
    #[error("a TDD pattern needs at least one RB per UL slot")]
    ZeroRbs,
    #[error("invalid fraction {0:?}")]
    InvalidFraction(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SlotLabel {
    Downlink,
    Special,
    Uplink,
}

impl SlotLabel {
    pub fn is_uplink_capable(self) -> bool {
        !matches!(self, SlotLabel::Downlink)
    }

    pub fn as_char(self) -> char {
        match self {
            SlotLabel::Downlink => 'D',
            SlotLabel::Special => 'S',
            SlotLabel::Uplink => 'U',
        }
    }
}

/// A slot position: TDD cycle index and slot index within the cycle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SlotRef {
    pub frame: u64,
    pub slot: usize,
}

/// The slot calendar of a TDD carrier.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TddPattern {
    labels: Vec<SlotLabel>,
    mu: u8,
    n_rb: u32,
    special_ul_fraction: Fraction,
    t_slot: Duration,
    t_tdd: Duration,
}

impl TddPattern {
    /// Builds a pattern from a label string such as `"DDDDDDDSUU"`.
    pub fn parse(
        labels: &str,
        mu: u8,
        n_rb: u32,
        special_ul_fraction: Fraction,
    ) -> Result<Self, TimeError> {
        if labels.is_empty() {
            return Err(TimeError::EmptyPattern);
        }
        if mu > 3 {
            return Err(TimeError::NumerologyOutOfRange(mu));
        }
        if n_rb == 0 {
            return Err(TimeError::ZeroRbs);
        }
        let labels = labels
            .chars()
            .enumerate()
            .map(|(i, c)| match c {
                'D' => Ok(SlotLabel::Downlink),
                'S' => Ok(SlotLabel::Special),
                'U' => Ok(SlotLabel::Uplink),
                other => Err(TimeError::InvalidLabel(other, i)),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let t_slot = Duration::from_ns(1_000_000 >> mu);
        let t_tdd = t_slot * labels.len() as u64;
        Ok(TddPattern {
            labels,
            mu,
            n_rb,
            special_ul_fraction,
            t_slot,
            t_tdd,
        })
    }

    pub fn labels(&self) -> &[SlotLabel] {
        &self.labels
    }

    pub fn label_string(&self) -> String {
        self.labels.iter().map(|l| l.as_char()).collect()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn mu(&self) -> u8 {
        self.mu
    }

    pub fn n_rb(&self) -> u32 {
        self.n_rb
    }

    pub fn special_ul_fraction(&self) -> Fraction {
        self.special_ul_fraction
    }

    pub fn t_slot(&self) -> Duration {
        self.t_slot
    }

    pub fn t_tdd(&self) -> Duration {
        self.t_tdd
    }

    fn count(&self, label: SlotLabel) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    pub fn s_dl(&self) -> usize {
        self.count(SlotLabel::Downlink)
    }

    pub fn s_sp(&self) -> usize {
        self.count(SlotLabel::Special)
    }

    pub fn s_ul(&self) -> usize {
        self.count(SlotLabel::Uplink)
    }

    pub fn label(&self, slot: usize) -> SlotLabel {
        self.labels[slot]
    }

    /// UL resource blocks offered by a slot of the given label.
    pub fn capacity_of(&self, label: SlotLabel) -> u32 {
        match label {
            SlotLabel::Downlink => 0,
            SlotLabel::Uplink => self.n_rb,
            SlotLabel::Special => self.special_ul_fraction.floor_mul(self.n_rb as u64) as u32,
        }
    }

    pub fn capacity(&self, slot: usize) -> u32 {
        self.capacity_of(self.labels[slot])
    }

    /// True when at least one slot of the cycle carries UL data.
    pub fn has_uplink(&self) -> bool {
        (0..self.len()).any(|s| self.capacity(s) > 0)
    }

    /// UL data slots (capacity > 0) of one cycle, in order.
    pub fn uplink_slots(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&s| self.capacity(s) > 0)
    }

    pub fn slot_start(&self, r: SlotRef) -> Duration {
        self.t_tdd * r.frame + self.t_slot * r.slot as u64
    }

    pub fn slot_end(&self, r: SlotRef) -> Duration {
        self.slot_start(r) + self.t_slot
    }

    pub fn global_index(&self, r: SlotRef) -> u64 {
        r.frame * self.len() as u64 + r.slot as u64
    }

    pub fn from_global(&self, g: u64) -> SlotRef {
        let len = self.len() as u64;
        SlotRef {
            frame: g / len,
            slot: (g % len) as usize,
        }
    }

    pub fn global_start(&self, g: u64) -> Duration {
        self.t_slot * g
    }

    /// The slot containing instant `t`.
    pub fn slot_at(&self, t: Duration) -> (SlotRef, SlotLabel) {
        let frame = t.div_floor(self.t_tdd);
        let slot = (t % self.t_tdd).div_floor(self.t_slot) as usize;
        (SlotRef { frame, slot }, self.labels[slot])
    }

    /// SPECIAL and UL slots whose start lies in `[from, from + horizon)`.
    pub fn ul_opportunities_in(&self, from: Duration, horizon: Duration) -> Vec<SlotRef> {
        let end = from + horizon;
        let mut g = from.div_ceil(self.t_slot);
        let mut out = Vec::new();
        while self.global_start(g) < end {
            let r = self.from_global(g);
            if self.labels[r.slot].is_uplink_capable() {
                out.push(r);
            }
            g += 1;
        }
        out
    }

    /// First UL or SPECIAL slot whose start is at or after `t`, if any exists.
    pub fn next_ul_opportunity(&self, t: Duration) -> Option<SlotRef> {
        if !self.labels.iter().any(|l| l.is_uplink_capable()) {
            return None;
        }
        let mut g = t.div_ceil(self.t_slot);
        loop {
            let r = self.from_global(g);
            if self.labels[r.slot].is_uplink_capable() {
                return Some(r);
            }
            g += 1;
        }
    }

    /// Index within the cycle of the first slot carrying UL data.
    pub fn first_uplink_slot(&self) -> Option<usize> {
        self.uplink_slots().next()
    }
}

impl fmt::Display for TddPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} mu={} n_rb={}", self.label_string(), self.mu, self.n_rb)
    }
}
