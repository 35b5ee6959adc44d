use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flow::TrafficClass;
use crate::time::Duration;

/// Set of traffic classes, bit `c` standing for class `c`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClassMask(pub u8);

impl ClassMask {
    pub const ALL: ClassMask = ClassMask(0xFF);
    pub const NONE: ClassMask = ClassMask(0);

    pub fn of(classes: impl IntoIterator<Item = u8>) -> Self {
        ClassMask(classes.into_iter().fold(0u8, |m, c| m | (1 << (c & 7))))
    }

    pub fn contains(self, tc: TrafficClass) -> bool {
        self.0 & tc.mask() != 0
    }

    pub fn classes(self) -> impl Iterator<Item = u8> {
        (0..8).filter(move |c| self.0 & (1 << c) != 0)
    }
}

impl fmt::Display for ClassMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v: Vec<String> = self.classes().map(|c| c.to_string()).collect();
        write!(f, "{{{}}}", v.join(","))
    }
}

impl Serialize for ClassMask {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.classes())
    }
}

impl<'de> Deserialize<'de> for ClassMask {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Vec::<u8>::deserialize(d)?;
        if let Some(bad) = v.iter().find(|&&c| c > 7) {
            return Err(serde::de::Error::custom(format!("traffic class {bad} out of range")));
        }
        Ok(ClassMask::of(v))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GclError {
    #[error("gate cycle must be positive")]
    ZeroCycle,
    #[error("gate entries sum to {sum} but the cycle is {cycle}")]
    SumMismatch { sum: Duration, cycle: Duration },
    #[error("gate window at offset {offset} does not start where the previous one ends ({expected})")]
    NotContiguous { offset: Duration, expected: Duration },
    #[error("shift for class {class} is {shift}, longer than the cycle {cycle}")]
    ShiftTooLarge { class: u8, shift: Duration, cycle: Duration },
    #[error("shifted gates overlap between isolated classes {0:?}")]
    Overlap(Vec<(u8, u8)>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateEntry {
    pub duration: Duration,
    pub open: ClassMask,
}

/// Window form used in scenario files.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GclWindow {
    pub offset_ns: u64,
    pub duration_ns: u64,
    pub classes: ClassMask,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GateControlList {
    cycle: Duration,
    base_time: Duration,
    entries: Vec<GateEntry>,
}

impl GateControlList {
    pub fn new(base_time: Duration, entries: Vec<GateEntry>) -> Result<Self, GclError> {
        let cycle = entries.iter().fold(Duration::ZERO, |a, e| a + e.duration);
        if cycle == Duration::ZERO {
            return Err(GclError::ZeroCycle);
        }
        let entries = entries.into_iter().filter(|e| e.duration > Duration::ZERO).collect();
        Ok(GateControlList {
            cycle,
            base_time,
            entries,
        })
    }

    /// Builds a list from windows that must tile `[0, cycle)` in order.
    pub fn from_windows(
        cycle: Duration,
        base_time: Duration,
        windows: &[GclWindow],
    ) -> Result<Self, GclError> {
        if cycle == Duration::ZERO {
            return Err(GclError::ZeroCycle);
        }
        let mut sorted = windows.to_vec();
        sorted.sort_by_key(|w| w.offset_ns);
        let mut expected = 0u64;
        let mut entries = Vec::new();
        for w in &sorted {
            if w.offset_ns != expected {
                return Err(GclError::NotContiguous {
                    offset: Duration::from_ns(w.offset_ns),
                    expected: Duration::from_ns(expected),
                });
            }
            expected += w.duration_ns;
            entries.push(GateEntry {
                duration: Duration::from_ns(w.duration_ns),
                open: w.classes,
            });
        }
        if expected != cycle.as_ns() {
            return Err(GclError::SumMismatch {
                sum: Duration::from_ns(expected),
                cycle,
            });
        }
        GateControlList::new(base_time, entries)
    }

    pub fn always_open(cycle: Duration) -> Self {
        GateControlList {
            cycle,
            base_time: Duration::ZERO,
            entries: vec![GateEntry {
                duration: cycle,
                open: ClassMask::ALL,
            }],
        }
    }

    pub fn cycle(&self) -> Duration {
        self.cycle
    }

    pub fn base_time(&self) -> Duration {
        self.base_time
    }

    pub fn entries(&self) -> &[GateEntry] {
        &self.entries
    }

    pub fn to_windows(&self) -> Vec<GclWindow> {
        let mut off = 0;
        self.entries
            .iter()
            .map(|e| {
                let w = GclWindow {
                    offset_ns: off,
                    duration_ns: e.duration.as_ns(),
                    classes: e.open,
                };
                off += e.duration.as_ns();
                w
            })
            .collect()
    }

    fn phase(&self, t: Duration) -> u64 {
        let rel = t.as_ns() as i128 - self.base_time.as_ns() as i128;
        rel.rem_euclid(self.cycle.as_ns() as i128) as u64
    }

    /// Index of the entry active at cycle phase `ph` and that entry's end phase.
    fn entry_at(&self, ph: u64) -> (usize, u64) {
        let mut end = 0;
        for (i, e) in self.entries.iter().enumerate() {
            end += e.duration.as_ns();
            if ph < end {
                return (i, end);
            }
        }
        unreachable!("phase below cycle")
    }

    pub fn gate_open_classes(&self, t: Duration) -> ClassMask {
        self.entries[self.entry_at(self.phase(t)).0].open
    }

    pub fn is_open(&self, tc: TrafficClass, t: Duration) -> bool {
        self.gate_open_classes(t).contains(tc)
    }

    /// Instant the gate of `tc` closes next, assuming it is open at `t`.
    /// `None` when the gate never closes.
    pub fn open_until(&self, tc: TrafficClass, t: Duration) -> Option<Duration> {
        if self.entries.iter().all(|e| e.open.contains(tc)) {
            return None;
        }
        let (mut i, end) = self.entry_at(self.phase(t));
        let mut at = t + Duration::from_ns(end - self.phase(t));
        loop {
            i = (i + 1) % self.entries.len();
            if !self.entries[i].open.contains(tc) {
                return Some(at);
            }
            at += self.entries[i].duration;
        }
    }

    /// Earliest instant at or after `t` with the gate of `tc` open.
    pub fn next_open(&self, tc: TrafficClass, t: Duration) -> Option<Duration> {
        if !self.entries.iter().any(|e| e.open.contains(tc)) {
            return None;
        }
        let ph = self.phase(t);
        let (mut i, end) = self.entry_at(ph);
        if self.entries[i].open.contains(tc) {
            return Some(t);
        }
        let mut at = t + Duration::from_ns(end - ph);
        loop {
            i = (i + 1) % self.entries.len();
            if self.entries[i].open.contains(tc) {
                return Some(at);
            }
            at += self.entries[i].duration;
        }
    }

    /// Earliest instant at or after `t` at which a transmission of length
    /// `tx` for `tc` starts and ends inside one open stretch.
    pub fn next_fit(&self, tc: TrafficClass, t: Duration, tx: Duration) -> Option<Duration> {
        let mut at = self.next_open(tc, t)?;
        for _ in 0..=2 * self.entries.len() {
            match self.open_until(tc, at) {
                None => return Some(at),
                Some(close) if at + tx <= close => return Some(at),
                Some(close) => at = self.next_open(tc, close)?,
            }
        }
        None
    }

    /// Open stretches of `tc` as phase intervals within one cycle.
    pub fn open_intervals(&self, tc: TrafficClass) -> Vec<(u64, u64)> {
        let mut out: Vec<(u64, u64)> = Vec::new();
        let mut start = 0;
        for e in &self.entries {
            let end = start + e.duration.as_ns();
            if e.open.contains(tc) {
                match out.last_mut() {
                    Some(last) if last.1 == start => last.1 = end,
                    _ => out.push((start, end)),
                }
            }
            start = end;
        }
        out
    }

    /// Longest continuous closed stretch of `tc`, wrapping across cycles.
    pub fn max_closed(&self, tc: TrafficClass) -> Duration {
        let open = self.open_intervals(tc);
        let c = self.cycle.as_ns();
        if open.is_empty() {
            return Duration::MAX;
        }
        let mut worst = 0;
        for w in open.windows(2) {
            worst = worst.max(w[1].0 - w[0].1);
        }
        let wrap = open[0].0 + (c - open.last().unwrap().1);
        Duration::from_ns(worst.max(wrap))
    }

    /// Same gating with adjacent equal entries merged.
    pub fn normalized(&self) -> Self {
        let mut entries: Vec<GateEntry> = Vec::new();
        for e in &self.entries {
            match entries.last_mut() {
                Some(last) if last.open == e.open => last.duration += e.duration,
                _ => entries.push(*e),
            }
        }
        GateControlList {
            cycle: self.cycle,
            base_time: self.base_time,
            entries,
        }
    }
}

/// Moves each class's open stretches forward by its shift, modulo the cycle.
///
/// Classes that never share an entry in `gcl` are treated as isolated from
/// each other; if their shifted stretches intersect the shift is rejected.
pub fn shift_gcl(gcl: &GateControlList, shifts: &[Duration; 8]) -> Result<GateControlList, GclError> {
    let c = gcl.cycle.as_ns();
    let mut shifted: Vec<Vec<(u64, u64)>> = Vec::with_capacity(8);
    let mut cuts = BTreeSet::from([0, c]);
    for class in 0..8u8 {
        let s = shifts[class as usize];
        if s > gcl.cycle {
            return Err(GclError::ShiftTooLarge {
                class,
                shift: s,
                cycle: gcl.cycle,
            });
        }
        let s = (s % gcl.cycle).as_ns();
        let tc = TrafficClass::new(class).expect("class below 8");
        let mut pieces = Vec::new();
        for (a, b) in gcl.open_intervals(tc) {
            let (a, b) = (a + s, b + s);
            if b <= c {
                pieces.push((a, b));
            } else if a >= c {
                pieces.push((a - c, b - c));
            } else {
                pieces.push((a, c));
                pieces.push((0, b - c));
            }
        }
        for &(a, b) in &pieces {
            cuts.insert(a);
            cuts.insert(b);
        }
        shifted.push(pieces);
    }

    let shares = |a: u8, b: u8| {
        gcl.entries
            .iter()
            .any(|e| e.open.0 & (1 << a) != 0 && e.open.0 & (1 << b) != 0)
    };
    let mut clashes = Vec::new();
    for a in 0..8u8 {
        for b in a + 1..8 {
            if shares(a, b) {
                continue;
            }
            let hit = shifted[a as usize].iter().any(|&(x0, x1)| {
                shifted[b as usize]
                    .iter()
                    .any(|&(y0, y1)| x0 < y1 && y0 < x1)
            });
            if hit {
                clashes.push((a, b));
            }
        }
    }
    if !clashes.is_empty() {
        return Err(GclError::Overlap(clashes));
    }

    let cuts: Vec<u64> = cuts.into_iter().collect();
    let mut entries = Vec::new();
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mask = (0..8u8)
            .filter(|&cl| shifted[cl as usize].iter().any(|&(x0, x1)| x0 <= a && b <= x1))
            .fold(0u8, |m, cl| m | (1 << cl));
        entries.push(GateEntry {
            duration: Duration::from_ns(b - a),
            open: ClassMask(mask),
        });
    }
    Ok(GateControlList::new(gcl.base_time, entries)?.normalized())
}
