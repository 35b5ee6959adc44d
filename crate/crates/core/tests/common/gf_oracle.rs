//! Exhaustive feasibility search for small grant-free instances.
//!
//! Works from first principles: it re-derives every instance's usable slots
//! from the calendar and tries every split of RB counts across them. UEs see
//! a uniform CQI, so only the number of RBs in a slot matters.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tsnbridge::bridge_delay::DelayParams;
use tsnbridge::flow::{FlowSpec, QosProfile, ResourceType, TrafficClass};
use tsnbridge::link::{cqi_to_mcs, tbs, Cqi, McsRange};
use tsnbridge::time::{Duration, Fraction, TddPattern};

#[derive(Clone, Debug)]
pub struct Case {
    pub pattern: TddPattern,
    pub flows: Vec<FlowSpec>,
    pub cqi: Vec<Cqi>,
    pub range: McsRange,
    pub delta: DelayParams,
}

struct Demand {
    /// Hyperperiod slot indices usable by the instance.
    slots: Vec<usize>,
    /// Bytes carried by 0..=cap RBs.
    bytes_by_rbs: Vec<u32>,
    need: u32,
}

fn lcm(a: u64, b: u64) -> u64 {
    let mut x = a;
    let mut y = b;
    while y != 0 {
        (x, y) = (y, x % y);
    }
    a / x * b
}

fn demands(c: &Case) -> (Vec<Demand>, Vec<u32>) {
    let p = &c.pattern;
    let slot = p.t_slot().as_ns();
    let cycle = p.t_tdd().as_ns();
    let hp = c.flows.iter().fold(cycle, |h, f| lcm(h, f.period.as_ns()));
    let hp_slots = (hp / slot) as usize;
    let caps: Vec<u32> = (0..hp_slots).map(|g| p.capacity(g % p.len())).collect();
    let max_cap = *caps.iter().max().unwrap();
    let delta = c.delta.delta.as_ns();

    let mut out = Vec::new();
    for (i, f) in c.flows.iter().enumerate() {
        let mcs = cqi_to_mcs(c.cqi[i], c.range);
        let bytes_by_rbs = (0..=max_cap).map(|k| tbs(mcs, k)).collect::<Vec<_>>();
        // A class-6 stream keeps one fixed slot when its arrival hits a data
        // slot start and its period is whole cycles.
        let phase = (f.bat.as_ns() + delta) % cycle;
        let pinned = f.tc.get() == 6
            && phase.is_multiple_of(slot)
            && p.capacity((phase / slot) as usize) > 0
            && f.period.as_ns() % cycle == 0;
        for k in 0..hp / f.period.as_ns() {
            let arrival = (f.bat.as_ns() + delta + k * f.period.as_ns()) % hp;
            let last_end = if pinned { arrival + slot } else { arrival + cycle + slot };
            let slots = (arrival.div_ceil(slot)..)
                .take_while(|g| (g + 1) * slot <= last_end)
                .map(|g| (g as usize) % hp_slots)
                .filter(|&s| caps[s] > 0)
                .collect();
            out.push(Demand {
                slots,
                bytes_by_rbs: bytes_by_rbs.clone(),
                need: f.bs,
            });
        }
    }
    (out, caps)
}

fn place(
    d: &[Demand],
    idx: usize,
    caps: &mut Vec<u32>,
    memo: &mut HashMap<(usize, Vec<u32>), bool>,
) -> bool {
    if idx == d.len() {
        return true;
    }
    let key = (idx, caps.clone());
    if let Some(&v) = memo.get(&key) {
        return v;
    }
    let dm = &d[idx];
    let ok = split(dm, 0, dm.need, idx, d, caps, memo);
    memo.insert(key, ok);
    ok
}

fn split(
    dm: &Demand,
    pos: usize,
    left: u32,
    idx: usize,
    d: &[Demand],
    caps: &mut Vec<u32>,
    memo: &mut HashMap<(usize, Vec<u32>), bool>,
) -> bool {
    if left == 0 {
        return place(d, idx + 1, caps, memo);
    }
    if pos == dm.slots.len() {
        return false;
    }
    let s = dm.slots[pos];
    for k in 0..=caps[s] {
        let got = dm.bytes_by_rbs[k as usize];
        caps[s] -= k;
        let ok = split(dm, pos + 1, left.saturating_sub(got), idx, d, caps, memo);
        caps[s] += k;
        if ok {
            return true;
        }
        if got >= left {
            break;
        }
    }
    false
}

/// True if some assignment of RB counts serves every instance in its window.
pub fn exhaustive_feasible(c: &Case) -> bool {
    let (d, mut caps) = demands(c);
    if d.iter().any(|x| x.slots.is_empty()) {
        return false;
    }
    place(&d, 0, &mut caps, &mut HashMap::new())
}

const PATTERNS: [&str; 8] = ["U", "DU", "SU", "DSU", "UU", "DDSU", "DUDU", "SUDU"];

/// Random case inside the oracle's scope: at most 3 flows, hyperperiod of at
/// most 2 cycles, at most 4 RBs per slot.
pub fn random_case(rng: &mut ChaCha8Rng) -> Case {
    let labels = PATTERNS[rng.random_range(0..PATTERNS.len())];
    let n_rb = rng.random_range(1..=4);
    let pattern = TddPattern::parse(labels, 1, n_rb, Fraction::ONE).unwrap();
    let cycle = pattern.t_tdd();
    let n_flows = rng.random_range(1..=3);
    let two_cycles = rng.random_bool(0.5);
    let slot_us = pattern.t_slot().as_ns() / 1000;
    let mut flows = Vec::new();
    let mut cqi = Vec::new();
    for id in 0..n_flows {
        let period = if two_cycles && rng.random_bool(0.5) { cycle * 2 } else { cycle };
        // Mostly slot-aligned arrivals, sometimes in between.
        let half_slots = rng.random_range(0..(period.as_ns() / 1000 / slot_us) * 2);
        let bat = Duration::from_us(half_slots * slot_us / 2);
        let tc = if rng.random_bool(0.5) { 6 } else { 5 };
        let bs = rng.random_range(1..=120);
        flows.push(FlowSpec {
            id,
            ue_id: id,
            bat,
            bs,
            period,
            tc: TrafficClass::new(tc).unwrap(),
            qos: QosProfile {
                priority: 1,
                pdb: period,
                mdbv: None,
                resource_type: ResourceType::DcGbr,
            },
        });
        cqi.push(Cqi::new(rng.random_range(1..=15)).unwrap());
    }
    Case {
        pattern,
        flows,
        cqi,
        range: McsRange::FULL,
        delta: DelayParams::default(),
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Parameter grid walked in full by [`enumerate_cases`].
pub struct Grid {
    pub patterns: &'static [&'static str],
    pub n_rb: &'static [u32],
    /// Burst sizes paired with the CQI the carrying UE reports.
    pub loads: &'static [(u32, u8)],
}

/// Every case of the grid: each pattern and RB count, and every multiset of
/// one to three streams drawn from class {5, 6}, period {1, 2} cycles,
/// arrival at the cycle start, half a slot in or at the last slot, and the
/// grid's loads.
pub fn enumerate_cases(grid: &Grid) -> Vec<Case> {
    let mut out = Vec::new();
    for labels in grid.patterns {
        for &n_rb in grid.n_rb {
            let pattern = TddPattern::parse(labels, 1, n_rb, Fraction::ONE).unwrap();
            let cycle = pattern.t_tdd();
            let slot = pattern.t_slot();
            let bats = [Duration::ZERO, Duration::from_ns(slot.as_ns() / 2), slot * (pattern.len() as u64 - 1)];
            let mut options = Vec::new();
            for tc in [5u8, 6] {
                for period in [cycle, cycle * 2] {
                    for bat in bats {
                        for &(bs, cqi) in grid.loads {
                            options.push((tc, period, bat, bs, cqi));
                        }
                    }
                }
            }
            let n = options.len();
            let mut pick = |idx: &[usize]| {
                let mut flows = Vec::new();
                let mut cqi = Vec::new();
                for (id, &i) in idx.iter().enumerate() {
                    let (tc, period, bat, bs, q) = options[i];
                    flows.push(FlowSpec {
                        id: id as u32,
                        ue_id: id as u32,
                        bat,
                        bs,
                        period,
                        tc: TrafficClass::new(tc).unwrap(),
                        qos: QosProfile {
                            priority: 1,
                            pdb: period,
                            mdbv: None,
                            resource_type: ResourceType::DcGbr,
                        },
                    });
                    cqi.push(Cqi::new(q).unwrap());
                }
                out.push(Case {
                    pattern: pattern.clone(),
                    flows,
                    cqi,
                    range: McsRange::FULL,
                    delta: DelayParams::default(),
                });
            };
            for a in 0..n {
                pick(&[a]);
                for b in a..n {
                    pick(&[a, b]);
                    for c in b..n {
                        pick(&[a, b, c]);
                    }
                }
            }
        }
    }
    out
}
