//! Grant-based uplink: per-UE SR/BSR state, initial grants and the
//! disciplines that share the RBs left over after grant-free reservations.

use std::cmp::Ordering;
use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::flow::{QosProfile, ResourceType};
use crate::grantfree::calc_rbs;
use crate::link::{self, ChannelState, Cqi, Mcs, McsRange};
use crate::time::{Duration, TddPattern};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Discipline {
    StrictPriority,
    MaxCi,
    ProportionalFair,
    PdbPriority,
}

impl Discipline {
    pub const ALL: [Discipline; 4] = [
        Discipline::StrictPriority,
        Discipline::MaxCi,
        Discipline::ProportionalFair,
        Discipline::PdbPriority,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Discipline::StrictPriority => "strict_priority",
            Discipline::MaxCi => "max_ci",
            Discipline::ProportionalFair => "proportional_fair",
            Discipline::PdbPriority => "pdb_priority",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DynamicConfig {
    /// RBs in an initial grant when the profile carries no MDBV.
    pub initial_rbs: u32,
    /// Smoothing factor of the proportional-fair throughput average.
    pub pf_alpha: f64,
    /// Per-UE buffer limit in bytes; arrivals beyond it are tail-dropped.
    pub buffer_cap: Option<u64>,
}

impl Default for DynamicConfig {
    fn default() -> Self {
        DynamicConfig {
            initial_rbs: 2,
            pf_alpha: 0.01,
            buffer_cap: None,
        }
    }
}

/// Identifies a frame across the whole run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FrameKey {
    pub flow_id: u32,
    pub seq: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QueuedFrame {
    pub key: FrameKey,
    pub size: u32,
    pub remaining: u32,
    /// Arrival at the UE.
    pub arrival: Duration,
    /// True once any part of the frame was in a transport block that failed.
    pub corrupted: bool,
}

#[derive(Clone, Debug)]
pub struct UeUplinkState {
    pub ue_id: u32,
    pub flow_id: u32,
    pub qos: QosProfile,
    /// Served only through grant-free reservations.
    pub grant_free: bool,
    pub buffer: VecDeque<QueuedFrame>,
    /// Uplink slot (global index) carrying the outstanding SR.
    pub sr_slot: Option<u64>,
    /// Slot the initial grant answering the SR is planned for.
    pub initial_grant_slot: Option<u64>,
    /// Backlog known to the gNB.
    pub reported_backlog: u32,
    /// BSR received but not yet processed: (first TDD cycle it applies to, bytes).
    pub staged_bsr: Option<(u64, u32)>,
    pub ewma_rate: f64,
}

impl UeUplinkState {
    pub fn new(ue_id: u32, flow_id: u32, qos: QosProfile, grant_free: bool) -> Self {
        UeUplinkState {
            ue_id,
            flow_id,
            qos,
            grant_free,
            buffer: VecDeque::new(),
            sr_slot: None,
            initial_grant_slot: None,
            reported_backlog: 0,
            staged_bsr: None,
            ewma_rate: 1.0,
        }
    }

    pub fn buffered_bytes(&self) -> u64 {
        self.buffer.iter().map(|f| f.remaining as u64).sum()
    }

    /// Whether the gNB already knows this UE wants to send.
    pub fn awaiting_service(&self) -> bool {
        self.sr_slot.is_some()
            || self.initial_grant_slot.is_some()
            || self.reported_backlog > 0
            || self.staged_bsr.is_some_and(|(_, b)| b > 0)
    }

    /// Bytes sendable in a slot starting at `t`.
    pub fn sendable_bytes(&self, t: Duration) -> u64 {
        self.buffer
            .iter()
            .take_while(|f| f.arrival <= t)
            .map(|f| f.remaining as u64)
            .sum()
    }

    /// Waiting time of the oldest buffered frame.
    pub fn head_of_line_wait(&self, now: Duration) -> Duration {
        self.buffer
            .front()
            .map_or(Duration::ZERO, |f| now.saturating_sub(f.arrival))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArrivalOutcome {
    Buffered { sr_slot: Option<u64> },
    Overflow,
}

/// Buffers a frame and decides whether an SR is needed.
pub fn on_arrival(
    ue: &mut UeUplinkState,
    frame: QueuedFrame,
    pattern: &TddPattern,
    cfg: &DynamicConfig,
) -> ArrivalOutcome {
    if let Some(cap) = cfg.buffer_cap {
        if ue.buffered_bytes() + frame.remaining as u64 > cap {
            return ArrivalOutcome::Overflow;
        }
    }
    ue.buffer.push_back(frame);
    if ue.grant_free || ue.awaiting_service() {
        return ArrivalOutcome::Buffered { sr_slot: None };
    }
    let sr = pattern
        .next_ul_opportunity(frame.arrival)
        .map(|r| pattern.global_index(r));
    ue.sr_slot = sr;
    ArrivalOutcome::Buffered { sr_slot: sr }
}

/// Slot of the initial grant for an SR received in `sr_slot`: the first
/// data-carrying slot of the following TDD cycle.
pub fn on_sr(pattern: &TddPattern, sr_slot: u64) -> Option<u64> {
    let frame = pattern.from_global(sr_slot).frame + 1;
    first_data_slot_of_cycle(pattern, frame)
}

pub fn first_data_slot_of_cycle(pattern: &TddPattern, frame: u64) -> Option<u64> {
    let s = pattern.first_uplink_slot()?;
    Some(frame * pattern.len() as u64 + s as u64)
}

/// RB count of an initial grant. With an MDBV the grant is sized to carry a
/// whole burst at the UE's current MCS, capped by `max_rbs`.
pub fn initial_grant_rbs(qos: &QosProfile, cfg: &DynamicConfig, mcs: Mcs, max_rbs: u32) -> u32 {
    match qos.mdbv {
        Some(mdbv) => link::min_rbs_for(mcs, mdbv, max_rbs).unwrap_or(max_rbs),
        None => cfg.initial_rbs.min(max_rbs),
    }
}

/// Records a buffer status report. Reports overwrite, never accumulate.
pub fn on_bsr(ue: &mut UeUplinkState, backlog: u32) {
    ue.reported_backlog = backlog;
}

/// Removes DC-GBR frames that have waited longer than the delay budget.
pub fn rlc_pdb_drop(ue: &mut UeUplinkState, now: Duration) -> Vec<QueuedFrame> {
    if ue.qos.resource_type != ResourceType::DcGbr {
        return Vec::new();
    }
    let pdb = ue.qos.pdb;
    let mut dropped = Vec::new();
    ue.buffer.retain(|f| {
        let keep = now.saturating_sub(f.arrival) <= pdb;
        if !keep {
            dropped.push(*f);
        }
        keep
    });
    dropped
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DynGrant {
    pub ue_id: u32,
    pub rbs: Vec<u32>,
    pub mcs: Mcs,
    /// Transport block size of the grant.
    pub tbs: u32,
}

fn ue_cqis(channel: &ChannelState, ue: u32, rbs: &[u32]) -> Vec<(u32, Cqi)> {
    let row = channel.row(ue).expect("every UE has a channel row");
    rbs.iter().map(|&rb| (rb, row[rb as usize])).collect()
}

/// Mean-CQI MCS of `ue` over `rbs`.
pub fn effective_over(channel: &ChannelState, ue: u32, rbs: &[u32]) -> Option<Mcs> {
    let c: Vec<Cqi> = ue_cqis(channel, ue, rbs).into_iter().map(|x| x.1).collect();
    link::effective_mcs(&c, McsRange::FULL).ok().map(|e| e.mcs)
}

/// Orders backlogged UEs by the discipline's metric, most deserving first.
pub fn rank(
    discipline: Discipline,
    ues: &[&UeUplinkState],
    free_rbs: &[u32],
    channel: &ChannelState,
    now: Duration,
) -> Vec<u32> {
    let per_rb = |u: &UeUplinkState| {
        effective_over(channel, u.ue_id, free_rbs).map_or(0, |m| link::tbs(m, 1))
    };
    let mut order: Vec<&UeUplinkState> = ues.to_vec();
    match discipline {
        Discipline::StrictPriority => {
            order.sort_by_key(|u| (u.qos.priority, u.ue_id));
        }
        Discipline::MaxCi => {
            order.sort_by_key(|u| (std::cmp::Reverse(per_rb(u)), u.ue_id));
        }
        Discipline::ProportionalFair => {
            let mut keyed: Vec<(f64, &UeUplinkState)> = order
                .iter()
                .map(|u| (per_rb(u) as f64 / u.ewma_rate.max(f64::MIN_POSITIVE), *u))
                .collect();
            keyed.sort_by(|a, b| {
                b.0.partial_cmp(&a.0)
                    .unwrap_or(Ordering::Equal)
                    .then(a.1.ue_id.cmp(&b.1.ue_id))
            });
            order = keyed.into_iter().map(|x| x.1).collect();
        }
        Discipline::PdbPriority => {
            order.sort_by_key(|u| {
                let left = u.qos.pdb.as_ns() as i128 - u.head_of_line_wait(now).as_ns() as i128;
                (left, u.qos.priority, u.ue_id)
            });
        }
    }
    order.into_iter().map(|u| u.ue_id).collect()
}

/// Hands out `free_rbs` to backlogged UEs in discipline order, each UE
/// getting enough RBs for its reported backlog before the next is served.
pub fn schedule_residual(
    discipline: Discipline,
    ues: &[&UeUplinkState],
    free_rbs: &[u32],
    channel: &ChannelState,
    now: Duration,
) -> Vec<DynGrant> {
    let mut free: Vec<u32> = free_rbs.to_vec();
    let mut grants = Vec::new();
    for ue_id in rank(discipline, ues, &free, channel, now) {
        if free.is_empty() {
            break;
        }
        let ue = ues.iter().find(|u| u.ue_id == ue_id).expect("ranked from input");
        if ue.reported_backlog == 0 {
            continue;
        }
        let choice = calc_rbs(&ue_cqis(channel, ue_id, &free), ue.reported_backlog, McsRange::FULL);
        let Some(mcs) = choice.mcs else { continue };
        if choice.rbs.is_empty() {
            continue;
        }
        free.retain(|rb| !choice.rbs.contains(rb));
        grants.push(DynGrant {
            ue_id,
            tbs: link::tbs(mcs, choice.rbs.len() as u32),
            rbs: choice.rbs,
            mcs,
        });
    }
    grants
}

/// Updates the proportional-fair average with the bytes sent this slot.
pub fn update_ewma(ue: &mut UeUplinkState, sent: u32, alpha: f64) {
    ue.ewma_rate = (1.0 - alpha) * ue.ewma_rate + alpha * sent as f64;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::Fraction;
    use proptest::prelude::*;

    fn table3() -> TddPattern {
        TddPattern::parse("DDDDDDDSUU", 1, 106, Fraction::ONE).unwrap()
    }

    fn qos(priority: u8, rt: ResourceType) -> QosProfile {
        QosProfile {
            priority,
            pdb: Duration::from_ms(10),
            mdbv: None,
            resource_type: rt,
        }
    }

    fn ue(id: u32, priority: u8) -> UeUplinkState {
        UeUplinkState::new(id, id, qos(priority, ResourceType::NonGbr), false)
    }

    fn frame(seq: u64, arrival: Duration, size: u32) -> QueuedFrame {
        QueuedFrame {
            key: FrameKey { flow_id: 0, seq },
            size,
            remaining: size,
            arrival,
            corrupted: false,
        }
    }

    #[test]
    fn sr_goes_to_next_uplink_opportunity() {
        let p = table3();
        let cfg = DynamicConfig::default();
        let mut u = ue(1, 5);
        let out = on_arrival(&mut u, frame(0, Duration::from_ms(1), 100), &p, &cfg);
        assert_eq!(out, ArrivalOutcome::Buffered { sr_slot: Some(7) });
        // Arrival mid slot 9: next opportunity is slot 7 of the next cycle.
        let mut u = ue(1, 5);
        let out = on_arrival(&mut u, frame(0, Duration::from_us(4_600), 100), &p, &cfg);
        assert_eq!(out, ArrivalOutcome::Buffered { sr_slot: Some(17) });
    }

    #[test]
    fn sr_deduplication() {
        let p = table3();
        let cfg = DynamicConfig::default();
        let mut u = ue(1, 5);
        on_arrival(&mut u, frame(0, Duration::ZERO, 100), &p, &cfg);
        let out = on_arrival(&mut u, frame(1, Duration::from_us(1), 100), &p, &cfg);
        assert_eq!(out, ArrivalOutcome::Buffered { sr_slot: None });
        let mut u = ue(2, 5);
        u.initial_grant_slot = Some(17);
        let out = on_arrival(&mut u, frame(0, Duration::ZERO, 100), &p, &cfg);
        assert_eq!(out, ArrivalOutcome::Buffered { sr_slot: None });
    }

    #[test]
    fn buffer_cap_tail_drops() {
        let p = table3();
        let cfg = DynamicConfig {
            buffer_cap: Some(150),
            ..DynamicConfig::default()
        };
        let mut u = ue(1, 5);
        on_arrival(&mut u, frame(0, Duration::ZERO, 100), &p, &cfg);
        assert_eq!(
            on_arrival(&mut u, frame(1, Duration::ZERO, 100), &p, &cfg),
            ArrivalOutcome::Overflow
        );
        assert_eq!(u.buffer.len(), 1);
    }

    #[test]
    fn initial_grant_timing_and_size() {
        let p = table3();
        assert_eq!(on_sr(&p, 7), Some(17));
        assert_eq!(on_sr(&p, 19), Some(27));
        let cfg = DynamicConfig::default();
        let m = Mcs::new(9).unwrap();
        assert_eq!(initial_grant_rbs(&qos(1, ResourceType::Gbr), &cfg, m, 106), 2);
        let mut q = qos(1, ResourceType::Gbr);
        q.mdbv = Some(200);
        let n = initial_grant_rbs(&q, &cfg, m, 106);
        assert!(link::tbs(m, n) >= 200 && link::tbs(m, n - 1) < 200);
        q.mdbv = Some(1_000_000);
        assert_eq!(initial_grant_rbs(&q, &cfg, m, 51), 51);
    }

    #[test]
    fn bsr_overwrites() {
        let mut u = ue(1, 5);
        on_bsr(&mut u, 1500);
        assert!(u.awaiting_service());
        on_bsr(&mut u, 700);
        assert_eq!(u.reported_backlog, 700);
        on_bsr(&mut u, 0);
        assert!(!u.awaiting_service());
    }

    #[test]
    fn pdb_drop_boundaries() {
        let mut u = UeUplinkState::new(1, 1, qos(1, ResourceType::DcGbr), false);
        u.buffer.push_back(frame(0, Duration::ZERO, 10));
        u.buffer.push_back(frame(1, Duration::from_ns(1), 10));
        let now = Duration::from_ms(10) + Duration::from_ns(1);
        let d = rlc_pdb_drop(&mut u, now);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].key.seq, 0);
        assert_eq!(u.buffer.len(), 1);

        let mut n = UeUplinkState::new(2, 2, qos(1, ResourceType::NonGbr), false);
        n.buffer.push_back(frame(0, Duration::ZERO, 10));
        assert!(rlc_pdb_drop(&mut n, Duration::from_ms(100)).is_empty());
    }

    #[test]
    fn disciplines_rank_as_defined() {
        let mut ch = ChannelState::uniform(&[1, 2], 10, Cqi::new(15).unwrap());
        ch.set_row(2, Cqi::new(3).unwrap()).unwrap();
        let rbs: Vec<u32> = (0..10).collect();
        let mut a = ue(1, 7);
        let mut b = ue(2, 1);
        a.reported_backlog = 500;
        b.reported_backlog = 500;
        let now = Duration::ZERO;

        assert_eq!(rank(Discipline::MaxCi, &[&b, &a], &rbs, &ch, now), vec![1, 2]);
        assert_eq!(rank(Discipline::StrictPriority, &[&a, &b], &rbs, &ch, now), vec![2, 1]);

        let flat = ChannelState::uniform(&[1, 2], 10, Cqi::new(9).unwrap());
        a.ewma_rate = 1000.0;
        b.ewma_rate = 10.0;
        assert_eq!(rank(Discipline::ProportionalFair, &[&a, &b], &rbs, &flat, now), vec![2, 1]);

        a.buffer.push_back(frame(0, Duration::ZERO, 10));
        b.buffer.push_back(frame(0, Duration::from_ms(5), 10));
        let now = Duration::from_ms(6);
        assert_eq!(rank(Discipline::PdbPriority, &[&b, &a], &rbs, &ch, now), vec![1, 2]);
    }

    #[test]
    fn lone_ue_gets_what_it_needs() {
        let ch = ChannelState::uniform(&[1], 20, Cqi::new(9).unwrap());
        let mut a = ue(1, 1);
        a.reported_backlog = 300;
        let rbs: Vec<u32> = (0..20).collect();
        let g = schedule_residual(Discipline::StrictPriority, &[&a], &rbs, &ch, Duration::ZERO);
        assert_eq!(g.len(), 1);
        let m = link::cqi_to_mcs(Cqi::new(9).unwrap(), McsRange::FULL);
        assert_eq!(g[0].rbs.len() as u32, link::min_rbs_for(m, 300, 20).unwrap());
    }

    proptest! {
        #[test]
        fn strict_priority_starves_lower_classes(
            backlog in proptest::collection::vec(0u32..3000, 2..6),
            cap in 1u32..30,
        ) {
            let ch = ChannelState::uniform(&(0..backlog.len() as u32).collect::<Vec<_>>(), cap, Cqi::new(8).unwrap());
            let ues: Vec<UeUplinkState> = backlog.iter().enumerate().map(|(i, &b)| {
                let mut u = ue(i as u32, i as u8);
                u.reported_backlog = b;
                u
            }).collect();
            let refs: Vec<&UeUplinkState> = ues.iter().collect();
            let rbs: Vec<u32> = (0..cap).collect();
            let grants = schedule_residual(Discipline::StrictPriority, &refs, &rbs, &ch, Duration::ZERO);
            let mut used = std::collections::HashSet::new();
            for g in &grants {
                for &rb in &g.rbs {
                    prop_assert!(used.insert(rb));
                }
            }
            // A lower-priority UE is served only if every higher one is covered.
            for g in &grants {
                for u in &ues {
                    if u.qos.priority < ues[g.ue_id as usize].qos.priority && u.reported_backlog > 0 {
                        let got: u32 = grants.iter().filter(|x| x.ue_id == u.ue_id).map(|x| x.tbs).sum();
                        prop_assert!(got >= u.reported_backlog);
                    }
                }
            }
        }

        #[test]
        fn pf_ranking_is_scale_invariant(
            ewma in proptest::collection::vec(1.0f64..1e6, 2..6),
            scale in 1.0f64..1000.0,
        ) {
            let n = ewma.len() as u32;
            let ch = ChannelState::uniform(&(0..n).collect::<Vec<_>>(), 10, Cqi::new(8).unwrap());
            let rbs: Vec<u32> = (0..10).collect();
            let mk = |s: f64| -> Vec<UeUplinkState> {
                ewma.iter().enumerate().map(|(i, &e)| {
                    let mut u = ue(i as u32, 1);
                    u.ewma_rate = e * s;
                    u
                }).collect()
            };
            let a = mk(1.0);
            let b = mk(scale);
            let ra = rank(Discipline::ProportionalFair, &a.iter().collect::<Vec<_>>(), &rbs, &ch, Duration::ZERO);
            let rb = rank(Discipline::ProportionalFair, &b.iter().collect::<Vec<_>>(), &rbs, &ch, Duration::ZERO);
            prop_assert_eq!(ra, rb);
        }
    }
}
