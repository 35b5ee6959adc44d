//! The 5G segment: UE buffers, grant-free reservations and the grant-based
//! path, advanced one uplink-capable slot at a time.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::bridge_delay::DelayParams;
use crate::dynamic::{
    self, initial_grant_rbs, on_arrival, on_bsr, rlc_pdb_drop, schedule_residual, update_ewma,
    ArrivalOutcome, Discipline, DynamicConfig, FrameKey, QueuedFrame, UeUplinkState,
};
use crate::flow::{FlowSpec, QosProfile};
use crate::grantfree::{needs_reschedule, preallocate, supportable_mcs, GfError, GrantFreeSchedule};
use crate::link::{self, cqi_for_mcs, ChannelState, Cqi, Mcs, McsRange};
use crate::scenario::GfMode;
use crate::time::{Duration, TddPattern};

#[derive(Clone, Debug)]
pub struct RanConfig {
    pub pattern: TddPattern,
    pub delta: Duration,
    pub grant_free: Option<GfMode>,
    pub range: McsRange,
    pub discipline: Option<Discipline>,
    pub dynamic: DynamicConfig,
}

/// A UE and the single stream it carries.
#[derive(Clone, Debug)]
pub struct UeSpec {
    pub ue_id: u32,
    pub flow_id: u32,
    pub qos: QosProfile,
    pub grant_free: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GrantKind {
    GrantFree,
    Initial,
    Bsr,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GrantRow {
    pub time_ns: u64,
    pub slot: u64,
    pub ue_id: u32,
    pub kind: GrantKind,
    pub rbs: u32,
    pub mcs: u8,
    pub tbs: u32,
    pub sent: u32,
    pub lost: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LedgerRow {
    pub slot: u64,
    pub time_ns: u64,
    pub capacity: u32,
    pub gf_reserved: u32,
    pub gf_used: u32,
    pub dyn_granted: u32,
    pub dyn_used: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RanEvent {
    /// Last byte left the UE; `lost` when any part rode a failed block.
    Done { key: FrameKey, lost: bool },
    PdbDrop { key: FrameKey },
}

#[derive(Clone, Debug, Default)]
pub struct SlotReport {
    pub events: Vec<RanEvent>,
    pub ledger: Option<LedgerRow>,
    pub grants: Vec<GrantRow>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct RanStats {
    pub reschedules: u32,
    pub reschedule_failures: u32,
    pub deferred_initial_grants: u32,
    pub schedule_fallbacks: u32,
}

pub struct Ran {
    cfg: RanConfig,
    ues: BTreeMap<u32, UeUplinkState>,
    gf_flows: Vec<FlowSpec>,
    schedule: GrantFreeSchedule,
    pending: Option<(Duration, GrantFreeSchedule)>,
    /// Planned initial grants by slot: (slot carrying the SR, UE).
    initial: BTreeMap<u64, Vec<(u64, u32)>>,
    stats: RanStats,
}

impl Ran {
    pub fn new(
        cfg: RanConfig,
        ues: &[UeSpec],
        gf_flows: Vec<FlowSpec>,
        channel: &ChannelState,
    ) -> Result<Self, GfError> {
        let mut ran = Ran {
            ues: ues
                .iter()
                .map(|u| {
                    (
                        u.ue_id,
                        UeUplinkState::new(u.ue_id, u.flow_id, u.qos.clone(), u.grant_free),
                    )
                })
                .collect(),
            schedule: GrantFreeSchedule::empty(&cfg.pattern),
            gf_flows,
            pending: None,
            initial: BTreeMap::new(),
            stats: RanStats::default(),
            cfg,
        };
        if !ran.gf_flows.is_empty() {
            ran.schedule = ran.compute_schedule(channel)?;
        }
        Ok(ran)
    }

    fn delay(&self) -> DelayParams {
        DelayParams {
            delta: self.cfg.delta,
        }
    }

    /// Fresh schedule for the current channel. An adaptive pass that leaves
    /// streams unserved falls back to the admission schedule at the minimum
    /// MCS, which is feasible by validation.
    fn compute_schedule(&mut self, channel: &ChannelState) -> Result<GrantFreeSchedule, GfError> {
        let p = &self.cfg.pattern;
        match self.cfg.grant_free {
            None => Ok(GrantFreeSchedule::empty(p)),
            Some(GfMode::Static { mcs }) => {
                preallocate(&self.gf_flows, p, &channel.pinned(cqi_for_mcs(mcs)), McsRange::fixed(mcs), self.delay())
            }
            Some(GfMode::Adaptive) => {
                let s = preallocate(&self.gf_flows, p, channel, self.cfg.range, self.delay())?;
                if s.admission.is_feasible() {
                    return Ok(s);
                }
                self.stats.schedule_fallbacks += 1;
                let floor = self.cfg.range.min();
                let range = McsRange::new(floor, Mcs::MAX)?;
                preallocate(&self.gf_flows, p, &channel.pinned(cqi_for_mcs(floor)), range, self.delay())
            }
        }
    }

    pub fn schedule(&self) -> &GrantFreeSchedule {
        &self.schedule
    }

    pub fn stats(&self) -> RanStats {
        self.stats
    }

    pub fn ue(&self, ue_id: u32) -> Option<&UeUplinkState> {
        self.ues.get(&ue_id)
    }

    pub fn enqueue(&mut self, ue_id: u32, frame: QueuedFrame) -> ArrivalOutcome {
        let ue = self.ues.get_mut(&ue_id).expect("frame for a known UE");
        on_arrival(ue, frame, &self.cfg.pattern, &self.cfg.dynamic)
    }

    /// Re-plans adaptive reservations after a channel change; the new plan
    /// takes over at the next hyperperiod boundary.
    pub fn on_channel_update(&mut self, t: Duration, channel: &ChannelState) -> Result<(), GfError> {
        if self.cfg.grant_free != Some(GfMode::Adaptive) || self.gf_flows.is_empty() {
            return Ok(());
        }
        let upcoming = self.pending.as_ref().map_or(&self.schedule, |p| &p.1);
        if !needs_reschedule(upcoming, channel) {
            return Ok(());
        }
        let hp = self.schedule.hp;
        let boundary = hp * (t.div_floor(hp) + 1);
        let before = self.stats.schedule_fallbacks;
        let next = self.compute_schedule(channel)?;
        if self.stats.schedule_fallbacks > before {
            self.stats.reschedule_failures += 1;
        }
        self.stats.reschedules += 1;
        self.pending = Some((boundary, next));
        Ok(())
    }

    pub fn process_slot(&mut self, g: u64, channel: &ChannelState) -> SlotReport {
        let pattern = self.cfg.pattern.clone();
        let t = pattern.global_start(g);
        let r = pattern.from_global(g);
        let mut rep = SlotReport::default();

        if let Some((at, _)) = &self.pending {
            if *at <= t {
                self.schedule = self.pending.take().expect("checked").1;
            }
        }
        for ue in self.ues.values_mut() {
            if let Some((frame, b)) = ue.staged_bsr {
                if frame <= r.frame {
                    on_bsr(ue, b);
                    ue.staged_bsr = None;
                }
            }
        }
        if self.cfg.discipline == Some(Discipline::PdbPriority) {
            for ue in self.ues.values_mut().filter(|u| !u.grant_free) {
                for f in rlc_pdb_drop(ue, t) {
                    rep.events.push(RanEvent::PdbDrop { key: f.key });
                }
            }
        }
        for ue in self.ues.values_mut() {
            if ue.sr_slot == Some(g) {
                ue.sr_slot = None;
                if let Some(target) = dynamic::on_sr(&pattern, g) {
                    ue.initial_grant_slot = Some(target);
                    self.initial.entry(target).or_default().push((g, ue.ue_id));
                }
            }
        }

        let cap = pattern.capacity(r.slot);
        if cap == 0 {
            return rep;
        }
        let mut ledger = LedgerRow {
            slot: g,
            time_ns: t.as_ns(),
            capacity: cap,
            gf_reserved: 0,
            gf_used: 0,
            dyn_granted: 0,
            dyn_used: 0,
        };
        let mut taken = vec![false; cap as usize];
        let mut sent_now: BTreeMap<u32, u32> = BTreeMap::new();

        let allocs: Vec<_> = self.schedule.allocations_at(g).cloned().collect();
        for a in allocs {
            let n = a.rbs.len() as u32;
            for &rb in &a.rbs {
                taken[rb as usize] = true;
            }
            let ue = self.ues.get_mut(&a.ue_id).expect("reservation for a known UE");
            let lost = supportable_mcs(channel, a.ue_id, &a.rbs).map_or(true, |m| m < a.mcs);
            let tbs = link::tbs(a.mcs, n);
            let sent = send(ue, t, tbs, lost, &mut rep.events);
            ledger.gf_reserved += n;
            if sent > 0 {
                ledger.gf_used += n;
            }
            rep.grants.push(GrantRow {
                time_ns: t.as_ns(),
                slot: g,
                ue_id: a.ue_id,
                kind: GrantKind::GrantFree,
                rbs: n,
                mcs: a.mcs.get(),
                tbs,
                sent,
                lost,
            });
        }

        let free_rbs = |taken: &[bool]| -> Vec<u32> {
            (0..cap).filter(|&rb| !taken[rb as usize]).collect()
        };

        let mut requests = self.initial.remove(&g).unwrap_or_default();
        requests.sort_unstable();
        for (_, ue_id) in requests {
            let free = free_rbs(&taken);
            if free.is_empty() {
                let next = g + pattern.len() as u64;
                self.stats.deferred_initial_grants += 1;
                self.initial.entry(next).or_default().push((g, ue_id));
                self.ues.get_mut(&ue_id).expect("known UE").initial_grant_slot = Some(next);
                continue;
            }
            let row = channel.row(ue_id).expect("UE has a channel row");
            let cqis: Vec<Cqi> = free.iter().map(|&rb| row[rb as usize]).collect();
            let eff = link::effective_mcs(&cqis, McsRange::FULL).expect("non-empty");
            let ue = self.ues.get_mut(&ue_id).expect("known UE");
            let n = initial_grant_rbs(&ue.qos, &self.cfg.dynamic, eff.mcs, eff.eligible.len() as u32);
            let rbs: Vec<u32> = eff.eligible[..n as usize].iter().map(|&i| free[i]).collect();
            ue.initial_grant_slot = None;
            let sent = self.transmit_dynamic(ue_id, GrantKind::Initial, g, t, r.frame, &rbs, eff.mcs, channel, &mut rep);
            for &rb in &rbs {
                taken[rb as usize] = true;
            }
            ledger.dyn_granted += n;
            if sent > 0 {
                ledger.dyn_used += n;
            }
            *sent_now.entry(ue_id).or_default() += sent;
        }

        if let Some(discipline) = self.cfg.discipline {
            let free = free_rbs(&taken);
            let grants = {
                let backlogged: Vec<&UeUplinkState> = self
                    .ues
                    .values()
                    .filter(|u| !u.grant_free && u.reported_backlog > 0 && !sent_now.contains_key(&u.ue_id))
                    .collect();
                schedule_residual(discipline, &backlogged, &free, channel, t)
            };
            for gr in grants {
                let n = gr.rbs.len() as u32;
                let sent = self.transmit_dynamic(gr.ue_id, GrantKind::Bsr, g, t, r.frame, &gr.rbs, gr.mcs, channel, &mut rep);
                let ue = self.ues.get_mut(&gr.ue_id).expect("known UE");
                ue.reported_backlog = ue.reported_backlog.saturating_sub(gr.tbs);
                ledger.dyn_granted += n;
                if sent > 0 {
                    ledger.dyn_used += n;
                }
                *sent_now.entry(gr.ue_id).or_default() += sent;
            }
        }

        let alpha = self.cfg.dynamic.pf_alpha;
        for ue in self.ues.values_mut().filter(|u| !u.grant_free) {
            update_ewma(ue, sent_now.get(&ue.ue_id).copied().unwrap_or(0), alpha);
        }
        rep.ledger = Some(ledger);
        rep
    }

    /// Sends on a dynamic grant and piggybacks a buffer status report that
    /// the gNB acts on from the next TDD cycle.
    #[allow(clippy::too_many_arguments)]
    fn transmit_dynamic(
        &mut self,
        ue_id: u32,
        kind: GrantKind,
        g: u64,
        t: Duration,
        frame: u64,
        rbs: &[u32],
        mcs: Mcs,
        channel: &ChannelState,
        rep: &mut SlotReport,
    ) -> u32 {
        let ue = self.ues.get_mut(&ue_id).expect("known UE");
        let tbs = link::tbs(mcs, rbs.len() as u32);
        let lost = supportable_mcs(channel, ue_id, rbs).map_or(true, |m| m < mcs);
        let sent = send(ue, t, tbs, lost, &mut rep.events);
        let backlog = ue.buffered_bytes().min(u32::MAX as u64) as u32;
        ue.staged_bsr = Some((frame + 1, backlog));
        rep.grants.push(GrantRow {
            time_ns: t.as_ns(),
            slot: g,
            ue_id,
            kind,
            rbs: rbs.len() as u32,
            mcs: mcs.get(),
            tbs,
            sent,
            lost,
        });
        sent
    }
}

/// Moves up to `cap` bytes of frames that reached the UE by `t`, oldest
/// first.
fn send(ue: &mut UeUplinkState, t: Duration, cap: u32, lost: bool, events: &mut Vec<RanEvent>) -> u32 {
    let mut left = cap;
    let mut sent = 0;
    while left > 0 {
        let Some(f) = ue.buffer.front_mut() else { break };
        if f.arrival > t {
            break;
        }
        let take = left.min(f.remaining);
        f.remaining -= take;
        left -= take;
        sent += take;
        f.corrupted |= lost;
        if f.remaining == 0 {
            let f = ue.buffer.pop_front().expect("front exists");
            events.push(RanEvent::Done {
                key: f.key,
                lost: f.corrupted,
            });
        }
    }
    sent
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bridge_delay::dynamic_bd_bounds;
    use crate::flow::{ResourceType, TrafficClass};
    use crate::time::Fraction;

    fn table3() -> TddPattern {
        TddPattern::parse("DDDDDDDSUU", 1, 106, Fraction::ONE).unwrap()
    }

    fn cfg(grant_free: Option<GfMode>, discipline: Option<Discipline>) -> RanConfig {
        RanConfig {
            pattern: table3(),
            delta: Duration::ZERO,
            grant_free,
            range: McsRange::FULL,
            discipline,
            dynamic: DynamicConfig::default(),
        }
    }

    fn qos(mdbv: Option<u32>) -> QosProfile {
        QosProfile {
            priority: 3,
            pdb: Duration::from_ms(50),
            mdbv,
            resource_type: ResourceType::Gbr,
        }
    }

    fn frame(arrival: Duration, size: u32) -> QueuedFrame {
        QueuedFrame {
            key: FrameKey { flow_id: 1, seq: 0 },
            size,
            remaining: size,
            arrival,
            corrupted: false,
        }
    }

    /// Runs uplink slots until the frame leaves; returns the slot end.
    fn drain(ran: &mut Ran, ch: &ChannelState, from: u64) -> Duration {
        let p = table3();
        for g in from..from + 200 {
            if !p.label(p.from_global(g).slot).is_uplink_capable() {
                continue;
            }
            let rep = ran.process_slot(g, ch);
            if rep.events.iter().any(|e| matches!(e, RanEvent::Done { .. })) {
                return p.global_start(g) + p.t_slot();
            }
        }
        panic!("frame never left");
    }

    fn one_frame_delay(arrival: Duration, size: u32, mdbv: Option<u32>) -> Duration {
        let ch = ChannelState::uniform(&[1], 106, Cqi::new(9).unwrap());
        let ues = [UeSpec {
            ue_id: 1,
            flow_id: 1,
            qos: qos(mdbv),
            grant_free: false,
        }];
        let mut ran = Ran::new(cfg(None, Some(Discipline::StrictPriority)), &ues, vec![], &ch).unwrap();
        ran.enqueue(1, frame(arrival, size));
        let p = table3();
        drain(&mut ran, &ch, arrival.div_ceil(p.t_slot())) - arrival
    }

    #[test]
    fn dynamic_path_timing_matches_bounds() {
        let p = table3();
        let d = DelayParams::default();
        let default = dynamic_bd_bounds(&p, d, false).unwrap();
        let known = dynamic_bd_bounds(&p, d, true).unwrap();
        // Larger than a two-RB initial grant at CQI 9.
        let big = 400;
        assert_eq!(one_frame_delay(Duration::from_us(4_500), big, None), default.min);
        assert_eq!(one_frame_delay(Duration::from_us(4_500), big, Some(400)), known.min);
        let late = one_frame_delay(Duration::from_us(4_501), big, None);
        assert!(late <= default.max && late >= default.min, "{late}");
        let late = one_frame_delay(Duration::from_us(4_501), big, Some(400));
        assert!(late <= known.max && late >= known.min, "{late}");
    }

    #[test]
    fn grant_free_single_slot_delay() {
        let p = table3();
        let spec = FlowSpec {
            id: 1,
            ue_id: 1,
            bat: Duration::from_us(4_000),
            bs: 80,
            period: Duration::from_ms(5),
            tc: TrafficClass::new(6).unwrap(),
            qos: qos(None),
        };
        let ues = [UeSpec {
            ue_id: 1,
            flow_id: 1,
            qos: qos(None),
            grant_free: true,
        }];
        let ch = ChannelState::uniform(&[1], 106, Cqi::new(12).unwrap());
        let mut ran = Ran::new(cfg(Some(GfMode::Adaptive), None), &ues, vec![spec], &ch).unwrap();
        for k in 0..4u64 {
            let arrival = Duration::from_us(4_000) + p.t_tdd() * k;
            ran.enqueue(1, frame(arrival, 80));
            let end = drain(&mut ran, &ch, arrival.div_floor(p.t_slot()));
            assert_eq!(end - arrival, p.t_slot());
        }
    }

    #[test]
    fn adaptive_reschedule_waits_for_boundary() {
        let spec = FlowSpec {
            id: 1,
            ue_id: 1,
            bat: Duration::from_us(4_000),
            bs: 80,
            period: Duration::from_ms(10),
            tc: TrafficClass::new(5).unwrap(),
            qos: qos(None),
        };
        let ues = [UeSpec {
            ue_id: 1,
            flow_id: 1,
            qos: qos(None),
            grant_free: true,
        }];
        let mut ch = ChannelState::uniform(&[1], 106, Cqi::new(12).unwrap());
        let mut ran = Ran::new(cfg(Some(GfMode::Adaptive), None), &ues, vec![spec], &ch).unwrap();
        let before = ran.schedule().clone();
        ch.set_row(1, Cqi::new(5).unwrap()).unwrap();
        ran.on_channel_update(Duration::from_ms(3), &ch).unwrap();
        assert_eq!(ran.stats().reschedules, 1);
        ran.process_slot(8, &ch);
        assert_eq!(ran.schedule(), &before);
        ran.process_slot(27, &ch);
        assert_ne!(ran.schedule(), &before);
    }

    #[test]
    fn static_mode_loses_on_weak_channel() {
        let mcs = Mcs::new(20).unwrap();
        let spec = FlowSpec {
            id: 1,
            ue_id: 1,
            bat: Duration::from_us(4_000),
            bs: 80,
            period: Duration::from_ms(5),
            tc: TrafficClass::new(6).unwrap(),
            qos: qos(None),
        };
        let ues = [UeSpec {
            ue_id: 1,
            flow_id: 1,
            qos: qos(None),
            grant_free: true,
        }];
        let ch = ChannelState::uniform(&[1], 106, Cqi::new(4).unwrap());
        let mut ran = Ran::new(cfg(Some(GfMode::Static { mcs }), None), &ues, vec![spec], &ch).unwrap();
        ran.enqueue(1, frame(Duration::from_us(4_000), 80));
        let rep = ran.process_slot(8, &ch);
        assert_eq!(
            rep.events,
            vec![RanEvent::Done {
                key: FrameKey { flow_id: 1, seq: 0 },
                lost: true
            }]
        );
    }
}
