//! Discrete-event run of the Talker, SW1, UE/gNB, SW2, Listener chain.
//!
//! Every stream has its own UE, its own talker link and SW1 egress port
//! towards that UE, and its own SW2 egress port towards the listener. The
//! NW-TT side of the gNB is one shared port. Frames move in whole units and
//! time is integer nanoseconds; the run is a pure function of scenario and
//! seed.

mod engine;
pub mod metrics;
pub mod output;
pub mod ran;
mod traffic;

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

pub use engine::{EventQueue, Phase};
pub use metrics::{DelayStats, TcSummary};
pub use ran::{GrantKind, GrantRow, LedgerRow, Ran, RanConfig, RanEvent, RanStats, UeSpec};
pub use traffic::{generate_traffic, Arrival, TrafficError};

use crate::bridge_delay::{bd_for_tc, nominal_report, BdReportRow};
use crate::dynamic::{ArrivalOutcome, FrameKey, QueuedFrame};
use crate::flow::TrafficClass;
use crate::grantfree::{admission_check, GfError};
use crate::link::ChannelState;
use crate::scenario::{sw2_gcl, validate, FlowConfig, Issue, Scenario, Traffic};
use crate::time::{Duration, TddPattern};
use crate::tsn::{psfp_filter, EgressPort, FilterVerdict, GateControlList, PortAction, StreamFilter, TwoRateMeterState};
use crate::tsn::DropReason;

/// Throughput windows for the coefficient of variation.
pub const CV_WINDOW: Duration = Duration::from_secs(1);

/// How long past the horizon the gNB keeps serving frames already
/// injected.
pub const DRAIN: Duration = Duration::from_secs(2);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Fate {
    Delivered,
    LostRadio,
    DroppedGate,
    DroppedMeter,
    DroppedPdb,
    DroppedOverflow,
    /// Still buffered at the UE when the drain period ended.
    InFlight,
}

impl Fate {
    pub const ALL: [Fate; 7] = [
        Fate::Delivered,
        Fate::LostRadio,
        Fate::DroppedGate,
        Fate::DroppedMeter,
        Fate::DroppedPdb,
        Fate::DroppedOverflow,
        Fate::InFlight,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Fate::Delivered => "delivered",
            Fate::LostRadio => "lost_radio",
            Fate::DroppedGate => "dropped_gate",
            Fate::DroppedMeter => "dropped_meter",
            Fate::DroppedPdb => "dropped_pdb",
            Fate::DroppedOverflow => "dropped_overflow",
            Fate::InFlight => "in_flight",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FrameRecord {
    pub flow_id: u32,
    pub seq: u32,
    pub tc: u8,
    pub size: u32,
    pub t_talker: Option<Duration>,
    pub t_ue_ingress: Option<Duration>,
    pub t_gnb_egress: Option<Duration>,
    pub t_listener: Option<Duration>,
    pub fate: Fate,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CqiRow {
    pub time_ns: u64,
    pub ue_id: u32,
    pub min: u8,
    pub mean_milli: u32,
    pub max: u8,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub scenario: String,
    pub scheduler: String,
    pub seed: u64,
    pub horizon_ns: u64,
    pub frames: u64,
    pub fates: BTreeMap<&'static str, u64>,
    pub rb_utilization_pct: f64,
    pub ran: RanStats,
    pub per_tc: BTreeMap<u8, TcSummary>,
    pub bd_report: Vec<BdReportRow>,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub records: Vec<FrameRecord>,
    pub ledger: Vec<LedgerRow>,
    pub grants: Vec<GrantRow>,
    pub cqi: Vec<CqiRow>,
    pub summary: Summary,
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("scenario is invalid: {}", .0.iter().map(|i| format!("{}: {}", i.code, i.message)).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Issue>),
    #[error("grant-free admission failed for streams {0:?}")]
    Admission(Vec<u32>),
    #[error(transparent)]
    GrantFree(#[from] GfError),
    #[error("stream {0}: {1}")]
    Traffic(u32, TrafficError),
    #[error("{0}")]
    Config(String),
}

/// Upper bound on talker-to-listener delay for each class present in the
/// scenario: link and switch terms plus the 5G bridge's reported maximum.
///
/// Every port term assumes at most one frame per stream waiting at a time,
/// which holds for streams whose period exceeds their path delay.
pub fn max_path_delays(
    s: &Scenario,
    pattern: &TddPattern,
    sw1: Option<&GateControlList>,
    sw2: Option<&GateControlList>,
) -> Result<BTreeMap<u8, Duration>, SimError> {
    let rate = s.wired.rate_bps;
    let tx = |b: u32| Duration::transmission(b as u64, rate);
    let gated = |g: Option<&GateControlList>, tc: TrafficClass, own: Duration| {
        g.map_or(Duration::ZERO, |g| g.max_closed(tc) + own)
    };
    let nominal = nominal_report(pattern, s.delay_params()).map_err(|e| SimError::Config(e.to_string()))?;
    let mut out: BTreeMap<u8, Duration> = BTreeMap::new();
    for f in &s.flows {
        let own = tx(f.traffic.size_range().1);
        let bd = match f.as_flow_spec() {
            Some(spec) => bd_for_tc(f.tc, pattern, s.delay_params(), Some(&spec))
                .map_err(|e| SimError::Config(e.to_string()))?
                .bounds
                .max,
            None => Duration::from_ns(
                nominal
                    .iter()
                    .find(|r| r.tc == f.tc)
                    .expect("nominal report covers all classes")
                    .max_ns,
            ),
        };
        let sw1_class = f.psfp.as_ref().and_then(|p| p.ipv).unwrap_or(f.tc);
        let shared: Duration = s
            .flows
            .iter()
            .filter(|o| o.tc >= f.tc)
            .map(|o| tx(o.traffic.size_range().1))
            .fold(Duration::ZERO, |a, b| a + b);
        let blocking = s
            .flows
            .iter()
            .filter(|o| o.tc < f.tc)
            .map(|o| tx(o.traffic.size_range().1))
            .max()
            .unwrap_or(Duration::ZERO);
        let total = own
            + s.wired.proc
            + gated(sw1, sw1_class, own)
            + own
            + bd
            + shared
            + blocking
            + s.wired.proc
            + gated(sw2, f.tc, own)
            + own;
        let e = out.entry(f.tc.get()).or_insert(Duration::ZERO);
        *e = (*e).max(total);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Ev {
    Channel,
    Emit(usize),
    PortWake(usize, u64),
    PortDone(usize, usize),
    Enqueue(usize, usize),
    UeArrival(usize),
    Slot(u64),
}

/// Port layout: talker links, SW1 egress per UE, the NW-TT port, SW2
/// egress per listener.
struct Ports {
    n: usize,
    ports: Vec<EgressPort<usize>>,
    wake_gen: Vec<u64>,
}

impl Ports {
    fn talker(&self, i: usize) -> usize {
        i
    }
    fn sw1(&self, i: usize) -> usize {
        self.n + i
    }
    fn nwtt(&self) -> usize {
        2 * self.n
    }
    fn sw2(&self, i: usize) -> usize {
        2 * self.n + 1 + i
    }
}

struct World<'a> {
    s: &'a Scenario,
    q: EventQueue<Ev>,
    ports: Ports,
    records: Vec<FrameRecord>,
    /// Stream index of each record.
    stream: Vec<usize>,
    /// Egress class at SW1 after ingress filtering.
    sw1_class: Vec<usize>,
    filters: Vec<StreamFilter>,
    unresolved: usize,
}

impl World<'_> {
    fn resolve(&mut self, idx: usize, fate: Fate) {
        self.records[idx].fate = fate;
        self.unresolved -= 1;
    }

    fn kick(&mut self, p: usize, t: Duration) {
        let port = &mut self.ports.ports[p];
        if port.busy_until() > t {
            return;
        }
        match port.service(t) {
            PortAction::Transmit { item, end, .. } => self.q.push(end, Phase::Frame, Ev::PortDone(p, item)),
            PortAction::WaitUntil(w) => {
                self.ports.wake_gen[p] += 1;
                self.q.push(w, Phase::Frame, Ev::PortWake(p, self.ports.wake_gen[p]));
            }
            PortAction::Idle => {}
        }
    }

    fn enqueue(&mut self, p: usize, idx: usize, t: Duration) {
        let class = if p == self.ports.sw1(self.stream[idx]) {
            self.sw1_class[idx]
        } else {
            self.records[idx].tc as usize
        };
        let size = self.records[idx].size;
        self.ports.ports[p].enqueue(idx, size, class);
        self.kick(p, t);
    }

    fn port_done(&mut self, p: usize, idx: usize, t: Duration) {
        let i = self.stream[idx];
        let proc = self.s.wired.proc;
        if p == self.ports.talker(i) {
            let tc = TrafficClass::new(self.records[idx].tc).expect("validated class");
            match psfp_filter(&mut self.filters[i], tc, self.records[idx].size, t) {
                FilterVerdict::Pass(c) => {
                    self.sw1_class[idx] = c.get() as usize;
                    self.q.push(t + proc, Phase::Frame, Ev::Enqueue(self.ports.sw1(i), idx));
                }
                FilterVerdict::Drop(DropReason::Gate) => self.resolve(idx, Fate::DroppedGate),
                FilterVerdict::Drop(DropReason::Meter) => self.resolve(idx, Fate::DroppedMeter),
            }
        } else if p == self.ports.sw1(i) {
            self.records[idx].t_ue_ingress = Some(t);
            self.q.push(t + self.s.delta, Phase::Frame, Ev::UeArrival(idx));
        } else if p == self.ports.nwtt() {
            self.q.push(t + proc, Phase::Frame, Ev::Enqueue(self.ports.sw2(i), idx));
        } else {
            self.records[idx].t_listener = Some(t);
            self.resolve(idx, Fate::Delivered);
        }
        self.kick(p, t);
    }
}

fn cqi_rows(t: Duration, ch: &ChannelState, out: &mut Vec<CqiRow>) {
    for &ue in ch.ues() {
        let row = ch.row(ue).expect("listed UE");
        let sum: u32 = row.iter().map(|c| c.get() as u32).sum();
        out.push(CqiRow {
            time_ns: t.as_ns(),
            ue_id: ue,
            min: row.iter().map(|c| c.get()).min().unwrap_or(0),
            mean_milli: sum * 1000 / row.len().max(1) as u32,
            max: row.iter().map(|c| c.get()).max().unwrap_or(0),
        });
    }
}

fn channel_seed(seed: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ 0xC4A7
}

fn stream_filter(f: &FlowConfig, sw1: Option<&GateControlList>) -> StreamFilter {
    let mut filter = StreamFilter::passthrough(f.id);
    if let Some(p) = &f.psfp {
        if p.gate_mirror {
            filter.gate = sw1.cloned();
        }
        filter.ipv = p.ipv;
        filter.meter = p.meter.map(TwoRateMeterState::new);
    }
    filter
}

/// Grant-free schedule the run starts from: the channel at time zero for
/// adaptive mode, the pinned channel for a static MCS.
pub fn initial_schedule(s: &Scenario, seed: u64) -> Result<crate::grantfree::GrantFreeSchedule, SimError> {
    let pattern = s.pattern.build().map_err(|e| SimError::Config(e.to_string()))?;
    let ue_ids: Vec<u32> = s.flows.iter().map(|f| f.ue_id).collect();
    let channel = ChannelState::new(&ue_ids, pattern.n_rb(), &s.channel, channel_seed(seed));
    let ran = Ran::new(ran_config(s, &pattern), &ue_specs(s), s.grant_free_flows(), &channel)?;
    Ok(ran.schedule().clone())
}

fn ue_specs(s: &Scenario) -> Vec<UeSpec> {
    s.flows
        .iter()
        .map(|f| UeSpec {
            ue_id: f.ue_id,
            flow_id: f.id,
            qos: f.qos.clone(),
            grant_free: s.is_grant_free(f),
        })
        .collect()
}

fn ran_config(s: &Scenario, pattern: &TddPattern) -> RanConfig {
    RanConfig {
        pattern: pattern.clone(),
        delta: s.delta,
        grant_free: s.scheduler.grant_free,
        range: s.mcs_range,
        discipline: s.scheduler.dynamic,
        dynamic: s.dynamic.clone(),
    }
}

/// Executes one seeded run of a scenario.
pub fn run(s: &Scenario, seed: u64) -> Result<RunOutput, SimError> {
    let report = validate(s);
    if !report.is_ok() {
        return Err(SimError::Invalid(report.errors));
    }
    let pattern = s.pattern.build().map_err(|e| SimError::Config(e.to_string()))?;
    let gf_flows = s.grant_free_flows();
    if !gf_flows.is_empty() {
        let adm = admission_check(&gf_flows, &pattern, s.mcs_range.min(), s.delay_params())?;
        if let crate::grantfree::Admission::Infeasible(unserved) = adm {
            return Err(SimError::Admission(unserved));
        }
    }
    let sw1 = match &s.gcl.sw1 {
        Some(g) => Some(g.build().map_err(|e| SimError::Config(e.to_string()))?),
        None => None,
    };
    let sw2 = sw2_gcl(s, &pattern).map_err(SimError::Config)?;
    let deadlines = max_path_delays(s, &pattern, sw1.as_ref(), sw2.as_ref())?;

    let ue_ids: Vec<u32> = s.flows.iter().map(|f| f.ue_id).collect();
    let mut channel = ChannelState::new(&ue_ids, pattern.n_rb(), &s.channel, channel_seed(seed));
    let mut ran = Ran::new(ran_config(s, &pattern), &ue_specs(s), gf_flows, &channel)?;

    let n = s.flows.len();
    let mut ports = Vec::with_capacity(3 * n + 1);
    ports.extend((0..n).map(|_| EgressPort::new(s.wired.rate_bps, None)));
    ports.extend((0..n).map(|_| EgressPort::new(s.wired.rate_bps, sw1.clone())));
    ports.push(EgressPort::new(s.wired.rate_bps, None));
    ports.extend((0..n).map(|_| EgressPort::new(s.wired.rate_bps, sw2.clone())));
    let mut w = World {
        s,
        q: EventQueue::default(),
        ports: Ports {
            n,
            wake_gen: vec![0; ports.len()],
            ports,
        },
        records: Vec::new(),
        stream: Vec::new(),
        sw1_class: Vec::new(),
        filters: s.flows.iter().map(|f| stream_filter(f, sw1.as_ref())).collect(),
        unresolved: 0,
    };

    let mut keys: BTreeMap<FrameKey, usize> = BTreeMap::new();
    for (i, f) in s.flows.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(f.id as u64);
        let lead_max = s.talker_lead(f.traffic.size_range().1);
        let start = match f.traffic {
            Traffic::Periodic { .. } => Duration::ZERO,
            _ => lead_max,
        };
        let arrivals = generate_traffic(&f.traffic, start, s.horizon, &mut rng).map_err(|e| SimError::Traffic(f.id, e))?;
        for (seq, a) in arrivals.into_iter().enumerate() {
            let idx = w.records.len();
            let t_talker = a.t.checked_sub(s.talker_lead(a.size)).ok_or_else(|| {
                SimError::Config(format!("stream {}: arrival at {} precedes the talker lead", f.id, a.t))
            })?;
            w.records.push(FrameRecord {
                flow_id: f.id,
                seq: seq as u32,
                tc: f.tc.get(),
                size: a.size,
                t_talker: Some(t_talker),
                t_ue_ingress: None,
                t_gnb_egress: None,
                t_listener: None,
                fate: Fate::InFlight,
            });
            w.stream.push(i);
            w.sw1_class.push(f.tc.get() as usize);
            keys.insert(
                FrameKey {
                    flow_id: f.id,
                    seq: seq as u64,
                },
                idx,
            );
            w.q.push(t_talker, Phase::Frame, Ev::Emit(idx));
        }
    }
    w.unresolved = w.records.len();

    let mut cqi = Vec::new();
    cqi_rows(Duration::ZERO, &channel, &mut cqi);
    if !channel.is_frozen() && channel.update_period() < s.horizon {
        w.q.push(channel.update_period(), Phase::Channel, Ev::Channel);
    }
    let next_slot = |from: u64| {
        (from..)
            .find(|&g| pattern.label(pattern.from_global(g).slot).is_uplink_capable())
            .expect("validated pattern has uplink slots")
    };
    let first = next_slot(0);
    if pattern.global_start(first) < s.horizon {
        w.q.push(pattern.global_start(first), Phase::Slot, Ev::Slot(first));
    }

    let mut ledger = Vec::new();
    let mut grants = Vec::new();
    while let Some((t, ev)) = w.q.pop() {
        match ev {
            Ev::Channel => {
                channel.step();
                cqi_rows(t, &channel, &mut cqi);
                ran.on_channel_update(t, &channel)?;
                let next = t + channel.update_period();
                if next < s.horizon {
                    w.q.push(next, Phase::Channel, Ev::Channel);
                }
            }
            Ev::Emit(idx) => {
                let p = w.ports.talker(w.stream[idx]);
                w.enqueue(p, idx, t);
            }
            Ev::PortWake(p, gen) => {
                if w.ports.wake_gen[p] == gen {
                    w.kick(p, t);
                }
            }
            Ev::PortDone(p, idx) => w.port_done(p, idx, t),
            Ev::Enqueue(p, idx) => w.enqueue(p, idx, t),
            Ev::UeArrival(idx) => {
                let r = &w.records[idx];
                let frame = QueuedFrame {
                    key: FrameKey {
                        flow_id: r.flow_id,
                        seq: r.seq as u64,
                    },
                    size: r.size,
                    remaining: r.size,
                    arrival: t,
                    corrupted: false,
                };
                let ue = s.flows[w.stream[idx]].ue_id;
                if ran.enqueue(ue, frame) == ArrivalOutcome::Overflow {
                    w.resolve(idx, Fate::DroppedOverflow);
                }
            }
            Ev::Slot(g) => {
                let rep = ran.process_slot(g, &channel);
                let end = t + pattern.t_slot();
                for e in rep.events {
                    match e {
                        RanEvent::Done { key, lost } => {
                            let idx = keys[&key];
                            w.records[idx].t_gnb_egress = Some(end);
                            if lost {
                                w.resolve(idx, Fate::LostRadio);
                            } else {
                                let p = w.ports.nwtt();
                                w.q.push(end, Phase::Frame, Ev::Enqueue(p, idx));
                            }
                        }
                        RanEvent::PdbDrop { key } => w.resolve(keys[&key], Fate::DroppedPdb),
                    }
                }
                if t < s.horizon {
                    ledger.extend(rep.ledger);
                    grants.extend(rep.grants);
                }
                let g2 = next_slot(g + 1);
                let t2 = pattern.global_start(g2);
                if t2 < s.horizon || (w.unresolved > 0 && t2 < s.horizon + DRAIN) {
                    w.q.push(t2, Phase::Slot, Ev::Slot(g2));
                }
            }
        }
    }

    let records = w.records;
    let mut fates: BTreeMap<&'static str, u64> = Fate::ALL.iter().map(|f| (f.name(), 0)).collect();
    for r in &records {
        *fates.get_mut(r.fate.name()).expect("all fates listed") += 1;
    }
    let mut flows: BTreeMap<u8, Vec<u32>> = BTreeMap::new();
    for f in &s.flows {
        flows.entry(f.tc.get()).or_default().push(f.id);
    }
    let pdb = s.flows.iter().map(|f| (f.id, f.qos.pdb)).collect();
    let per_tc = metrics::per_tc(&metrics::TcInputs {
        records: &records,
        deadline: &deadlines,
        pdb: &pdb,
        flows: &flows,
        horizon: s.horizon,
        window: CV_WINDOW,
    });
    let summary = Summary {
        scenario: s.name.clone(),
        scheduler: s.scheduler.to_string(),
        seed,
        horizon_ns: s.horizon.as_ns(),
        frames: records.len() as u64,
        fates,
        rb_utilization_pct: metrics::rb_utilization(&ledger),
        ran: ran.stats(),
        per_tc,
        bd_report: nominal_report(&pattern, s.delay_params()).map_err(|e| SimError::Config(e.to_string()))?,
    };
    Ok(RunOutput {
        records,
        ledger,
        grants,
        cqi,
        summary,
    })
}

