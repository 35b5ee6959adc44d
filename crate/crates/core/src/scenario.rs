//! Scenario files: schema, validation and the two built-in presets.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bridge_delay::{bd_for_tc, nominal_report, DelayParams};
use crate::dynamic::{Discipline, DynamicConfig};
use crate::flow::{FlowSpec, QosProfile, ResourceType, TrafficClass};
use crate::grantfree::{self, admission_check, Admission, DEFAULT_HP_CAP};
use crate::link::{ChannelParams, Cqi, Mcs, McsRange};
use crate::time::{Duration, Fraction, TddPattern};
use crate::tsn::{shift_gcl, ClassMask, GateControlList, GclWindow, MeterParams, GIGABIT};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternSpec {
    pub labels: String,
    pub mu: u8,
    pub n_rb: u32,
    #[serde(default = "one")]
    pub special_ul_fraction: Fraction,
}

fn one() -> Fraction {
    Fraction::ONE
}

impl PatternSpec {
    pub fn build(&self) -> Result<TddPattern, crate::time::TimeError> {
        TddPattern::parse(&self.labels, self.mu, self.n_rb, self.special_ul_fraction)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum GfMode {
    Adaptive,
    Static { mcs: Mcs },
}

/// One scheduler per 5G component: grant-free for classes 5 and 6, dynamic
/// for everything else. Without a grant-free scheduler every stream is
/// served dynamically.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchedulerSpec {
    #[serde(default)]
    pub grant_free: Option<GfMode>,
    #[serde(default)]
    pub dynamic: Option<Discipline>,
}

impl fmt::Display for SchedulerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        match self.grant_free {
            Some(GfMode::Adaptive) => parts.push("gf_adaptive".to_string()),
            Some(GfMode::Static { mcs }) => parts.push(format!("gf_static:{}", mcs.get())),
            None => {}
        }
        if let Some(d) = self.dynamic {
            parts.push(format!("dynamic:{}", d.name()));
        }
        if parts.is_empty() {
            parts.push("none".into());
        }
        write!(f, "{}", parts.join("+"))
    }
}

impl FromStr for SchedulerSpec {
    type Err = String;

    /// Parses `gf_adaptive`, `gf_static:11`, `dynamic:pdb_priority` and
    /// `+`-joined combinations such as `gf_adaptive+dynamic:max_ci`.
    fn from_str(s: &str) -> Result<Self, String> {
        let mut spec = SchedulerSpec {
            grant_free: None,
            dynamic: None,
        };
        for part in s.split('+') {
            let (head, arg) = part.split_once(':').unwrap_or((part, ""));
            match head {
                "gf_adaptive" => spec.grant_free = Some(GfMode::Adaptive),
                "gf_static" => {
                    let m: u8 = arg.parse().map_err(|_| format!("bad MCS in {part:?}"))?;
                    let mcs = Mcs::new(m).map_err(|e| e.to_string())?;
                    spec.grant_free = Some(GfMode::Static { mcs });
                }
                "dynamic" => {
                    let d = Discipline::ALL
                        .into_iter()
                        .find(|d| d.name() == arg || (arg == "pdb" && *d == Discipline::PdbPriority))
                        .ok_or_else(|| format!("unknown discipline {arg:?}"))?;
                    spec.dynamic = Some(d);
                }
                _ => return Err(format!("unknown scheduler {part:?}")),
            }
        }
        Ok(spec)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WiredSpec {
    pub rate_bps: u64,
    #[serde(rename = "proc_ns")]
    pub proc: Duration,
}

impl Default for WiredSpec {
    fn default() -> Self {
        WiredSpec {
            rate_bps: GIGABIT,
            proc: Duration::from_us(2),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GclConfig {
    #[serde(rename = "cycle_ns")]
    pub cycle: Duration,
    #[serde(rename = "base_time_ns", default)]
    pub base_time: Duration,
    pub windows: Vec<GclWindow>,
}

impl GclConfig {
    pub fn build(&self) -> Result<GateControlList, crate::tsn::GclError> {
        GateControlList::from_windows(self.cycle, self.base_time, &self.windows)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum Sw2Gcl {
    /// SW1's list with every class moved by its maximum 5G bridge delay.
    AutoShift,
    Explicit { gcl: GclConfig },
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GclSpec {
    #[serde(default)]
    pub sw1: Option<GclConfig>,
    #[serde(default)]
    pub sw2: Option<Sw2Gcl>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Traffic {
    /// One frame per period at `bat + k * period` (arrival at the UE's
    /// translator).
    Periodic {
        #[serde(rename = "bat_ns")]
        bat: Duration,
        #[serde(rename = "period_ns")]
        period: Duration,
        size_min: u32,
        size_max: u32,
    },
    /// Exponential inter-arrival times.
    Sporadic {
        #[serde(rename = "mean_interval_ns")]
        mean_interval: Duration,
        size_min: u32,
        size_max: u32,
    },
    /// Back-to-back frames paced at a bit rate.
    Rate {
        bitrate_bps: u64,
        size_min: u32,
        size_max: u32,
    },
}

impl Traffic {
    pub fn size_range(&self) -> (u32, u32) {
        match *self {
            Traffic::Periodic { size_min, size_max, .. }
            | Traffic::Sporadic { size_min, size_max, .. }
            | Traffic::Rate { size_min, size_max, .. } => (size_min, size_max),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsfpConfig {
    /// Stream gate copies SW1's gate for the stream's class.
    #[serde(default)]
    pub gate_mirror: bool,
    #[serde(default)]
    pub ipv: Option<TrafficClass>,
    #[serde(default)]
    pub meter: Option<MeterParams>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    pub id: u32,
    pub ue_id: u32,
    pub tc: TrafficClass,
    pub traffic: Traffic,
    pub qos: QosProfile,
    #[serde(default)]
    pub psfp: Option<PsfpConfig>,
}

impl FlowConfig {
    /// Periodic fixed-size streams expressed as a TSCAI tuple.
    pub fn as_flow_spec(&self) -> Option<FlowSpec> {
        match self.traffic {
            Traffic::Periodic {
                bat,
                period,
                size_min,
                size_max,
            } if size_min == size_max => Some(FlowSpec {
                id: self.id,
                ue_id: self.ue_id,
                bat,
                bs: size_max,
                period,
                tc: self.tc,
                qos: self.qos.clone(),
            }),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub version: u32,
    pub name: String,
    pub pattern: PatternSpec,
    #[serde(rename = "delta_ns")]
    pub delta: Duration,
    pub mcs_range: McsRange,
    pub scheduler: SchedulerSpec,
    #[serde(default)]
    pub dynamic: DynamicConfig,
    pub channel: ChannelParams,
    #[serde(default)]
    pub wired: WiredSpec,
    #[serde(default)]
    pub gcl: GclSpec,
    #[serde(rename = "horizon_ns")]
    pub horizon: Duration,
    pub seeds: Vec<u64>,
    pub flows: Vec<FlowConfig>,
}

impl Scenario {
    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("scenario serializes");
        s.push('\n');
        s
    }

    pub fn delay_params(&self) -> DelayParams {
        DelayParams { delta: self.delta }
    }

    /// Streams handled by the grant-free component.
    pub fn is_grant_free(&self, f: &FlowConfig) -> bool {
        self.scheduler.grant_free.is_some() && matches!(f.tc.get(), 5 | 6)
    }

    pub fn grant_free_flows(&self) -> Vec<FlowSpec> {
        self.flows
            .iter()
            .filter(|f| self.is_grant_free(f))
            .filter_map(FlowConfig::as_flow_spec)
            .collect()
    }

    pub fn with_scheduler(mut self, s: SchedulerSpec) -> Self {
        self.scheduler = s;
        self
    }

    /// Removes the burst volume from every class-4 profile.
    pub fn without_mdbv(mut self) -> Self {
        for f in &mut self.flows {
            if f.tc.get() == 4 {
                f.qos.mdbv = None;
            }
        }
        self
    }

    /// Time a talker sends ahead of the nominal arrival at the UE so that a
    /// frame of `bytes` reaches the UE's translator on time over two idle
    /// hops.
    pub fn talker_lead(&self, bytes: u32) -> Duration {
        Duration::transmission(bytes as u64, self.wired.rate_bps) * 2 + self.wired.proc
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Issue {
    pub code: &'static str,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Report {
    pub errors: Vec<Issue>,
    pub warnings: Vec<Issue>,
}

impl Report {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }

    fn error(&mut self, code: &'static str, message: impl Into<String>) {
        self.errors.push(Issue {
            code,
            message: message.into(),
        });
    }

    fn warn(&mut self, code: &'static str, message: impl Into<String>) {
        self.warnings.push(Issue {
            code,
            message: message.into(),
        });
    }
}

/// Resolves SW2's list: explicit, or SW1's shifted by each class's maximum
/// 5G bridge delay modulo the gate cycle.
pub fn sw2_gcl(s: &Scenario, pattern: &TddPattern) -> Result<Option<GateControlList>, String> {
    match &s.gcl.sw2 {
        None => Ok(None),
        Some(Sw2Gcl::Explicit { gcl }) => gcl.build().map(Some).map_err(|e| e.to_string()),
        Some(Sw2Gcl::AutoShift) => {
            let sw1 = s
                .gcl
                .sw1
                .as_ref()
                .ok_or("auto-shifted SW2 list needs an SW1 list")?
                .build()
                .map_err(|e| e.to_string())?;
            let mut shifts = [Duration::ZERO; 8];
            for row in nominal_report(pattern, s.delay_params()).map_err(|e| e.to_string())? {
                shifts[row.tc.get() as usize] = Duration::from_ns(row.max_ns) % sw1.cycle();
            }
            shift_gcl(&sw1, &shifts).map(Some).map_err(|e| e.to_string())
        }
    }
}

/// Checks a scenario. Errors block a run; warnings flag streams that lose
/// the single-slot guarantee.
pub fn validate(s: &Scenario) -> Report {
    let mut r = Report::default();
    if s.version != SCHEMA_VERSION {
        r.error("E_VERSION", format!("schema version {} is not {SCHEMA_VERSION}", s.version));
    }
    let pattern = match s.pattern.build() {
        Ok(p) => p,
        Err(e) => {
            r.error("E_PATTERN", e.to_string());
            return r;
        }
    };
    if !pattern.has_uplink() && !s.flows.is_empty() {
        r.error("E_PATTERN", "pattern has no slot that carries uplink data");
    }
    if s.wired.rate_bps == 0 {
        r.error("E_WIRED", "wired rate must be positive");
    }
    if s.channel.update_period == Duration::ZERO && !s.channel.is_frozen() {
        r.error("E_CHANNEL", "channel update period must be positive");
    }
    if s.channel.initial_cqi.0 > s.channel.initial_cqi.1 {
        r.error("E_CHANNEL", "initial CQI range is reversed");
    }

    let mut ids = BTreeSet::new();
    let mut ues = BTreeSet::new();
    for f in &s.flows {
        if !ids.insert(f.id) {
            r.error("E_DUP_FLOW", format!("flow id {} used twice", f.id));
        }
        if !ues.insert(f.ue_id) {
            r.error("E_DUP_UE", format!("UE {} carries more than one stream", f.ue_id));
        }
        check_traffic(s, f, &mut r);
        if f.qos.pdb == Duration::ZERO {
            r.error("E_QOS", format!("flow {}: packet delay budget is zero", f.id));
        }
        if f.qos.mdbv == Some(0) {
            r.error("E_QOS", format!("flow {}: burst volume is zero", f.id));
        }
        if s.is_grant_free(f) {
            match f.as_flow_spec() {
                None => r.error(
                    "E_GF_TRAFFIC",
                    format!("flow {}: grant-free streams must be periodic with a fixed size", f.id),
                ),
                Some(spec) if f.tc.get() == 6 => {
                    let bd = bd_for_tc(f.tc, &pattern, s.delay_params(), Some(&spec));
                    if bd.is_ok_and(|d| d.increased_bd) {
                        r.warn(
                            "W_TC6_INCREASED_BD",
                            format!(
                                "flow {}: arrival phase or period does not allow single-slot service; reported with the increased bridge delay",
                                f.id
                            ),
                        );
                    }
                }
                Some(_) => {}
            }
        } else if s.scheduler.dynamic.is_none() {
            r.error(
                "E_NO_SCHEDULER",
                format!("flow {} needs a dynamic scheduler but none is configured", f.id),
            );
        }
        if let Some(p) = &f.psfp {
            if p.gate_mirror && s.gcl.sw1.is_none() {
                r.error("E_PSFP", format!("flow {}: gate mirror without an SW1 list", f.id));
            }
        }
    }

    if let Some(g) = &s.gcl.sw1 {
        if let Err(e) = g.build() {
            r.error("E_GCL", format!("SW1: {e}"));
        }
    }
    if let Err(e) = sw2_gcl(s, &pattern) {
        r.error("E_GCL", format!("SW2: {e}"));
    }

    let gf = s.grant_free_flows();
    if !gf.is_empty() && r.is_ok() {
        match admission_check(&gf, &pattern, s.mcs_range.min(), s.delay_params()) {
            Ok(Admission::Feasible) => {}
            Ok(Admission::Infeasible(ids)) => r.error(
                "E_ADMISSION",
                format!("grant-free streams {ids:?} are not schedulable at MCS {}", s.mcs_range.min().get()),
            ),
            Err(e @ grantfree::GfError::HyperperiodCap { .. }) => {
                r.error("E_HYPERPERIOD", format!("{e} (cap {DEFAULT_HP_CAP})"))
            }
            Err(e) => r.error("E_ADMISSION", e.to_string()),
        }
    }
    r
}

fn check_traffic(s: &Scenario, f: &FlowConfig, r: &mut Report) {
    let (lo, hi) = f.traffic.size_range();
    if lo == 0 || lo > hi {
        r.error("E_TEMPLATE", format!("flow {}: size range [{lo}, {hi}] is invalid", f.id));
    }
    match f.traffic {
        Traffic::Periodic { bat, period, .. } => {
            if period == Duration::ZERO {
                r.error("E_TEMPLATE", format!("flow {}: period is zero", f.id));
            }
            if bat < s.talker_lead(hi) {
                r.error(
                    "E_TEMPLATE",
                    format!("flow {}: burst arrival {bat} is earlier than the talker lead time", f.id),
                );
            }
        }
        Traffic::Sporadic { mean_interval, .. } => {
            if mean_interval == Duration::ZERO {
                r.error("E_TEMPLATE", format!("flow {}: mean interval is zero", f.id));
            }
        }
        Traffic::Rate { bitrate_bps, .. } => {
            if bitrate_bps == 0 {
                r.error("E_TEMPLATE", format!("flow {}: bit rate is zero", f.id));
            }
        }
    }
}

/// Traffic class row: periodic or not, interval range and size range.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ClassTemplate {
    pub tc: u8,
    pub periodic: bool,
    pub interval: Option<(Duration, Duration)>,
    pub size: (u32, u32),
    pub fixed_size: bool,
}

pub const CLASS_TEMPLATES: [ClassTemplate; 8] = [
    ClassTemplate { tc: 0, periodic: false, interval: None, size: (30, 1500), fixed_size: false },
    ClassTemplate { tc: 1, periodic: true, interval: None, size: (1000, 1500), fixed_size: false },
    ClassTemplate { tc: 2, periodic: false, interval: None, size: (500, 1500), fixed_size: false },
    ClassTemplate {
        tc: 3,
        periodic: false,
        interval: Some((Duration::from_secs(2), Duration::from_secs(2))),
        size: (100, 1500),
        fixed_size: false,
    },
    ClassTemplate {
        tc: 4,
        periodic: false,
        interval: Some((Duration::from_ms(10), Duration::from_ms(50))),
        size: (100, 200),
        fixed_size: false,
    },
    ClassTemplate {
        tc: 5,
        periodic: true,
        interval: Some((Duration::from_us(500), Duration::from_ms(20))),
        size: (50, 1000),
        fixed_size: true,
    },
    ClassTemplate {
        tc: 6,
        periodic: true,
        interval: Some((Duration::from_us(100), Duration::from_ms(2))),
        size: (30, 100),
        fixed_size: true,
    },
    ClassTemplate {
        tc: 7,
        periodic: true,
        interval: Some((Duration::from_ms(50), Duration::from_secs(1))),
        size: (50, 500),
        fixed_size: false,
    },
];

pub const PRESETS: [&str; 2] = ["periodic", "heterogeneous"];

/// Seed behind the drawn stream parameters of both presets.
pub const PRESET_SEED: u64 = 60802;

const PRESET_DELTA: Duration = Duration::from_us(107);

fn tc(c: u8) -> TrafficClass {
    TrafficClass::new(c).expect("class below 8")
}

fn qos(priority: u8, pdb: Duration, mdbv: Option<u32>, rt: ResourceType) -> QosProfile {
    QosProfile {
        priority,
        pdb,
        mdbv,
        resource_type: rt,
    }
}

pub fn preset(name: &str) -> Option<Scenario> {
    match name {
        "periodic" => Some(periodic_preset()),
        "heterogeneous" => Some(heterogeneous_preset()),
        _ => None,
    }
}

fn table3(n_rb: u32) -> PatternSpec {
    PatternSpec {
        labels: "DDDDDDDSUU".into(),
        mu: 1,
        n_rb,
        special_ul_fraction: Fraction::ONE,
    }
}

fn base(name: &str, n_rb: u32, scheduler: SchedulerSpec) -> Scenario {
    Scenario {
        version: SCHEMA_VERSION,
        name: name.into(),
        pattern: table3(n_rb),
        delta: PRESET_DELTA,
        mcs_range: McsRange::new(Mcs::new(5).unwrap(), Mcs::MAX).unwrap(),
        scheduler,
        dynamic: DynamicConfig::default(),
        channel: ChannelParams {
            initial_cqi: (Cqi::new(10).unwrap(), Cqi::new(14).unwrap()),
            step_sigma: Fraction::new(1, 4).unwrap(),
            update_period: Duration::from_ms(20),
        },
        wired: WiredSpec::default(),
        gcl: GclSpec::default(),
        horizon: Duration::from_secs(5),
        seeds: vec![1, 2, 3],
        flows: Vec::new(),
    }
}

/// Slot-aligned arrival for a class-6 stream: one of the three uplink slots.
fn tc6_bat(i: usize) -> Duration {
    Duration::from_us(3_500 + 500 * (i as u64 % 3)) - PRESET_DELTA
}

fn tc6_flow(id: u32, rng: &mut ChaCha8Rng, i: usize) -> FlowConfig {
    let size = rng.random_range(30..=100);
    FlowConfig {
        id,
        ue_id: id,
        tc: tc(6),
        traffic: Traffic::Periodic {
            bat: tc6_bat(i),
            period: Duration::from_ms(5),
            size_min: size,
            size_max: size,
        },
        qos: qos(1, Duration::from_ms(5), Some(size), ResourceType::DcGbr),
        psfp: None,
    }
}

fn tc5_flow(id: u32, rng: &mut ChaCha8Rng, periods: &[u64], sizes: (u32, u32), window_us: (u64, u64)) -> FlowConfig {
    let period = Duration::from_ms(periods[rng.random_range(0..periods.len())]);
    let size = rng.random_range(sizes.0..=sizes.1);
    let cycles = period.as_ns() / Duration::from_ms(5).as_ns();
    let bat = Duration::from_ms(5 * rng.random_range(0..cycles))
        + Duration::from_us(rng.random_range(window_us.0..window_us.1));
    FlowConfig {
        id,
        ue_id: id,
        tc: tc(5),
        traffic: Traffic::Periodic {
            bat,
            period,
            size_min: size,
            size_max: size,
        },
        qos: qos(2, period, Some(size), ResourceType::DcGbr),
        psfp: None,
    }
}

fn periodic_preset() -> Scenario {
    let mut s = base(
        "periodic",
        106,
        SchedulerSpec {
            grant_free: Some(GfMode::Adaptive),
            dynamic: None,
        },
    );
    let mut rng = ChaCha8Rng::seed_from_u64(PRESET_SEED);
    for i in 0..14 {
        s.flows.push(tc6_flow(i as u32, &mut rng, i));
    }
    for i in 14..28 {
        s.flows.push(tc5_flow(i, &mut rng, &[10, 20], (50, 600), (50, 5_000)));
    }
    s
}

fn heterogeneous_preset() -> Scenario {
    let mut s = base(
        "heterogeneous",
        51,
        SchedulerSpec {
            grant_free: Some(GfMode::Adaptive),
            dynamic: Some(Discipline::StrictPriority),
        },
    );
    s.gcl.sw1 = Some(GclConfig {
        cycle: Duration::from_ms(5),
        base_time: Duration::ZERO,
        windows: vec![
            GclWindow {
                offset_ns: 0,
                duration_ns: 2_500_000,
                classes: ClassMask::of([0, 1, 2, 3, 4, 7]),
            },
            GclWindow {
                offset_ns: 2_500_000,
                duration_ns: 2_500_000,
                classes: ClassMask::of([5, 6]),
            },
        ],
    });
    s.gcl.sw2 = Some(Sw2Gcl::AutoShift);

    let mut rng = ChaCha8Rng::seed_from_u64(PRESET_SEED + 1);
    let mut id = 0u32;
    let mut next = || {
        id += 1;
        id - 1
    };
    let gated = Some(PsfpConfig {
        gate_mirror: true,
        ipv: None,
        meter: None,
    });
    for i in 0..8 {
        let mut f = tc6_flow(next(), &mut rng, i);
        f.psfp = gated.clone();
        s.flows.push(f);
    }
    for _ in 0..8 {
        let mut f = tc5_flow(next(), &mut rng, &[10, 20], (50, 400), (2_600, 4_300));
        f.psfp = gated.clone();
        s.flows.push(f);
    }
    let policed = |cir: u64, cbs: u64| {
        Some(PsfpConfig {
            gate_mirror: false,
            ipv: None,
            meter: Some(MeterParams {
                cir,
                cbs,
                eir: 0,
                ebs: 0,
            }),
        })
    };
    for _ in 0..8 {
        let id = next();
        let period = Duration::from_ms([50, 100, 200, 500, 1000][rng.random_range(0..5)]);
        let bat = Duration::from_us(rng.random_range(100..period.as_ns() / 1000));
        s.flows.push(FlowConfig {
            id,
            ue_id: id,
            tc: tc(7),
            traffic: Traffic::Periodic {
                bat,
                period,
                size_min: 50,
                size_max: 500,
            },
            qos: qos(3, Duration::from_ms(100), None, ResourceType::NonGbr),
            psfp: None,
        });
    }
    for _ in 0..8 {
        let id = next();
        let mean = Duration::from_ms(rng.random_range(10..=50));
        // A sporadic source has no hard rate; the policer only stops runaway
        // talkers.
        let cir = 200 * 1_000_000_000 / mean.as_ns() * 4;
        s.flows.push(FlowConfig {
            id,
            ue_id: id,
            tc: tc(4),
            traffic: Traffic::Sporadic {
                mean_interval: mean,
                size_min: 100,
                size_max: 200,
            },
            qos: qos(4, Duration::from_ms(50), Some(200), ResourceType::Gbr),
            psfp: policed(cir, 4_000),
        });
    }
    for _ in 0..8 {
        let id = next();
        let bitrate = 100_000 * rng.random_range(3..=6);
        s.flows.push(FlowConfig {
            id,
            ue_id: id,
            tc: tc(1),
            traffic: Traffic::Rate {
                bitrate_bps: bitrate,
                size_min: 1000,
                size_max: 1500,
            },
            qos: qos(5, Duration::from_ms(50), None, ResourceType::Gbr),
            psfp: policed(bitrate / 8 * 2, 12_000),
        });
    }
    for _ in 0..8 {
        let id = next();
        s.flows.push(FlowConfig {
            id,
            ue_id: id,
            tc: tc(0),
            traffic: Traffic::Sporadic {
                mean_interval: Duration::from_ms(rng.random_range(20..=100)),
                size_min: 30,
                size_max: 1500,
            },
            qos: qos(9, Duration::from_ms(300), None, ResourceType::NonGbr),
            psfp: None,
        });
    }
    s
}
