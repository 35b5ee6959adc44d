//! Grant-free pre-allocation for periodic streams.
//!
//! A schedule covers one hyperperiod and repeats verbatim afterwards. Each
//! stream instance gets a window of uplink slots in which its burst must be
//! served; instances are placed earliest-deadline-first, and among equal
//! deadlines the UE with fewer usable RBs goes first.

mod alloc;
pub mod dump;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bridge_delay::BdError;
use crate::flow::{FlowError, FlowSpec};
use crate::link::{self, ChannelState, Cqi, LinkError, Mcs, McsRange};
use crate::time::{Duration, TddPattern};

pub use alloc::{admission_check, preallocate};

/// Refuse hyperperiods longer than this unless told otherwise.
pub const DEFAULT_HP_CAP: Duration = Duration::from_secs(10);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GfError {
    #[error("hyperperiod {hp} exceeds the cap of {cap}")]
    HyperperiodCap { hp: Duration, cap: Duration },
    #[error("flow {0} is not a grant-free class")]
    NotGrantFree(u32),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Bd(#[from] BdError),
    #[error(transparent)]
    Link(#[from] LinkError),
}

fn gcd(a: u128, b: u128) -> u128 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Least common multiple of the TDD cycle and every period.
pub fn hyperperiod(
    pattern: &TddPattern,
    periods: impl IntoIterator<Item = Duration>,
    cap: Duration,
) -> Result<Duration, GfError> {
    let cap_ns = cap.as_ns() as u128;
    let mut hp = pattern.t_tdd().as_ns() as u128;
    for p in periods {
        let p = p.as_ns() as u128;
        assert!(p > 0, "periods are validated positive");
        hp = hp / gcd(hp, p) * p;
        if hp > cap_ns {
            return Err(GfError::HyperperiodCap {
                hp: Duration::from_ns(hp.min(u64::MAX as u128) as u64),
                cap,
            });
        }
    }
    Ok(Duration::from_ns(hp as u64))
}

/// Per-instance bookkeeping of the allocator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowSchedState {
    pub bs_req: u32,
    /// Remaining uplink slots; `None` until the instance has arrived.
    pub window: Option<u32>,
    pub bat_frame: u64,
    pub bat_slot: u64,
}

/// Locates the flow's burst arrival in the TDD calendar: the cycle it falls
/// in and the first slot boundary at or after it.
pub fn reset_flow(f: &FlowSpec, pattern: &TddPattern) -> FlowSchedState {
    let bat_frame = f.bat.div_floor(pattern.t_tdd());
    let rest = f.bat - pattern.t_tdd() * bat_frame;
    FlowSchedState {
        bs_req: f.bs,
        window: None,
        bat_frame,
        bat_slot: rest.div_ceil(pattern.t_slot()),
    }
}

/// Number of data-carrying uplink slots that lie entirely inside
/// `[arrival, arrival + max_bd]`.
pub fn window_slots(pattern: &TddPattern, arrival: Duration, max_bd: Duration) -> u32 {
    let deadline = arrival + max_bd;
    let mut g = arrival.div_ceil(pattern.t_slot());
    let mut n = 0;
    while pattern.global_start(g) + pattern.t_slot() <= deadline {
        if pattern.capacity(pattern.from_global(g).slot) > 0 {
            n += 1;
        }
        g += 1;
    }
    n
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reservation {
    pub flow_id: u32,
    pub mcs: Mcs,
}

/// RB ownership over one hyperperiod.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResourceGrid {
    hp_slots: u64,
    slots_per_cycle: usize,
    capacity: Vec<u32>,
    owners: Vec<Vec<Option<Reservation>>>,
}

impl ResourceGrid {
    pub fn new(pattern: &TddPattern, hp: Duration) -> Self {
        let hp_slots = hp.div_floor(pattern.t_slot());
        let capacity: Vec<u32> = (0..pattern.len()).map(|s| pattern.capacity(s)).collect();
        let owners = (0..hp_slots)
            .map(|g| vec![None; capacity[(g % pattern.len() as u64) as usize] as usize])
            .collect();
        ResourceGrid {
            hp_slots,
            slots_per_cycle: pattern.len(),
            capacity,
            owners,
        }
    }

    pub fn hp_slots(&self) -> u64 {
        self.hp_slots
    }

    /// Capacity of any (possibly unwrapped) global slot index.
    pub fn capacity(&self, g: u64) -> u32 {
        self.capacity[(g % self.slots_per_cycle as u64) as usize]
    }

    fn slot(&self, g: u64) -> &[Option<Reservation>] {
        &self.owners[(g % self.hp_slots) as usize]
    }

    pub fn owner(&self, g: u64, rb: u32) -> Option<Reservation> {
        self.slot(g).get(rb as usize).copied().flatten()
    }

    pub fn free_rbs(&self, g: u64) -> impl Iterator<Item = u32> + '_ {
        self.slot(g)
            .iter()
            .enumerate()
            .filter(|(_, o)| o.is_none())
            .map(|(i, _)| i as u32)
    }

    pub fn reserved_count(&self, g: u64) -> u32 {
        self.slot(g).iter().filter(|o| o.is_some()).count() as u32
    }

    pub fn reserve(&mut self, g: u64, rb: u32, r: Reservation) {
        let idx = (g % self.hp_slots) as usize;
        let cell = &mut self.owners[idx][rb as usize];
        assert!(cell.is_none(), "RB {rb} of slot {idx} reserved twice");
        *cell = Some(r);
    }

    /// Iterates reservations of one hyperperiod as `(slot, rb, reservation)`.
    pub fn iter(&self) -> impl Iterator<Item = (u64, u32, Reservation)> + '_ {
        self.owners.iter().enumerate().flat_map(|(g, row)| {
            row.iter()
                .enumerate()
                .filter_map(move |(rb, o)| o.map(|r| (g as u64, rb as u32, r)))
        })
    }

    /// Capacity and label consistency of the grid.
    pub fn check(&self) -> Result<(), String> {
        for (g, row) in self.owners.iter().enumerate() {
            let cap = self.capacity(g as u64);
            if row.len() as u32 != cap {
                return Err(format!("slot {g}: {} cells for capacity {cap}", row.len()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Allocation {
    pub flow_id: u32,
    pub ue_id: u32,
    pub instance: u64,
    /// Slot index within the hyperperiod.
    pub slot: u64,
    pub rbs: Vec<u32>,
    pub mcs: Mcs,
    pub bytes: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub flow_id: u32,
    pub instance: u64,
    /// Arrival at the UE, relative to the hyperperiod start.
    pub arrival: Duration,
    pub deadline: Duration,
    pub bs: u32,
    pub served: u32,
    pub state: FlowSchedState,
    /// Unwrapped global slot indices of this instance's allocations.
    pub slots: Vec<u64>,
}

impl InstanceRecord {
    pub fn feasible(&self) -> bool {
        self.served >= self.bs
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Admission {
    Feasible,
    Infeasible(Vec<u32>),
}

impl Admission {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Admission::Feasible)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrantFreeSchedule {
    pub hp: Duration,
    pub pattern: TddPattern,
    pub grid: ResourceGrid,
    pub allocations: Vec<Allocation>,
    pub instances: Vec<InstanceRecord>,
    pub admission: Admission,
    /// Flows served in a single pinned slot.
    pub single_slot_flows: Vec<u32>,
    /// Single-slot flows that had to fall back to a window.
    pub increased_bd_flows: Vec<u32>,
}

impl GrantFreeSchedule {
    pub fn empty(pattern: &TddPattern) -> Self {
        GrantFreeSchedule {
            hp: pattern.t_tdd(),
            pattern: pattern.clone(),
            grid: ResourceGrid::new(pattern, pattern.t_tdd()),
            allocations: Vec::new(),
            instances: Vec::new(),
            admission: Admission::Feasible,
            single_slot_flows: Vec::new(),
            increased_bd_flows: Vec::new(),
        }
    }

    pub fn hp_slots(&self) -> u64 {
        self.grid.hp_slots()
    }

    /// Allocations active in global slot `g` (any hyperperiod repetition).
    pub fn allocations_at(&self, g: u64) -> impl Iterator<Item = &Allocation> + '_ {
        let s = g % self.hp_slots();
        self.allocations.iter().filter(move |a| a.slot == s)
    }
}

/// Result of placing one instance in one slot.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RbChoice {
    pub rbs: Vec<u32>,
    pub mcs: Option<Mcs>,
    pub bytes_served: u32,
}

/// Picks RBs for a demand of `bs_req` bytes among `free` `(rb, cqi)` pairs,
/// which must be in ascending RB order.
pub fn calc_rbs(free: &[(u32, Cqi)], bs_req: u32, range: McsRange) -> RbChoice {
    if free.is_empty() || bs_req == 0 {
        return RbChoice {
            rbs: Vec::new(),
            mcs: None,
            bytes_served: 0,
        };
    }
    let cqis: Vec<Cqi> = free.iter().map(|&(_, c)| c).collect();
    let eff = link::effective_mcs(&cqis, range).expect("non-empty");
    let n = eff.eligible.len() as u32;
    let k = link::min_rbs_for(eff.mcs, bs_req, n).unwrap_or(n);
    let rbs: Vec<u32> = eff.eligible[..k as usize].iter().map(|&i| free[i].0).collect();
    RbChoice {
        bytes_served: link::tbs(eff.mcs, k).min(bs_req),
        rbs,
        mcs: Some(eff.mcs),
    }
}

/// Sort key of an open instance: remaining window, then usable RB count of
/// its UE, then flow id and instance number.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct ConstrainednessKey {
    pub window: u32,
    pub eligible_rbs: u32,
    pub flow_id: u32,
    pub instance: u64,
}

/// Orders open instances most-constrained first.
pub fn sort_by_constrainedness<T>(items: &mut [T], key: impl Fn(&T) -> ConstrainednessKey) {
    items.sort_by_key(|t| key(t));
}

/// Number of RBs a UE could use among `free` under mean-CQI selection.
pub fn eligible_count(free: &[Cqi]) -> u32 {
    if free.is_empty() {
        0
    } else {
        link::effective_mcs(free, McsRange::FULL)
            .expect("non-empty")
            .eligible
            .len() as u32
    }
}

/// MCS the channel currently supports over `rbs` of `ue`.
pub fn supportable_mcs(channel: &ChannelState, ue: u32, rbs: &[u32]) -> Result<Mcs, LinkError> {
    let row = channel.row(ue)?;
    let cqis: Vec<Cqi> = rbs.iter().map(|&rb| row[rb as usize]).collect();
    Ok(link::effective_mcs(&cqis, McsRange::FULL)?.mcs)
}

/// True when some reservation asks for more than the channel now supports.
pub fn needs_reschedule(schedule: &GrantFreeSchedule, channel: &ChannelState) -> bool {
    schedule.allocations.iter().any(|a| {
        if a.rbs.is_empty() {
            return false;
        }
        match supportable_mcs(channel, a.ue_id, &a.rbs) {
            Ok(now) => a.mcs > now || link::tbs(now, a.rbs.len() as u32) < a.bytes,
            Err(_) => true,
        }
    })
}
