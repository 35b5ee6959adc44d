use std::collections::BTreeSet;

use super::{
    calc_rbs, eligible_count, hyperperiod, sort_by_constrainedness, window_slots, Admission,
    Allocation, ConstrainednessKey, FlowSchedState, GfError, GrantFreeSchedule, InstanceRecord,
    Reservation, ResourceGrid, DEFAULT_HP_CAP,
};
use crate::bridge_delay::{bd_for_tc, AllocationMode, DelayParams};
use crate::flow::FlowSpec;
use crate::link::{cqi_for_mcs, ChannelState, Cqi, Mcs, McsRange};
use crate::time::{Duration, TddPattern};

#[derive(Clone)]
struct Pending {
    flow_idx: usize,
    instance: u64,
    arrival: Duration,
    deadline: Duration,
    window: u32,
    served: u32,
    slots: Vec<u64>,
}

struct Pass {
    grid: ResourceGrid,
    allocations: Vec<Allocation>,
    pending: Vec<Pending>,
    unserved: usize,
}

/// Pre-allocates one hyperperiod of grant-free resources.
///
/// `flows` must all be of class 5 or 6. Single-slot streams whose arrival
/// does not line up with an uplink slot are served like class-5 streams and
/// listed in `increased_bd_flows`.
pub fn preallocate(
    flows: &[FlowSpec],
    pattern: &TddPattern,
    channel: &ChannelState,
    range: McsRange,
    params: DelayParams,
) -> Result<GrantFreeSchedule, GfError> {
    preallocate_capped(flows, pattern, channel, range, params, DEFAULT_HP_CAP)
}

pub fn preallocate_capped(
    flows: &[FlowSpec],
    pattern: &TddPattern,
    channel: &ChannelState,
    range: McsRange,
    params: DelayParams,
    hp_cap: Duration,
) -> Result<GrantFreeSchedule, GfError> {
    for f in flows {
        f.validate()?;
        if !f.is_grant_free() {
            return Err(GfError::NotGrantFree(f.id));
        }
        channel.row(f.ue_id)?;
    }
    let hp = hyperperiod(pattern, flows.iter().map(|f| f.period), hp_cap)?;
    let windowed_bd = pattern.t_tdd() + pattern.t_slot();

    let mut single_slot_flows = Vec::new();
    let mut increased_bd_flows = Vec::new();
    let mut pending = Vec::new();
    for (idx, f) in flows.iter().enumerate() {
        let d = bd_for_tc(f.tc, pattern, params, Some(f))?;
        let pinned = d.mode == AllocationMode::GrantFreeSingleSlot;
        if pinned {
            single_slot_flows.push(f.id);
        }
        if d.increased_bd {
            increased_bd_flows.push(f.id);
        }
        let first = (f.bat + params.delta) % hp;
        for k in 0..hp.div_floor(f.period) {
            let arrival = (first + f.period * k) % hp;
            let (window, deadline) = if pinned {
                (1, arrival + pattern.t_slot())
            } else {
                (
                    window_slots(pattern, arrival, windowed_bd),
                    arrival + windowed_bd,
                )
            };
            pending.push(Pending {
                flow_idx: idx,
                instance: k,
                arrival,
                deadline,
                window,
                served: 0,
                slots: Vec::new(),
            });
        }
    }

    // The schedule is cyclic, so the pass may start at any slot. Slot 0 is
    // tried first; if that leaves instances unserved, other starting slots
    // are tried, fewest straddling windows first.
    let hp_slots = hp.div_floor(pattern.t_slot());
    let mut best = run_pass(flows, pattern, channel, range, hp, &pending, 0);
    if best.unserved > 0 && !pending.is_empty() {
        let mut starts: Vec<(usize, u64)> = (1..hp_slots)
            .filter(|&g| pattern.capacity(pattern.from_global(g).slot) > 0)
            .map(|g| {
                let t = pattern.global_start(g);
                let straddling = pending
                    .iter()
                    .filter(|p| {
                        (p.arrival < t && p.deadline > t)
                            || (p.arrival < t + hp && p.deadline > t + hp)
                    })
                    .count();
                (straddling, g)
            })
            .collect();
        starts.sort_unstable();
        for (_, g) in starts {
            let pass = run_pass(flows, pattern, channel, range, hp, &pending, g);
            if pass.unserved < best.unserved {
                best = pass;
                if best.unserved == 0 {
                    break;
                }
            }
        }
    }
    if best.unserved > 0 {
        if let Some(exact) = exact_pass(flows, pattern, channel, range, hp, &pending, EXACT_SEARCH_BUDGET) {
            best = exact;
        }
    }
    let Pass {
        grid,
        mut allocations,
        pending,
        ..
    } = best;

    let mut infeasible = BTreeSet::new();
    let mut instances: Vec<InstanceRecord> = pending
        .into_iter()
        .map(|p| {
            let f = &flows[p.flow_idx];
            if p.served < f.bs {
                infeasible.insert(f.id);
            }
            InstanceRecord {
                flow_id: f.id,
                instance: p.instance,
                arrival: p.arrival,
                deadline: p.deadline,
                bs: f.bs,
                served: p.served,
                state: FlowSchedState {
                    bs_req: f.bs.saturating_sub(p.served),
                    window: Some(p.window),
                    bat_frame: p.arrival.div_floor(pattern.t_tdd()),
                    bat_slot: (p.arrival % pattern.t_tdd()).div_ceil(pattern.t_slot()),
                },
                slots: p.slots,
            }
        })
        .collect();
    instances.sort_by_key(|r| (r.flow_id, r.instance));
    allocations.sort_by_key(|a: &Allocation| (a.slot, a.flow_id, a.instance));

    Ok(GrantFreeSchedule {
        hp,
        pattern: pattern.clone(),
        grid,
        allocations,
        instances,
        admission: if infeasible.is_empty() {
            Admission::Feasible
        } else {
            Admission::Infeasible(infeasible.into_iter().collect())
        },
        single_slot_flows,
        increased_bd_flows,
    })
}

/// One earliest-deadline-first sweep over the uplink slots, starting at
/// global slot `start`. Instances arriving before `start` are moved one
/// hyperperiod later.
fn run_pass(
    flows: &[FlowSpec],
    pattern: &TddPattern,
    channel: &ChannelState,
    range: McsRange,
    hp: Duration,
    template: &[Pending],
    start: u64,
) -> Pass {
    let mut grid = ResourceGrid::new(pattern, hp);
    let t0 = pattern.global_start(start);
    let mut pending: Vec<Pending> = template
        .iter()
        .cloned()
        .map(|mut p| {
            if p.arrival < t0 {
                p.arrival += hp;
                p.deadline += hp;
            }
            p
        })
        .collect();
    pending.sort_by_key(|p| (p.arrival, flows[p.flow_idx].id, p.instance));

    let last_slot = pending
        .iter()
        .map(|p| p.deadline.div_ceil(pattern.t_slot()))
        .max()
        .unwrap_or(0);

    let mut allocations = Vec::new();
    let mut active: Vec<usize> = Vec::new();
    let mut next = 0;
    for g in start..last_slot {
        if grid.capacity(g) == 0 {
            continue;
        }
        let slot_start = pattern.global_start(g);
        while next < pending.len() && pending[next].arrival <= slot_start {
            if pending[next].window > 0 {
                active.push(next);
            }
            next += 1;
        }
        if active.is_empty() {
            if next == pending.len() {
                break;
            }
            continue;
        }

        let free_cqi = |grid: &ResourceGrid, ue: u32| -> Vec<(u32, Cqi)> {
            let row = channel.row(ue).expect("UE checked by the caller");
            grid.free_rbs(g).map(|rb| (rb, row[rb as usize])).collect()
        };
        let mut keyed: Vec<(ConstrainednessKey, usize)> = active
            .iter()
            .map(|&i| {
                let p = &pending[i];
                let f = &flows[p.flow_idx];
                let cqis: Vec<Cqi> = free_cqi(&grid, f.ue_id).into_iter().map(|x| x.1).collect();
                (
                    ConstrainednessKey {
                        window: p.window,
                        eligible_rbs: eligible_count(&cqis),
                        flow_id: f.id,
                        instance: p.instance,
                    },
                    i,
                )
            })
            .collect();
        sort_by_constrainedness(&mut keyed, |k| k.0);

        for &(_, i) in &keyed {
            let f = &flows[pending[i].flow_idx];
            let need = f.bs.saturating_sub(pending[i].served);
            let choice = calc_rbs(&free_cqi(&grid, f.ue_id), need, range);
            let Some(mcs) = choice.mcs else { continue };
            if choice.rbs.is_empty() {
                continue;
            }
            for &rb in &choice.rbs {
                grid.reserve(g, rb, Reservation { flow_id: f.id, mcs });
            }
            pending[i].served += choice.bytes_served;
            pending[i].slots.push(g);
            allocations.push(Allocation {
                flow_id: f.id,
                ue_id: f.ue_id,
                instance: pending[i].instance,
                slot: g % grid.hp_slots(),
                rbs: choice.rbs,
                mcs,
                bytes: choice.bytes_served,
            });
        }

        active.retain(|&i| {
            let p = &mut pending[i];
            p.window -= 1;
            p.served < flows[p.flow_idx].bs && p.window > 0
        });
    }
    let unserved = pending
        .iter()
        .filter(|p| p.served < flows[p.flow_idx].bs)
        .count();
    Pass {
        grid,
        allocations,
        pending,
        unserved,
    }
}

/// Node limit of the fallback search. Small instances finish well inside
/// it; large ones give up and keep the sweep result.
pub const EXACT_SEARCH_BUDGET: u64 = 200_000;

struct Choice {
    instance: usize,
    slot: u64,
    rbs: Vec<u32>,
    mcs: Mcs,
    bytes: u32,
}

struct Search<'a> {
    flows: &'a [FlowSpec],
    channel: &'a ChannelState,
    range: McsRange,
    hp_slots: u64,
    order: Vec<usize>,
    usable: Vec<Vec<u64>>,
    /// Stream index of each instance.
    usable_flow: Vec<usize>,
    taken: Vec<Vec<bool>>,
    stack: Vec<Choice>,
    nodes: u64,
    budget: u64,
}

impl Search<'_> {
    /// `Some(true)` when every instance from `pos` on fits, `None` when the
    /// budget ran out.
    fn place(&mut self, pos: usize) -> Option<bool> {
        match self.order.get(pos) {
            None => Some(true),
            Some(&i) => {
                let need = self.flows[self.usable_flow[i]].bs;
                self.fill(pos, i, 0, need)
            }
        }
    }

    fn fill(&mut self, pos: usize, i: usize, j: usize, remaining: u32) -> Option<bool> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return None;
        }
        let Some(&g) = self.usable[i].get(j) else {
            return Some(false);
        };
        let s = (g % self.hp_slots) as usize;
        let f = &self.flows[self.usable_flow[i]];
        let row = self.channel.row(f.ue_id).expect("UE checked by the caller");
        let mut free: Vec<u32> = (0..self.taken[s].len() as u32)
            .filter(|&rb| !self.taken[s][rb as usize])
            .collect();
        free.sort_by_key(|&rb| (std::cmp::Reverse(row[rb as usize]), rb));
        for k in 1..=free.len() {
            let rbs = free[..k].to_vec();
            let cqis: Vec<Cqi> = rbs.iter().map(|&rb| row[rb as usize]).collect();
            let mcs = crate::link::effective_mcs(&cqis, self.range).expect("non-empty").mcs;
            let bytes = crate::link::tbs(mcs, k as u32);
            let done = bytes >= remaining;
            for &rb in &rbs {
                self.taken[s][rb as usize] = true;
            }
            self.stack.push(Choice {
                instance: i,
                slot: g,
                rbs,
                mcs,
                bytes: bytes.min(remaining),
            });
            let r = if done {
                self.place(pos + 1)
            } else {
                self.fill(pos, i, j + 1, remaining - bytes)
            };
            if r == Some(true) {
                return r;
            }
            let c = self.stack.pop().expect("pushed above");
            for rb in c.rbs {
                self.taken[s][rb as usize] = false;
            }
            r?;
            // More RBs in the same slot only take resources away.
            if done {
                break;
            }
        }
        self.fill(pos, i, j + 1, remaining)
    }
}

/// Backtracking search over how many RBs each instance takes in each slot
/// of its window, deadlines first. Used when the sweeps leave instances
/// unserved: the sweep gives the head instance every usable RB, which can
/// miss splits that fit because transport block sizes are not additive.
fn exact_pass(
    flows: &[FlowSpec],
    pattern: &TddPattern,
    channel: &ChannelState,
    range: McsRange,
    hp: Duration,
    template: &[Pending],
    budget: u64,
) -> Option<Pass> {
    let hp_slots = hp.div_floor(pattern.t_slot());
    let caps: Vec<u32> = (0..hp_slots)
        .map(|g| pattern.capacity(pattern.from_global(g).slot))
        .collect();
    if caps.iter().all(|&c| c == 0) {
        return None;
    }
    let usable: Vec<Vec<u64>> = template
        .iter()
        .map(|p| {
            (p.arrival.div_ceil(pattern.t_slot())..)
                .filter(|&g| caps[(g % hp_slots) as usize] > 0)
                .take(p.window as usize)
                .collect()
        })
        .collect();
    let mut order: Vec<usize> = (0..template.len()).collect();
    order.sort_by_key(|&i| {
        let p = &template[i];
        (p.deadline, flows[p.flow_idx].id, p.instance)
    });
    let mut search = Search {
        flows,
        channel,
        range,
        hp_slots,
        order,
        usable,
        usable_flow: template.iter().map(|p| p.flow_idx).collect(),
        taken: caps.iter().map(|&c| vec![false; c as usize]).collect(),
        stack: Vec::new(),
        nodes: 0,
        budget,
    };
    if search.place(0) != Some(true) {
        return None;
    }

    let mut grid = ResourceGrid::new(pattern, hp);
    let mut pending = template.to_vec();
    let mut allocations = Vec::new();
    for c in search.stack {
        let p = &mut pending[c.instance];
        let f = &flows[p.flow_idx];
        for &rb in &c.rbs {
            grid.reserve(c.slot, rb, Reservation { flow_id: f.id, mcs: c.mcs });
        }
        p.served += c.bytes;
        p.slots.push(c.slot);
        allocations.push(Allocation {
            flow_id: f.id,
            ue_id: f.ue_id,
            instance: p.instance,
            slot: c.slot % hp_slots,
            rbs: c.rbs,
            mcs: c.mcs,
            bytes: c.bytes,
        });
    }
    Some(Pass {
        grid,
        allocations,
        pending,
        unserved: 0,
    })
}

/// Checks that the flows stay schedulable when every UE can only use
/// `mcs_min`.
pub fn admission_check(
    flows: &[FlowSpec],
    pattern: &TddPattern,
    mcs_min: Mcs,
    params: DelayParams,
) -> Result<Admission, GfError> {
    let ues: Vec<u32> = flows.iter().map(|f| f.ue_id).collect();
    let channel = ChannelState::uniform(&ues, pattern.n_rb(), cqi_for_mcs(mcs_min));
    let range = McsRange::new(mcs_min, Mcs::MAX)?;
    Ok(preallocate(flows, pattern, &channel, range, params)?.admission)
}
