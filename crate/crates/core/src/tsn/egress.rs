use std::collections::VecDeque;

use super::gcl::GateControlList;
use crate::flow::TrafficClass;
use crate::time::Duration;

pub const GIGABIT: u64 = 1_000_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Queued<T> {
    pub item: T,
    pub bytes: u32,
}

pub type ClassQueues<T> = [VecDeque<Queued<T>>; 8];

fn class(c: usize) -> TrafficClass {
    TrafficClass::new(c as u8).expect("queue index below 8")
}

/// Highest class whose gate is open at `t` and whose head frame finishes
/// before that gate closes.
pub fn egress_dequeue<T>(
    queues: &ClassQueues<T>,
    gcl: Option<&GateControlList>,
    t: Duration,
    rate_bps: u64,
) -> Option<usize> {
    (0..8).rev().find(|&c| {
        let Some(head) = queues[c].front() else {
            return false;
        };
        let Some(g) = gcl else { return true };
        let tc = class(c);
        if !g.is_open(tc, t) {
            return false;
        }
        let tx = Duration::transmission(head.bytes as u64, rate_bps);
        g.open_until(tc, t).is_none_or(|close| t + tx <= close)
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PortAction<T> {
    Transmit { item: T, class: usize, end: Duration },
    /// Nothing can start now; call again at this instant.
    WaitUntil(Duration),
    Idle,
}

/// Strict-priority egress port with optional time-aware gating.
#[derive(Clone, Debug)]
pub struct EgressPort<T> {
    rate_bps: u64,
    gcl: Option<GateControlList>,
    queues: ClassQueues<T>,
    busy_until: Duration,
}

impl<T> EgressPort<T> {
    pub fn new(rate_bps: u64, gcl: Option<GateControlList>) -> Self {
        EgressPort {
            rate_bps,
            gcl,
            queues: Default::default(),
            busy_until: Duration::ZERO,
        }
    }

    pub fn gcl(&self) -> Option<&GateControlList> {
        self.gcl.as_ref()
    }

    pub fn rate_bps(&self) -> u64 {
        self.rate_bps
    }

    pub fn enqueue(&mut self, item: T, bytes: u32, class: usize) {
        self.queues[class].push_back(Queued { item, bytes });
    }

    pub fn queued(&self) -> usize {
        self.queues.iter().map(VecDeque::len).sum()
    }

    pub fn busy_until(&self) -> Duration {
        self.busy_until
    }

    pub fn service(&mut self, t: Duration) -> PortAction<T> {
        if t < self.busy_until {
            return PortAction::WaitUntil(self.busy_until);
        }
        if let Some(c) = egress_dequeue(&self.queues, self.gcl.as_ref(), t, self.rate_bps) {
            let q = self.queues[c].pop_front().expect("dequeued class is nonempty");
            let end = t + Duration::transmission(q.bytes as u64, self.rate_bps);
            self.busy_until = end;
            return PortAction::Transmit {
                item: q.item,
                class: c,
                end,
            };
        }
        let Some(g) = &self.gcl else {
            return PortAction::Idle;
        };
        (0..8)
            .filter_map(|c| {
                let head = self.queues[c].front()?;
                let tx = Duration::transmission(head.bytes as u64, self.rate_bps);
                g.next_fit(class(c), t, tx)
            })
            .min()
            .map_or(PortAction::Idle, PortAction::WaitUntil)
    }
}
