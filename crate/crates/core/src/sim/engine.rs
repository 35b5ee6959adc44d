use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::time::Duration;

/// Same-instant events run channel updates first, then frame movement,
/// then uplink slot processing, so a frame reaching the UE exactly at a slot
/// start can use that slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Phase {
    Channel = 0,
    Frame = 1,
    Slot = 2,
}

#[derive(Debug)]
pub struct EventQueue<K: Ord> {
    heap: BinaryHeap<Reverse<(Duration, Phase, u64, K)>>,
    seq: u64,
    now: Duration,
}

impl<K: Ord> Default for EventQueue<K> {
    fn default() -> Self {
        EventQueue {
            heap: BinaryHeap::new(),
            seq: 0,
            now: Duration::ZERO,
        }
    }
}

impl<K: Ord> EventQueue<K> {
    pub fn now(&self) -> Duration {
        self.now
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// # Panics
    /// When `t` lies before the current time.
    pub fn push(&mut self, t: Duration, phase: Phase, kind: K) {
        assert!(t >= self.now, "event at {t} scheduled in the past (now {})", self.now);
        self.heap.push(Reverse((t, phase, self.seq, kind)));
        self.seq += 1;
    }

    pub fn pop(&mut self) -> Option<(Duration, K)> {
        let Reverse((t, _, _, k)) = self.heap.pop()?;
        debug_assert!(t >= self.now);
        self.now = t;
        Some((t, k))
    }

    pub fn peek_time(&self) -> Option<Duration> {
        self.heap.peek().map(|Reverse(e)| e.0)
    }
}
