//! Wired switch model: time-aware egress gates, per-stream filtering and
//! policing, and gate schedule shifting.

mod egress;
mod gcl;
mod meter;
mod psfp;

pub use egress::{egress_dequeue, ClassQueues, EgressPort, PortAction, Queued, GIGABIT};
pub use gcl::{shift_gcl, ClassMask, GateControlList, GateEntry, GclError, GclWindow};
pub use meter::{meter_color, Color, MeterParams, TwoRateMeterState};
pub use psfp::{psfp_filter, DropReason, FilterVerdict, StreamFilter};
