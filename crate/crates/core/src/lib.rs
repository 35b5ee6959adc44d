//! 5G TDD uplink modeled as a transparent TSN bridge.
//!
//! The crate computes bridge-delay bounds for a TDD slot pattern, pre-allocates
//! grant-free resources for periodic streams, runs grant-based uplink
//! schedulers for everything else, and simulates a talker to listener path
//! through wired TSN switches and the 5G system.

pub mod batch;
pub mod bridge_delay;
pub mod dynamic;
pub mod flow;
pub mod grantfree;
pub mod link;
pub mod scenario;
pub mod sim;
pub mod time;
pub mod tsn;
