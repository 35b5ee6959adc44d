use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use thiserror::Error;

use crate::scenario::Traffic;
use crate::time::Duration;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TrafficError {
    #[error("size range [{0}, {1}] is invalid")]
    Size(u32, u32),
    #[error("interval or rate must be positive")]
    Interval,
}

/// A frame's nominal arrival at the UE's translator and its size.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Arrival {
    pub t: Duration,
    pub size: u32,
}

/// Arrivals in `[start, horizon)`. Periodic streams start at their burst
/// arrival time and ignore `start`.
pub fn generate_traffic(
    traffic: &Traffic,
    start: Duration,
    horizon: Duration,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Arrival>, TrafficError> {
    let (lo, hi) = traffic.size_range();
    if lo == 0 || lo > hi {
        return Err(TrafficError::Size(lo, hi));
    }
    let size = |rng: &mut ChaCha8Rng| if lo == hi { lo } else { rng.random_range(lo..=hi) };
    let mut out = Vec::new();
    match *traffic {
        Traffic::Periodic { bat, period, .. } => {
            if period == Duration::ZERO {
                return Err(TrafficError::Interval);
            }
            let mut t = bat;
            while t < horizon {
                out.push(Arrival { t, size: size(rng) });
                t += period;
            }
        }
        Traffic::Sporadic { mean_interval, .. } => {
            if mean_interval == Duration::ZERO {
                return Err(TrafficError::Interval);
            }
            let exp = Exp::new(1.0 / mean_interval.as_ns() as f64).map_err(|_| TrafficError::Interval)?;
            let mut t = start;
            loop {
                let gap = exp.sample(rng).round() as u64;
                t += Duration::from_ns(gap.max(1));
                if t >= horizon {
                    break;
                }
                out.push(Arrival { t, size: size(rng) });
            }
        }
        Traffic::Rate { bitrate_bps, .. } => {
            if bitrate_bps == 0 {
                return Err(TrafficError::Interval);
            }
            let mut t = start;
            while t < horizon {
                let s = size(rng);
                out.push(Arrival { t, size: s });
                t += Duration::transmission(s as u64, bitrate_bps);
            }
        }
    }
    Ok(out)
}
