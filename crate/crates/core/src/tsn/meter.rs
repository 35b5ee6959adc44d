use serde::{Deserialize, Serialize};

use crate::time::Duration;

/// Tokens are kept in units of 1e-9 byte so that rate (bytes/s) times
/// elapsed nanoseconds adds up without rounding.
const SCALE: u128 = 1_000_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeterParams {
    /// Committed rate, bytes per second.
    pub cir: u64,
    /// Committed burst, bytes.
    pub cbs: u64,
    /// Excess rate, bytes per second.
    #[serde(default)]
    pub eir: u64,
    /// Excess burst, bytes.
    #[serde(default)]
    pub ebs: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Color {
    Green,
    Yellow,
    Red,
}

/// Color-blind two-rate three-color meter. Both buckets start full.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TwoRateMeterState {
    params: MeterParams,
    green: u128,
    yellow: u128,
    last_update: Duration,
}

impl TwoRateMeterState {
    pub fn new(params: MeterParams) -> Self {
        TwoRateMeterState {
            params,
            green: params.cbs as u128 * SCALE,
            yellow: params.ebs as u128 * SCALE,
            last_update: Duration::ZERO,
        }
    }

    pub fn params(&self) -> MeterParams {
        self.params
    }

    /// Green tokens in whole bytes, rounded down.
    pub fn green_tokens(&self) -> u64 {
        (self.green / SCALE) as u64
    }

    pub fn yellow_tokens(&self) -> u64 {
        (self.yellow / SCALE) as u64
    }

    fn refill(&mut self, now: Duration) {
        let dt = now.saturating_sub(self.last_update).as_ns() as u128;
        let p = self.params;
        self.green = (self.green + p.cir as u128 * dt).min(p.cbs as u128 * SCALE);
        self.yellow = (self.yellow + p.eir as u128 * dt).min(p.ebs as u128 * SCALE);
        self.last_update = self.last_update.max(now);
    }
}

/// Refills both buckets up to `now` and marks a frame of `bytes`.
pub fn meter_color(state: &mut TwoRateMeterState, bytes: u32, now: Duration) -> Color {
    state.refill(now);
    let need = bytes as u128 * SCALE;
    if state.green >= need {
        state.green -= need;
        Color::Green
    } else if state.yellow >= need {
        state.yellow -= need;
        Color::Yellow
    } else {
        Color::Red
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn meter(cir: u64, cbs: u64, eir: u64, ebs: u64) -> TwoRateMeterState {
        TwoRateMeterState::new(MeterParams { cir, cbs, eir, ebs })
    }

    #[test]
    fn fresh_meter_passes_green() {
        let mut m = meter(1000, 500, 0, 0);
        assert_eq!(meter_color(&mut m, 500, Duration::ZERO), Color::Green);
    }

    #[test]
    fn burst_exhausts_green() {
        let (cbs, frame) = (1000u64, 300u32);
        let mut m = meter(1_000, cbs, 0, 0);
        let n = cbs.div_ceil(frame as u64) + 1;
        let colors: Vec<Color> = (0..n).map(|_| meter_color(&mut m, frame, Duration::ZERO)).collect();
        assert_eq!(colors.iter().filter(|&&c| c == Color::Green).count(), 3);
        assert_eq!(*colors.last().unwrap(), Color::Red);
    }

    #[test]
    fn excess_bucket_yields_yellow() {
        let mut m = meter(1_000, 100, 1_000, 100);
        assert_eq!(meter_color(&mut m, 100, Duration::ZERO), Color::Green);
        assert_eq!(meter_color(&mut m, 100, Duration::ZERO), Color::Yellow);
        assert_eq!(meter_color(&mut m, 100, Duration::ZERO), Color::Red);
        // 0.1 s refills 100 bytes of each.
        assert_eq!(meter_color(&mut m, 100, Duration::from_ms(100)), Color::Green);
    }

    #[test]
    fn single_rate_degenerate() {
        let mut m = meter(1_000, 100, 0, 0);
        for i in 0..50 {
            let t = Duration::from_ms(100 * i);
            assert_eq!(meter_color(&mut m, 100, t), Color::Green);
            assert_eq!(meter_color(&mut m, 1, t), Color::Red);
        }
    }

    proptest! {
        #[test]
        fn tokens_stay_within_caps(
            cir in 0u64..10_000_000, cbs in 0u64..5_000,
            eir in 0u64..10_000_000, ebs in 0u64..5_000,
            frames in proptest::collection::vec((0u64..2_000_000, 1u32..3_000), 1..200),
        ) {
            let mut m = meter(cir, cbs, eir, ebs);
            let mut t = Duration::ZERO;
            for (gap, bytes) in frames {
                t += Duration::from_ns(gap);
                let before = (m.green, m.yellow);
                let c = meter_color(&mut m, bytes, t);
                prop_assert!(m.green <= cbs as u128 * SCALE);
                prop_assert!(m.yellow <= ebs as u128 * SCALE);
                if c == Color::Red {
                    prop_assert!(m.green < bytes as u128 * SCALE || before.0 < bytes as u128 * SCALE);
                }
            }
        }
    }
}
