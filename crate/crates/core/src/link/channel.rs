//! Synthetic per-(UE, RB) CQI process: a seeded, bounded integer random walk.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Cqi, LinkError};
use crate::time::{Duration, Fraction};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelParams {
    /// Initial CQI of each UE is drawn uniformly from this inclusive range
    /// and applied to all of its RBs.
    pub initial_cqi: (Cqi, Cqi),
    /// Probability that a CQI moves one step at each update.
    pub step_sigma: Fraction,
    pub update_period: Duration,
}

impl ChannelParams {
    pub fn frozen(cqi: Cqi) -> Self {
        ChannelParams {
            initial_cqi: (cqi, cqi),
            step_sigma: Fraction::ZERO,
            update_period: Duration::from_ms(50),
        }
    }

    pub fn is_frozen(&self) -> bool {
        self.step_sigma.is_zero()
    }
}

#[derive(Clone, Debug)]
pub struct ChannelState {
    ues: Vec<u32>,
    n_rb: u32,
    cqi: Vec<Vec<Cqi>>,
    step_sigma: Fraction,
    update_period: Duration,
    seed: u64,
    rng: ChaCha8Rng,
}

impl PartialEq for ChannelState {
    fn eq(&self, other: &Self) -> bool {
        self.ues == other.ues && self.n_rb == other.n_rb && self.cqi == other.cqi
    }
}

impl ChannelState {
    pub fn new(ue_ids: &[u32], n_rb: u32, params: &ChannelParams, seed: u64) -> Self {
        let mut ues = ue_ids.to_vec();
        ues.sort_unstable();
        ues.dedup();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (lo, hi) = (params.initial_cqi.0.get(), params.initial_cqi.1.get());
        let (lo, hi) = (lo.min(hi), lo.max(hi));
        let cqi = ues
            .iter()
            .map(|_| {
                let c = Cqi::new(rng.random_range(lo..=hi)).expect("range lies within 1..=15");
                vec![c; n_rb as usize]
            })
            .collect();
        ChannelState {
            ues,
            n_rb,
            cqi,
            step_sigma: params.step_sigma,
            update_period: params.update_period,
            seed,
            rng,
        }
    }

    /// A channel where every (UE, RB) has the same CQI forever.
    pub fn uniform(ue_ids: &[u32], n_rb: u32, cqi: Cqi) -> Self {
        ChannelState::new(ue_ids, n_rb, &ChannelParams::frozen(cqi), 0)
    }

    /// Same UEs and RBs, every value replaced by `cqi`, no further evolution.
    pub fn pinned(&self, cqi: Cqi) -> Self {
        let mut c = self.clone();
        for row in &mut c.cqi {
            row.fill(cqi);
        }
        c.step_sigma = Fraction::ZERO;
        c
    }

    pub fn ues(&self) -> &[u32] {
        &self.ues
    }

    pub fn n_rb(&self) -> u32 {
        self.n_rb
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn update_period(&self) -> Duration {
        self.update_period
    }

    pub fn is_frozen(&self) -> bool {
        self.step_sigma.is_zero()
    }

    fn index(&self, ue: u32) -> Result<usize, LinkError> {
        self.ues.binary_search(&ue).map_err(|_| LinkError::UnknownUe(ue))
    }

    pub fn row(&self, ue: u32) -> Result<&[Cqi], LinkError> {
        Ok(&self.cqi[self.index(ue)?])
    }

    pub fn cqi(&self, ue: u32, rb: u32) -> Result<Cqi, LinkError> {
        Ok(self.row(ue)?[rb as usize])
    }

    pub fn set(&mut self, ue: u32, rb: u32, cqi: Cqi) -> Result<(), LinkError> {
        let i = self.index(ue)?;
        self.cqi[i][rb as usize] = cqi;
        Ok(())
    }

    pub fn set_row(&mut self, ue: u32, cqi: Cqi) -> Result<(), LinkError> {
        let i = self.index(ue)?;
        self.cqi[i].fill(cqi);
        Ok(())
    }

    /// Advances every CQI by one update period. Values are visited in
    /// (UE id, RB) order so the trajectory depends only on the seed.
    pub fn step(&mut self) {
        if self.step_sigma.is_zero() {
            return;
        }
        let (num, den) = (self.step_sigma.num(), self.step_sigma.den());
        for row in &mut self.cqi {
            for c in row.iter_mut() {
                if self.rng.random_ratio(num, den) {
                    let up = self.rng.random_ratio(1, 2);
                    let v = if up { c.get() + 1 } else { c.get() - 1 };
                    *c = Cqi::new(v.clamp(1, 15)).expect("clamped");
                }
            }
        }
    }

    /// Iterates `(ue, rb, cqi)` in a fixed order, for trace export.
    pub fn iter(&self) -> impl Iterator<Item = (u32, u32, Cqi)> + '_ {
        self.ues.iter().zip(&self.cqi).flat_map(|(&ue, row)| {
            row.iter()
                .enumerate()
                .map(move |(rb, &c)| (ue, rb as u32, c))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(sigma: Fraction) -> ChannelParams {
        ChannelParams {
            initial_cqi: (Cqi::new(3).unwrap(), Cqi::new(13).unwrap()),
            step_sigma: sigma,
            update_period: Duration::from_ms(10),
        }
    }

    #[test]
    fn zero_sigma_is_frozen() {
        let mut c = ChannelState::new(&[1, 2, 3], 8, &params(Fraction::ZERO), 7);
        let before = c.clone();
        for _ in 0..100 {
            c.step();
        }
        assert_eq!(c, before);
    }

    #[test]
    fn same_seed_same_trajectory() {
        let p = params(Fraction::new(1, 2).unwrap());
        let mut a = ChannelState::new(&[4, 1], 16, &p, 99);
        let mut b = ChannelState::new(&[1, 4], 16, &p, 99);
        for _ in 0..500 {
            a.step();
            b.step();
            assert_eq!(a, b);
        }
        let mut c = ChannelState::new(&[1, 4], 16, &p, 100);
        for _ in 0..500 {
            c.step();
        }
        assert_ne!(a, c);
    }

    #[test]
    fn walk_stays_in_range() {
        let p = params(Fraction::ONE);
        let mut c = ChannelState::new(&[0, 1], 4, &p, 3);
        let mut seen_edges = (false, false);
        for _ in 0..10_000 {
            c.step();
            for (_, _, q) in c.iter() {
                assert!((1..=15).contains(&q.get()));
                seen_edges.0 |= q.get() == 1;
                seen_edges.1 |= q.get() == 15;
            }
        }
        assert!(seen_edges.0 && seen_edges.1);
    }

    #[test]
    fn lookup_and_pinning() {
        let mut c = ChannelState::uniform(&[5], 3, Cqi::new(9).unwrap());
        assert_eq!(c.cqi(5, 2).unwrap().get(), 9);
        assert_eq!(c.cqi(6, 0), Err(LinkError::UnknownUe(6)));
        c.set(5, 1, Cqi::new(2).unwrap()).unwrap();
        let p = c.pinned(Cqi::new(4).unwrap());
        assert!(p.row(5).unwrap().iter().all(|q| q.get() == 4));
        assert!(p.is_frozen());
    }
}
