mod common;

use common::gf_oracle::{exhaustive_feasible, random_case, rng, Case};
use tsnbridge::grantfree::preallocate;
use tsnbridge::link::ChannelState;

fn greedy_feasible(c: &Case) -> bool {
    let ues: Vec<u32> = c.flows.iter().map(|f| f.ue_id).collect();
    let mut ch = ChannelState::uniform(&ues, c.pattern.n_rb(), c.cqi[0]);
    for (f, &q) in c.flows.iter().zip(&c.cqi) {
        ch.set_row(f.ue_id, q).unwrap();
    }
    preallocate(&c.flows, &c.pattern, &ch, c.range, c.delta)
        .unwrap()
        .admission
        .is_feasible()
}

#[test]
fn greedy_never_claims_more_than_exhaustive() {
    let mut r = rng(11);
    for _ in 0..3000 {
        let c = random_case(&mut r);
        if greedy_feasible(&c) {
            assert!(exhaustive_feasible(&c), "{c:?}");
        }
    }
}

#[test]
fn agrees_with_exhaustive_search() {
    let mut r = rng(12);
    let mut miss = Vec::new();
    for _ in 0..20000 {
        let c = random_case(&mut r);
        if greedy_feasible(&c) != exhaustive_feasible(&c) {
            miss.push(c);
        }
    }
    assert!(miss.is_empty(), "{} disagreements, first: {:?}", miss.len(), miss.first());
}
