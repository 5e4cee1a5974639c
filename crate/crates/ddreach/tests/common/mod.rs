//! Shared helpers for integration tests: seeded random transition systems
//! small enough for the explicit-state oracle to replay.

#![allow(dead_code)]

use ddreach::{ModelDesc, RelBlock, Relation, StateSet, Store, StoreConfig, TransitionSystem};
use rand::Rng;

/// Largest variable count per domain that keeps the state space tiny.
pub fn max_vars(m: u32) -> u32 {
    match m {
        2 => 8,
        3 => 5,
        _ => 4,
    }
}

pub fn small_store(vars: u32, m: u32) -> Store {
    Store::new(StoreConfig::new(vars, m).cache_bits(14)).unwrap()
}

/// Random partitioned system: 1..=4 relation blocks over small random
/// supports with random cube rows, plus 1..=2 initial cubes. Always carries
/// a row description so the explicit oracle can replay it.
pub fn random_system(store: &Store, rng: &mut impl Rng, n: u32, m: u32) -> TransitionSystem {
    let blocks = rng.gen_range(1..=4usize);
    let mut rels = Vec::with_capacity(blocks);
    for b in 0..blocks {
        let mut support: Vec<u32> = (1..=n).filter(|_| rng.gen_bool(0.5)).collect();
        while support.len() > 3 {
            let at = rng.gen_range(0..support.len());
            support.remove(at);
        }
        if support.is_empty() {
            support.push(rng.gen_range(1..=n));
        }
        let rows: Vec<Vec<(Option<u8>, Option<u8>)>> = (0..rng.gen_range(1..=4usize))
            .map(|_| {
                support
                    .iter()
                    .map(|_| {
                        let src = (!rng.gen_bool(0.25)).then(|| rng.gen_range(0..m) as u8);
                        let tgt = (!rng.gen_bool(0.25)).then(|| rng.gen_range(0..m) as u8);
                        (src, tgt)
                    })
                    .collect()
            })
            .collect();
        rels.push(RelBlock {
            name: format!("r{b}"),
            support,
            rows,
        });
    }
    let init_cubes: Vec<Vec<Option<u8>>> = (0..rng.gen_range(1..=2usize))
        .map(|_| {
            (0..n)
                .map(|_| (!rng.gen_bool(0.15)).then(|| rng.gen_range(0..m) as u8))
                .collect()
        })
        .collect();
    build_from_desc(store, n, m, rels, init_cubes)
}

pub fn build_from_desc(
    store: &Store,
    n: u32,
    m: u32,
    rels: Vec<RelBlock>,
    init_cubes: Vec<Vec<Option<u8>>>,
) -> TransitionSystem {
    let init = StateSet::from_cubes(store, n, &init_cubes).unwrap();
    let partials: Vec<Relation> = rels
        .iter()
        .map(|b| Relation::from_rows(store, n, b.support.clone(), &b.rows).unwrap())
        .collect();
    let monolithic = (rels.len() == 1 && partials[0].is_full_for(n)).then(|| partials[0].clone());
    TransitionSystem {
        name: format!("rand-n{n}-m{m}"),
        vars: n,
        domain: m,
        var_names: (1..=n).map(|i| format!("x{i}")).collect(),
        init,
        partials,
        monolithic,
        desc: Some(ModelDesc { init_cubes, rels }),
    }
}
