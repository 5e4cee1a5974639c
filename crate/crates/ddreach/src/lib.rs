//! Canonical decision diagrams with recursive reachability fixpoints.
//!
//! The crate keeps quasi-reduced ordered decision diagrams (binary and
//! multi-valued) in a thread-safe node store and builds symbolic state-space
//! exploration on top of them: plain breadth-first iteration, a recursive
//! fixpoint that closes sub-diagrams level by level, a parallel variant of
//! that fixpoint, and event saturation as a baseline. Transition systems come
//! from built-in generators or from a small text format, and an explicit-state
//! oracle plus locality metrics support testing and benchmarking.
//!
//! Sets over n variables live on levels `0..n`; transition relations live on
//! `2n` levels with source and target variables interleaved, so variable i
//! occupies level `2(i-1)` and its primed copy level `2(i-1)+1`.

pub mod bdd;
mod error;
pub mod mdd;
mod model;
mod reach;
mod sets;
mod store;

pub use error::{Error, Result};
pub use reach::{
    bfs, reach_bdd, reach_bdd_par, reach_bdd_permuted, reach_mdd, run, saturate, Algorithm,
    PartitionedSystem, RunOptions, RunStats, SatEntry, CSV_HEADER,
};
pub use model::{
    avg_relative_bandwidth, dependency_matrix, explicit_oracle, gen_counter, gen_philosophers,
    parse_tsys, tsys_dims, wrap_bad_case, write_tsys, DependencyMatrix, ModelDesc, RelBlock,
    TransitionSystem,
};
pub use sets::{Relation, StateSet};
pub use store::{CacheTag, NodeRef, Reduction, Store, StoreConfig};
