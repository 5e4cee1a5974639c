//! Reachability fixpoints: breadth-first iteration, the recursive fixpoint
//! on binary and m-ary diagrams, its fork-join parallel variant, and
//! bottom-up event saturation, all instrumented with call counters.
//!
//! The recursive fixpoint closes the two (or m) halves of the state set
//! against the matching quadrants of the relation, so converged subproblems
//! are cache hits instead of repeated image computations. Result sets are
//! canonical: equal sets come back as the same node handle.

use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering::Relaxed};
use std::time::{Duration, Instant};

use crate::bdd;
use crate::error::{Error, Result};
use crate::mdd;
use crate::model::TransitionSystem;
use crate::sets::{Relation, StateSet};
use crate::store::{CacheTag, NodeRef, Store};

/// CSV column order for [`RunStats::csv_row`].
pub const CSV_HEADER: &str = "model,alg,workers,n,m,reach_calls,image_calls,union_calls,\
top_loop_iterations,peak_node_count,wall_time_ms,final_sat_count";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Bfs,
    ReachBdd,
    ReachBddPar,
    ReachMdd,
    Saturation,
}

impl Algorithm {
    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::Bfs => "bfs",
            Algorithm::ReachBdd => "reach-bdd",
            Algorithm::ReachBddPar => "reach-bdd-par",
            Algorithm::ReachMdd => "reach-mdd",
            Algorithm::Saturation => "saturation",
        }
    }

    pub const ALL: [Algorithm; 5] = [
        Algorithm::Bfs,
        Algorithm::ReachBdd,
        Algorithm::ReachBddPar,
        Algorithm::ReachMdd,
        Algorithm::Saturation,
    ];
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Algorithm> {
        match s {
            "bfs" => Ok(Algorithm::Bfs),
            "reach-bdd" => Ok(Algorithm::ReachBdd),
            "reach-bdd-par" => Ok(Algorithm::ReachBddPar),
            "reach-mdd" => Ok(Algorithm::ReachMdd),
            "saturation" => Ok(Algorithm::Saturation),
            other => Err(Error::Model(format!(
                "unknown algorithm `{other}` (expected bfs, reach-bdd, reach-bdd-par, reach-mdd or saturation)"
            ))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    /// Worker threads for the parallel fixpoint; other algorithms ignore it.
    pub workers: usize,
    /// Cooperative time budget, checked once per top-loop pass.
    pub timeout: Option<Duration>,
}

impl Default for RunOptions {
    fn default() -> RunOptions {
        RunOptions {
            workers: 1,
            timeout: None,
        }
    }
}

/// Instrumentation emitted by every algorithm run.
///
/// `reach_calls` counts cache-miss entries of the recursive fixpoint (cache
/// hits and base cases are free); `image_calls` and `union_calls` count the
/// algorithm's own invocation sites, not internal recursion;
/// `top_loop_iterations` counts passes of the outermost loop, including the
/// final confirming pass.
#[derive(Clone, Debug)]
pub struct RunStats {
    pub model: String,
    pub alg: String,
    pub workers: usize,
    pub n: u32,
    pub m: u32,
    pub reach_calls: u64,
    pub image_calls: u64,
    pub union_calls: u64,
    pub top_loop_iterations: u64,
    pub peak_node_count: u64,
    pub wall_time_ms: f64,
    pub final_sat_count: String,
}

impl RunStats {
    /// One CSV line matching [`CSV_HEADER`].
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{:.3},{}",
            self.model,
            self.alg,
            self.workers,
            self.n,
            self.m,
            self.reach_calls,
            self.image_calls,
            self.union_calls,
            self.top_loop_iterations,
            self.peak_node_count,
            self.wall_time_ms,
            self.final_sat_count
        )
    }
}

struct Ctx<'a> {
    store: &'a Store,
    reach_calls: AtomicU64,
    image_calls: AtomicU64,
    union_calls: AtomicU64,
    top_iterations: AtomicU64,
    deadline: Option<Instant>,
}

impl<'a> Ctx<'a> {
    fn new(store: &'a Store, opts: &RunOptions) -> Ctx<'a> {
        Ctx {
            store,
            reach_calls: AtomicU64::new(0),
            image_calls: AtomicU64::new(0),
            union_calls: AtomicU64::new(0),
            top_iterations: AtomicU64::new(0),
            deadline: opts.timeout.map(|d| Instant::now() + d),
        }
    }

    fn top_pass(&self) -> Result<()> {
        self.top_iterations.fetch_add(1, Relaxed);
        if let Some(deadline) = self.deadline {
            if Instant::now() >= deadline {
                return Err(Error::Timeout);
            }
        }
        Ok(())
    }

    fn stats(
        &self,
        alg: &str,
        workers: usize,
        vars: u32,
        root: NodeRef,
        started: Instant,
    ) -> Result<RunStats> {
        Ok(RunStats {
            model: String::new(),
            alg: alg.to_string(),
            workers,
            n: vars,
            m: self.store.domain(),
            reach_calls: self.reach_calls.load(Relaxed),
            image_calls: self.image_calls.load(Relaxed),
            union_calls: self.union_calls.load(Relaxed),
            top_loop_iterations: self.top_iterations.load(Relaxed),
            peak_node_count: self.store.num_nodes(),
            wall_time_ms: started.elapsed().as_secs_f64() * 1000.0,
            final_sat_count: self.store.sat_count(root, vars)?.to_string(),
        })
    }
}

/// Child (i, j) of a relation node: source value i, target value j.
fn quadrant(store: &Store, r: NodeRef, i: usize, j: usize) -> NodeRef {
    debug_assert!(!r.is_terminal());
    let ri = store.kids(r)[i];
    if ri == NodeRef::ZERO {
        NodeRef::ZERO
    } else {
        store.kids(ri)[j]
    }
}

fn check_reach_inputs(
    store: &Store,
    init: &StateSet,
    rel: &Relation,
    binary: bool,
) -> Result<()> {
    if binary && store.domain() != 2 {
        return Err(Error::BinaryOnly {
            domain: store.domain(),
        });
    }
    store.check_quasi_root(init.root, init.vars)?;
    crate::sets::validate_support(&rel.support, init.vars)?;
    store.check_quasi_root(rel.root, rel.levels())?;
    if !rel.is_full_for(init.vars) {
        return Err(Error::Model(
            "reachability needs a full-support relation; merge partials first".into(),
        ));
    }
    Ok(())
}

/// Breadth-first fixpoint: one image plus one union per pass until the set
/// stops changing. The pass that confirms convergence is counted.
pub fn bfs(
    store: &Store,
    init: &StateSet,
    rel: &Relation,
    opts: &RunOptions,
) -> Result<(StateSet, RunStats)> {
    check_reach_inputs(store, init, rel, false)?;
    let started = Instant::now();
    let ctx = Ctx::new(store, opts);
    let binary = store.domain() == 2;
    let mut cur = init.root;
    loop {
        ctx.top_pass()?;
        ctx.image_calls.fetch_add(1, Relaxed);
        let img = if binary {
            bdd::image_rec(store, cur, rel.root)
        } else {
            mdd::image_rec(store, cur, rel.root)
        };
        ctx.union_calls.fetch_add(1, Relaxed);
        let next = if binary {
            bdd::union_rec(store, cur, img)
        } else {
            mdd::union_rec(store, cur, img)
        };
        if next == cur {
            break;
        }
        cur = next;
    }
    let stats = ctx.stats("bfs", 1, init.vars, cur, started)?;
    Ok((
        StateSet {
            root: cur,
            vars: init.vars,
        },
        stats,
    ))
}

/// Recursive binary fixpoint. Per pass, in order: close the 0-half under
/// the stay-0 quadrant, push its image across the 0-to-1 quadrant into the
/// 1-half, close the 1-half, push back across the 1-to-0 quadrant.
pub fn reach_bdd(
    store: &Store,
    init: &StateSet,
    rel: &Relation,
    opts: &RunOptions,
) -> Result<(StateSet, RunStats)> {
    check_reach_inputs(store, init, rel, true)?;
    let started = Instant::now();
    let ctx = Ctx::new(store, opts);
    let root = reach_bdd_rec(&ctx, init.root, rel.root, true)?;
    let stats = ctx.stats("reach-bdd", 1, init.vars, root, started)?;
    Ok((
        StateSet {
            root,
            vars: init.vars,
        },
        stats,
    ))
}

fn reach_bdd_rec(ctx: &Ctx, s: NodeRef, r: NodeRef, top: bool) -> Result<NodeRef> {
    let store = ctx.store;
    if s == NodeRef::ZERO {
        return Ok(NodeRef::ZERO);
    }
    if r == NodeRef::ZERO {
        return Ok(s);
    }
    if s == NodeRef::ONE || r == NodeRef::ONE {
        return Ok(NodeRef::ONE);
    }
    if let Some(hit) = store.cache_get(CacheTag::ReachBdd, s, r) {
        return Ok(hit);
    }
    ctx.reach_calls.fetch_add(1, Relaxed);
    let level = store.node_level(s);
    debug_assert_eq!(store.node_level(r), 2 * level);
    let q00 = quadrant(store, r, 0, 0);
    let q01 = quadrant(store, r, 0, 1);
    let q10 = quadrant(store, r, 1, 0);
    let q11 = quadrant(store, r, 1, 1);
    let mut s0 = store.kids(s)[0];
    let mut s1 = store.kids(s)[1];
    loop {
        if top {
            ctx.top_pass()?;
        }
        let before = (s0, s1);
        s0 = reach_bdd_rec(ctx, s0, q00, false)?;
        ctx.image_calls.fetch_add(1, Relaxed);
        let forward = bdd::image_rec(store, s0, q01);
        ctx.union_calls.fetch_add(1, Relaxed);
        s1 = bdd::union_rec(store, s1, forward);
        s1 = reach_bdd_rec(ctx, s1, q11, false)?;
        ctx.image_calls.fetch_add(1, Relaxed);
        let backward = bdd::image_rec(store, s1, q10);
        ctx.union_calls.fetch_add(1, Relaxed);
        s0 = bdd::union_rec(store, s0, backward);
        if (s0, s1) == before {
            break;
        }
    }
    let out = store.mk_quasi(level, &[s0, s1]);
    store.cache_put(CacheTag::ReachBdd, s, r, out);
    Ok(out)
}

/// Recursive binary fixpoint with the loop statements in a different fixed
/// order (1-half first). Exists to witness that the loop body permutation
/// does not change the result; it is not part of the benchmark surface.
pub fn reach_bdd_permuted(
    store: &Store,
    init: &StateSet,
    rel: &Relation,
    opts: &RunOptions,
) -> Result<(StateSet, RunStats)> {
    check_reach_inputs(store, init, rel, true)?;
    let started = Instant::now();
    let ctx = Ctx::new(store, opts);
    let root = reach_perm_rec(&ctx, init.root, rel.root, true)?;
    let stats = ctx.stats("reach-bdd-perm", 1, init.vars, root, started)?;
    Ok((
        StateSet {
            root,
            vars: init.vars,
        },
        stats,
    ))
}

fn reach_perm_rec(ctx: &Ctx, s: NodeRef, r: NodeRef, top: bool) -> Result<NodeRef> {
    let store = ctx.store;
    if s == NodeRef::ZERO {
        return Ok(NodeRef::ZERO);
    }
    if r == NodeRef::ZERO {
        return Ok(s);
    }
    if s == NodeRef::ONE || r == NodeRef::ONE {
        return Ok(NodeRef::ONE);
    }
    if let Some(hit) = store.cache_get(CacheTag::ReachBddPerm, s, r) {
        return Ok(hit);
    }
    ctx.reach_calls.fetch_add(1, Relaxed);
    let level = store.node_level(s);
    let q00 = quadrant(store, r, 0, 0);
    let q01 = quadrant(store, r, 0, 1);
    let q10 = quadrant(store, r, 1, 0);
    let q11 = quadrant(store, r, 1, 1);
    let mut s0 = store.kids(s)[0];
    let mut s1 = store.kids(s)[1];
    loop {
        if top {
            ctx.top_pass()?;
        }
        let before = (s0, s1);
        s1 = reach_perm_rec(ctx, s1, q11, false)?;
        ctx.image_calls.fetch_add(1, Relaxed);
        let backward = bdd::image_rec(store, s1, q10);
        ctx.union_calls.fetch_add(1, Relaxed);
        s0 = bdd::union_rec(store, s0, backward);
        s0 = reach_perm_rec(ctx, s0, q00, false)?;
        ctx.image_calls.fetch_add(1, Relaxed);
        let forward = bdd::image_rec(store, s0, q01);
        ctx.union_calls.fetch_add(1, Relaxed);
        s1 = bdd::union_rec(store, s1, forward);
        if (s0, s1) == before {
            break;
        }
    }
    let out = store.mk_quasi(level, &[s0, s1]);
    store.cache_put(CacheTag::ReachBddPerm, s, r, out);
    Ok(out)
}

/// Fork-join variant of the recursive binary fixpoint: both halves close
/// concurrently, then both images, then both unions. Runs on its own thread
/// pool sized to `opts.workers`.
pub fn reach_bdd_par(
    store: &Store,
    init: &StateSet,
    rel: &Relation,
    opts: &RunOptions,
) -> Result<(StateSet, RunStats)> {
    check_reach_inputs(store, init, rel, true)?;
    if opts.workers < 1 {
        return Err(Error::Model("workers must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers)
        .build()
        .map_err(|e| Error::Model(format!("thread pool: {e}")))?;
    let started = Instant::now();
    let ctx = Ctx::new(store, opts);
    let root = pool.install(|| reach_par_rec(&ctx, init.root, rel.root, true))?;
    let stats = ctx.stats("reach-bdd-par", opts.workers, init.vars, root, started)?;
    Ok((
        StateSet {
            root,
            vars: init.vars,
        },
        stats,
    ))
}

fn reach_par_rec(ctx: &Ctx, s: NodeRef, r: NodeRef, top: bool) -> Result<NodeRef> {
    let store = ctx.store;
    if s == NodeRef::ZERO {
        return Ok(NodeRef::ZERO);
    }
    if r == NodeRef::ZERO {
        return Ok(s);
    }
    if s == NodeRef::ONE || r == NodeRef::ONE {
        return Ok(NodeRef::ONE);
    }
    if let Some(hit) = store.cache_get(CacheTag::ReachBddPar, s, r) {
        return Ok(hit);
    }
    ctx.reach_calls.fetch_add(1, Relaxed);
    let level = store.node_level(s);
    let q00 = quadrant(store, r, 0, 0);
    let q01 = quadrant(store, r, 0, 1);
    let q10 = quadrant(store, r, 1, 0);
    let q11 = quadrant(store, r, 1, 1);
    let mut s0 = store.kids(s)[0];
    let mut s1 = store.kids(s)[1];
    loop {
        if top {
            ctx.top_pass()?;
        }
        let before = (s0, s1);
        let (c0, c1) = rayon::join(
            || reach_par_rec(ctx, s0, q00, false),
            || reach_par_rec(ctx, s1, q11, false),
        );
        s0 = c0?;
        s1 = c1?;
        ctx.image_calls.fetch_add(2, Relaxed);
        let (t0, t1) = rayon::join(
            || bdd::image_rec(store, s1, q10),
            || bdd::image_rec(store, s0, q01),
        );
        ctx.union_calls.fetch_add(2, Relaxed);
        let (u0, u1) = rayon::join(
            || bdd::union_rec(store, s0, t0),
            || bdd::union_rec(store, s1, t1),
        );
        s0 = u0;
        s1 = u1;
        if (s0, s1) == before {
            break;
        }
    }
    let out = store.mk_quasi(level, &[s0, s1]);
    store.cache_put(CacheTag::ReachBddPar, s, r, out);
    Ok(out)
}

/// Recursive m-ary fixpoint: per pass the (i, j) pairs are visited in
/// lexicographic order, closing the diagonal entries and pushing images
/// across the off-diagonal ones.
pub fn reach_mdd(
    store: &Store,
    init: &StateSet,
    rel: &Relation,
    opts: &RunOptions,
) -> Result<(StateSet, RunStats)> {
    check_reach_inputs(store, init, rel, false)?;
    let started = Instant::now();
    let ctx = Ctx::new(store, opts);
    let root = reach_mdd_rec(&ctx, init.root, rel.root, true)?;
    let stats = ctx.stats("reach-mdd", 1, init.vars, root, started)?;
    Ok((
        StateSet {
            root,
            vars: init.vars,
        },
        stats,
    ))
}

fn reach_mdd_rec(ctx: &Ctx, s: NodeRef, r: NodeRef, top: bool) -> Result<NodeRef> {
    let store = ctx.store;
    if s == NodeRef::ZERO {
        return Ok(NodeRef::ZERO);
    }
    if r == NodeRef::ZERO {
        return Ok(s);
    }
    if s == NodeRef::ONE || r == NodeRef::ONE {
        return Ok(NodeRef::ONE);
    }
    if let Some(hit) = store.cache_get(CacheTag::ReachMdd, s, r) {
        return Ok(hit);
    }
    ctx.reach_calls.fetch_add(1, Relaxed);
    let level = store.node_level(s);
    let m = store.domain() as usize;
    let mut parts = store.kids(s).to_vec();
    loop {
        if top {
            ctx.top_pass()?;
        }
        let before = parts.clone();
        for i in 0..m {
            for j in 0..m {
                let rij = quadrant(store, r, i, j);
                if i == j {
                    parts[i] = reach_mdd_rec(ctx, parts[i], rij, false)?;
                } else {
                    ctx.image_calls.fetch_add(1, Relaxed);
                    let img = mdd::image_rec(store, parts[i], rij);
                    ctx.union_calls.fetch_add(1, Relaxed);
                    parts[j] = mdd::union_rec(store, parts[j], img);
                }
            }
        }
        if parts == before {
            break;
        }
    }
    let out = store.mk_quasi(level, &parts);
    store.cache_put(CacheTag::ReachMdd, s, r, out);
    Ok(out)
}

/// One partial relation prepared for saturation: kept with its original
/// support, the level its extension is rooted at, and the extension over the
/// variables from its first support variable down.
#[derive(Clone, Debug)]
pub struct SatEntry {
    pub rel: Relation,
    pub top_level: u32,
    pub extended: NodeRef,
}

/// Partial relations ordered deepest-top-variable first, ready for
/// bottom-up saturation. Built against one store; the nonce keys this
/// partition's saturation cache entries.
#[derive(Clone, Debug)]
pub struct PartitionedSystem {
    pub entries: Vec<SatEntry>,
    pub vars: u32,
    nonce: NodeRef,
}

impl PartitionedSystem {
    pub fn new(store: &Store, partials: &[Relation], vars: u32) -> Result<PartitionedSystem> {
        if partials.is_empty() {
            return Err(Error::EmptyPartials);
        }
        let mut entries = Vec::with_capacity(partials.len());
        for rel in partials {
            crate::sets::validate_support(&rel.support, vars)?;
            store.check_quasi_root(rel.root, rel.levels())?;
            let first = rel.support[0];
            let top_level = 2 * (first - 1);
            let extended = mdd::extend_root(store, rel, first, vars);
            entries.push(SatEntry {
                rel: rel.clone(),
                top_level,
                extended,
            });
        }
        entries.sort_by_key(|e| std::cmp::Reverse(e.top_level));
        Ok(PartitionedSystem {
            entries,
            vars,
            nonce: NodeRef::from_raw(store.fresh_nonce()),
        })
    }

    fn is_sorted(&self) -> bool {
        self.entries
            .windows(2)
            .all(|w| w[0].top_level >= w[1].top_level)
    }
}

/// Bottom-up saturation: children of a node are saturated first, then every
/// partial rooted at the node's level is applied (image plus union, children
/// re-saturated after growth) until the node stops changing.
pub fn saturate(
    store: &Store,
    init: &StateSet,
    part: &PartitionedSystem,
    opts: &RunOptions,
) -> Result<(StateSet, RunStats)> {
    store.check_quasi_root(init.root, init.vars)?;
    if part.vars != init.vars {
        return Err(Error::Dimension {
            left: init.vars,
            right: part.vars,
        });
    }
    if !part.is_sorted() {
        return Err(Error::UnsortedPartials);
    }
    let started = Instant::now();
    let ctx = Ctx::new(store, opts);
    let root = sat_rec(&ctx, init.root, part, true)?;
    let stats = ctx.stats("saturation", 1, init.vars, root, started)?;
    Ok((
        StateSet {
            root,
            vars: init.vars,
        },
        stats,
    ))
}

fn sat_children(ctx: &Ctx, v: NodeRef, part: &PartitionedSystem) -> Result<NodeRef> {
    if v.is_terminal() {
        return Ok(v);
    }
    let store = ctx.store;
    let level = store.node_level(v);
    let m = store.domain() as usize;
    let mut parts = Vec::with_capacity(m);
    for i in 0..m {
        parts.push(sat_rec(ctx, store.kids(v)[i], part, false)?);
    }
    Ok(store.mk_quasi(level, &parts))
}

fn sat_rec(ctx: &Ctx, v: NodeRef, part: &PartitionedSystem, top: bool) -> Result<NodeRef> {
    let store = ctx.store;
    if v.is_terminal() {
        return Ok(v);
    }
    if let Some(hit) = store.cache_get(CacheTag::Saturate, v, part.nonce) {
        return Ok(hit);
    }
    ctx.reach_calls.fetch_add(1, Relaxed);
    let level = store.node_level(v);
    let mut cur = sat_children(ctx, v, part)?;
    loop {
        if top {
            ctx.top_pass()?;
        }
        let before = cur;
        for entry in &part.entries {
            if entry.top_level != 2 * level {
                continue;
            }
            ctx.image_calls.fetch_add(1, Relaxed);
            let img = mdd::image_rec(store, cur, entry.extended);
            ctx.union_calls.fetch_add(1, Relaxed);
            let next = mdd::union_rec(store, cur, img);
            if next != cur {
                // Growth may expose unsaturated subdiagrams.
                cur = sat_children(ctx, next, part)?;
            }
        }
        if cur == before {
            break;
        }
    }
    store.cache_put(CacheTag::Saturate, v, part.nonce, cur);
    Ok(cur)
}

/// Runs one algorithm on a whole system: merges partials when the algorithm
/// needs a monolithic relation (merge time is part of the reported wall
/// time), builds the saturation partition when it does not, and stamps the
/// model name into the stats.
pub fn run(
    store: &Store,
    sys: &TransitionSystem,
    alg: Algorithm,
    opts: &RunOptions,
) -> Result<(StateSet, RunStats)> {
    let started = Instant::now();
    let n = sys.vars;
    let (set, mut stats) = match alg {
        Algorithm::Saturation => {
            let parts: Vec<Relation> = if !sys.partials.is_empty() {
                sys.partials.clone()
            } else {
                vec![sys
                    .monolithic
                    .clone()
                    .ok_or(Error::EmptyPartials)?]
            };
            let part = PartitionedSystem::new(store, &parts, n)?;
            saturate(store, &sys.init, &part, opts)?
        }
        _ => {
            let rel = match &sys.monolithic {
                Some(r) => r.clone(),
                None => {
                    if store.domain() == 2 && alg != Algorithm::ReachMdd {
                        bdd::merge_partials(store, &sys.partials, n)?
                    } else {
                        mdd::merge_partials(store, &sys.partials, n)?
                    }
                }
            };
            match alg {
                Algorithm::Bfs => bfs(store, &sys.init, &rel, opts)?,
                Algorithm::ReachBdd => reach_bdd(store, &sys.init, &rel, opts)?,
                Algorithm::ReachBddPar => reach_bdd_par(store, &sys.init, &rel, opts)?,
                Algorithm::ReachMdd => reach_mdd(store, &sys.init, &rel, opts)?,
                Algorithm::Saturation => unreachable!(),
            }
        }
    };
    stats.model = sys.name.clone();
    stats.wall_time_ms = started.elapsed().as_secs_f64() * 1000.0;
    stats.peak_node_count = store.num_nodes();
    Ok((set, stats))
}
