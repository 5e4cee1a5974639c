use std::collections::{HashMap, HashSet};
use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::OnceLock;

use dashmap::DashMap;
use num_bigint::BigUint;
use parking_lot::Mutex;

use crate::error::{Error, Result};

/// Handle to a stored diagram node. Equality of handles is equality of the
/// represented functions (hash consing), within the issuing store.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct NodeRef(u32);

impl NodeRef {
    /// The empty set / constant false. May appear as a child at any level and
    /// then denotes the empty set over all remaining levels.
    pub const ZERO: NodeRef = NodeRef(0);
    /// Constant true. In a quasi diagram over L levels it appears only below
    /// the last level.
    pub const ONE: NodeRef = NodeRef(1);

    pub fn is_terminal(self) -> bool {
        self.0 < 2
    }

    /// Raw handle value, stable for the lifetime of the store.
    pub fn raw(self) -> u32 {
        self.0
    }

    /// Reconstructs a handle from its raw value. Only meaningful for values
    /// previously obtained from `raw` on the same store; operations validate
    /// handles and reject unknown ones.
    pub fn from_raw(raw: u32) -> NodeRef {
        NodeRef(raw)
    }

    fn index(self) -> usize {
        debug_assert!(!self.is_terminal());
        (self.0 - 2) as usize
    }
}

/// Node reduction discipline applied by `make_node`.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Reduction {
    /// Redundant nodes (all children equal) are kept; no level is skipped on
    /// any path to ONE. This is the working representation; all set and
    /// fixpoint operations produce it.
    Quasi,
    /// Redundant nodes collapse to their child; paths may skip levels.
    /// Exists for export and inspection.
    Full,
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
struct Node {
    level: u32,
    children: Box<[NodeRef]>,
}

/// Operation tag for cache keys. BDD and MDD variants are distinct so the two
/// code paths never share memo entries.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
#[repr(u8)]
pub enum CacheTag {
    Union,
    Intersect,
    Image,
    ReachBdd,
    ReachBddPar,
    ReachBddPerm,
    MddUnion,
    MddIntersect,
    MddImage,
    ReachMdd,
    Saturate,
}

#[derive(Clone, Copy)]
struct CacheEntry {
    tag: CacheTag,
    a: u32,
    b: u32,
    out: u32,
}

/// Fixed-capacity lossy operation cache: overwrite on collision, full-key
/// compare on lookup. Correctness never depends on retention.
struct OpCache {
    slots: Box<[Mutex<Option<CacheEntry>>]>,
    mask: u64,
}

impl OpCache {
    fn new(bits: u32) -> OpCache {
        let cap = 1usize << bits;
        OpCache {
            slots: (0..cap).map(|_| Mutex::new(None)).collect(),
            mask: (cap - 1) as u64,
        }
    }

    fn slot(&self, tag: CacheTag, a: u32, b: u32) -> usize {
        let key = (a as u64) ^ ((b as u64) << 32) ^ ((tag as u64).wrapping_mul(0x9e3779b97f4a7c15));
        (splitmix64(key) & self.mask) as usize
    }

    fn get(&self, tag: CacheTag, a: u32, b: u32) -> Option<u32> {
        let guard = self.slots[self.slot(tag, a, b)].lock();
        match *guard {
            Some(e) if e.tag == tag && e.a == a && e.b == b => Some(e.out),
            _ => None,
        }
    }

    fn put(&self, tag: CacheTag, a: u32, b: u32, out: u32) {
        *self.slots[self.slot(tag, a, b)].lock() = Some(CacheEntry { tag, a, b, out });
    }

    fn clear(&self) {
        for slot in self.slots.iter() {
            *slot.lock() = None;
        }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

const CHUNK_BITS: u32 = 12;
const CHUNK_SIZE: usize = 1 << CHUNK_BITS;
const MAX_CHUNKS: usize = 1 << 14;

/// Append-only node arena. Slots are published through OnceLock so readers
/// never take a lock; nodes are immutable once stored and never move.
type Chunk = Box<[OnceLock<Node>]>;

struct Arena {
    chunks: Box<[OnceLock<Chunk>]>,
    len: AtomicU32,
}

impl Arena {
    fn new() -> Arena {
        Arena {
            chunks: (0..MAX_CHUNKS).map(|_| OnceLock::new()).collect(),
            len: AtomicU32::new(0),
        }
    }

    fn push(&self, node: Node) -> u32 {
        let idx = self.len.fetch_add(1, Ordering::Relaxed);
        assert!(
            (idx as usize) < MAX_CHUNKS * CHUNK_SIZE,
            "node store is full ({} nodes)",
            idx
        );
        let chunk = self.chunks[idx as usize >> CHUNK_BITS]
            .get_or_init(|| (0..CHUNK_SIZE).map(|_| OnceLock::new()).collect());
        chunk[idx as usize & (CHUNK_SIZE - 1)]
            .set(node)
            .expect("arena slot written twice");
        idx
    }

    fn get(&self, idx: usize) -> &Node {
        self.chunks[idx >> CHUNK_BITS]
            .get()
            .and_then(|chunk| chunk[idx & (CHUNK_SIZE - 1)].get())
            .expect("dangling node handle")
    }

    fn len(&self) -> u32 {
        self.len.load(Ordering::Relaxed)
    }
}

/// Store construction parameters.
#[derive(Clone, Copy, Debug)]
pub struct StoreConfig {
    vars: u32,
    domain: u32,
    reduction: Reduction,
    cache_bits: Option<u32>,
    max_domain: u32,
}

impl StoreConfig {
    /// `vars` state variables over domain `{0..domain-1}`. Diagrams may use up
    /// to `2*vars` levels (interleaved relations).
    pub fn new(vars: u32, domain: u32) -> StoreConfig {
        StoreConfig {
            vars,
            domain,
            reduction: Reduction::Quasi,
            cache_bits: None,
            max_domain: 16,
        }
    }

    pub fn reduction(mut self, reduction: Reduction) -> StoreConfig {
        self.reduction = reduction;
        self
    }

    /// Operation-cache capacity as a power of two. Defaults to the
    /// DDREACH_CACHE_BITS environment variable, or 20 when unset.
    pub fn cache_bits(mut self, bits: u32) -> StoreConfig {
        self.cache_bits = Some(bits);
        self
    }

    pub fn max_domain(mut self, max: u32) -> StoreConfig {
        self.max_domain = max;
        self
    }
}

/// Thread-safe hash-consed node store with an operation cache.
///
/// All mutation is monotone (nodes are only added, never removed or changed),
/// so every query is safe to run concurrently with construction; racing
/// inserts of the same node converge to one handle.
pub struct Store {
    vars: u32,
    domain: u32,
    reduction: Reduction,
    arena: Arena,
    unique: DashMap<Node, NodeRef>,
    cache: OpCache,
    nonce: AtomicU32,
}

impl Store {
    pub fn new(config: StoreConfig) -> Result<Store> {
        if config.vars == 0 || config.vars > 1 << 20 {
            return Err(Error::Config(format!(
                "variable count {} outside 1..=2^20",
                config.vars
            )));
        }
        if config.max_domain > 256 {
            return Err(Error::Config(format!(
                "max domain {} exceeds 256",
                config.max_domain
            )));
        }
        if config.domain < 2 || config.domain > config.max_domain {
            return Err(Error::Config(format!(
                "domain {} outside 2..={}",
                config.domain, config.max_domain
            )));
        }
        let cache_bits = match config.cache_bits {
            Some(bits) => bits,
            None => match std::env::var("DDREACH_CACHE_BITS") {
                Ok(text) => text.trim().parse::<u32>().map_err(|_| {
                    Error::Config(format!("DDREACH_CACHE_BITS is not an integer: {:?}", text))
                })?,
                Err(_) => 20,
            },
        };
        if cache_bits > 30 {
            return Err(Error::Config(format!(
                "cache bits {} exceeds 30",
                cache_bits
            )));
        }
        Ok(Store {
            vars: config.vars,
            domain: config.domain,
            reduction: config.reduction,
            arena: Arena::new(),
            unique: DashMap::new(),
            cache: OpCache::new(cache_bits),
            nonce: AtomicU32::new(1),
        })
    }

    pub fn vars(&self) -> u32 {
        self.vars
    }

    pub fn domain(&self) -> u32 {
        self.domain
    }

    pub fn reduction(&self) -> Reduction {
        self.reduction
    }

    /// Total stored nodes including both terminals.
    pub fn num_nodes(&self) -> u64 {
        self.arena.len() as u64 + 2
    }

    /// True if the handle was issued by this store.
    pub fn is_valid(&self, v: NodeRef) -> bool {
        v.0 < self.arena.len() + 2
    }

    fn check_handle(&self, v: NodeRef) -> Result<()> {
        if self.is_valid(v) {
            Ok(())
        } else {
            Err(Error::InvalidHandle(v.0))
        }
    }

    pub(crate) fn node_level(&self, v: NodeRef) -> u32 {
        self.arena.get(v.index()).level
    }

    pub(crate) fn kids(&self, v: NodeRef) -> &[NodeRef] {
        &self.arena.get(v.index()).children
    }

    /// Builds (or finds) a node under the store's reduction discipline.
    ///
    /// Terminals are accepted as children at any level and act as wildcards
    /// for the remaining levels; non-terminal children must sit exactly one
    /// level below in quasi mode, strictly below in full mode. A node whose
    /// children are all ZERO denotes the empty set and collapses to ZERO in
    /// both modes, keeping the empty set canonical.
    pub fn make_node(&self, level: u32, children: &[NodeRef]) -> Result<NodeRef> {
        if children.len() != self.domain as usize {
            return Err(Error::Arity {
                expected: self.domain as usize,
                got: children.len(),
            });
        }
        if level >= 2 * self.vars {
            return Err(Error::LevelOutOfRange {
                level,
                max: 2 * self.vars,
            });
        }
        for &child in children {
            self.check_handle(child)?;
            if child.is_terminal() {
                continue;
            }
            let child_level = self.node_level(child);
            let ok = match self.reduction {
                Reduction::Quasi => child_level == level + 1,
                Reduction::Full => child_level > level,
            };
            if !ok {
                return Err(Error::ChildLevel { level, child_level });
            }
        }
        Ok(match self.reduction {
            Reduction::Quasi => self.mk_quasi(level, children),
            Reduction::Full => self.mk_full(level, children),
        })
    }

    /// Quasi constructor for internal operations: keeps redundant nodes,
    /// collapses the all-ZERO child vector to ZERO.
    pub(crate) fn mk_quasi(&self, level: u32, children: &[NodeRef]) -> NodeRef {
        debug_assert_eq!(children.len(), self.domain as usize);
        debug_assert!(children
            .iter()
            .all(|c| c.is_terminal() || self.node_level(*c) == level + 1));
        if children.iter().all(|&c| c == NodeRef::ZERO) {
            return NodeRef::ZERO;
        }
        self.intern(level, children)
    }

    fn mk_full(&self, level: u32, children: &[NodeRef]) -> NodeRef {
        let first = children[0];
        if children.iter().all(|&c| c == first) {
            return first;
        }
        self.intern(level, children)
    }

    fn intern(&self, level: u32, children: &[NodeRef]) -> NodeRef {
        let key = Node {
            level,
            children: children.into(),
        };
        if let Some(found) = self.unique.get(&key) {
            return *found;
        }
        // Entry lock serializes racers on the same key; exactly one allocates.
        *self.unique.entry(key).or_insert_with(|| {
            NodeRef(
                self.arena.push(Node {
                    level,
                    children: children.into(),
                }) + 2,
            )
        })
    }

    /// Level of a non-terminal node; terminals carry no level.
    pub fn level(&self, v: NodeRef) -> Option<u32> {
        if v.is_terminal() || !self.is_valid(v) {
            None
        } else {
            Some(self.node_level(v))
        }
    }

    /// The a-th child of v, i.e. the subfunction of v under `x_level = a`.
    pub fn child(&self, v: NodeRef, a: u32) -> Result<NodeRef> {
        self.check_handle(v)?;
        if v.is_terminal() {
            return Err(Error::Terminal);
        }
        if a >= self.domain {
            return Err(Error::DomainValue {
                value: a,
                domain: self.domain,
            });
        }
        Ok(self.kids(v)[a as usize])
    }

    /// Evaluates the diagram on an assignment indexed by level. Entries past
    /// the deepest level actually visited are ignored.
    pub fn eval(&self, v: NodeRef, assignment: &[u8]) -> Result<bool> {
        self.check_handle(v)?;
        let mut cur = v;
        loop {
            if cur == NodeRef::ZERO {
                return Ok(false);
            }
            if cur == NodeRef::ONE {
                return Ok(true);
            }
            let level = self.node_level(cur) as usize;
            if level >= assignment.len() {
                return Err(Error::LevelOutOfRange {
                    level: level as u32,
                    max: assignment.len() as u32,
                });
            }
            let value = assignment[level] as u32;
            if value >= self.domain {
                return Err(Error::DomainValue {
                    value,
                    domain: self.domain,
                });
            }
            cur = self.kids(cur)[value as usize];
        }
    }

    /// Number of accepted assignments in D^levels, exactly.
    pub fn sat_count(&self, v: NodeRef, levels: u32) -> Result<BigUint> {
        self.check_handle(v)?;
        let m = BigUint::from(self.domain);
        if v == NodeRef::ZERO {
            return Ok(BigUint::from(0u32));
        }
        if v == NodeRef::ONE {
            return Ok(m.pow(levels));
        }
        let top = self.node_level(v);
        if top >= levels {
            return Err(Error::LevelOutOfRange { level: top, max: levels });
        }
        let mut memo = HashMap::new();
        let below = self.count_below(v, levels, &mut memo)?;
        // Levels above a (full-reduced) root are unconstrained.
        Ok(m.pow(top) * below)
    }

    fn count_below(
        &self,
        v: NodeRef,
        levels: u32,
        memo: &mut HashMap<NodeRef, BigUint>,
    ) -> Result<BigUint> {
        if let Some(hit) = memo.get(&v) {
            return Ok(hit.clone());
        }
        let m = BigUint::from(self.domain);
        let level = self.node_level(v);
        let mut total = BigUint::from(0u32);
        for &child in self.kids(v) {
            total += match child {
                NodeRef::ZERO => continue,
                NodeRef::ONE => m.pow(levels - level - 1),
                _ => {
                    let child_level = self.node_level(child);
                    if child_level >= levels {
                        return Err(Error::LevelOutOfRange {
                            level: child_level,
                            max: levels,
                        });
                    }
                    m.pow(child_level - level - 1) * self.count_below(child, levels, memo)?
                }
            };
        }
        memo.insert(v, total.clone());
        Ok(total)
    }

    /// Number of distinct nodes reachable from v, terminals included.
    pub fn node_count(&self, v: NodeRef) -> Result<u64> {
        self.check_handle(v)?;
        let mut seen = HashSet::new();
        let mut stack = vec![v];
        while let Some(cur) = stack.pop() {
            if !seen.insert(cur) {
                continue;
            }
            if !cur.is_terminal() {
                stack.extend_from_slice(self.kids(cur));
            }
        }
        Ok(seen.len() as u64)
    }

    pub fn cache_get(&self, tag: CacheTag, a: NodeRef, b: NodeRef) -> Option<NodeRef> {
        self.cache.get(tag, a.0, b.0).map(NodeRef)
    }

    pub fn cache_put(&self, tag: CacheTag, a: NodeRef, b: NodeRef, out: NodeRef) {
        self.cache.put(tag, a.0, b.0, out.0);
    }

    pub fn cache_clear(&self) {
        self.cache.clear();
    }

    /// Issues a fresh value for namespacing cache keys (used to keep memo
    /// entries of distinct partitioned systems apart).
    pub(crate) fn fresh_nonce(&self) -> u32 {
        self.nonce.fetch_add(1, Ordering::Relaxed)
    }

    /// Converts to the fully reduced form: redundant nodes collapse, levels
    /// may be skipped. Same function, other canonical discipline.
    pub fn to_full_reduced(&self, v: NodeRef) -> Result<NodeRef> {
        self.check_handle(v)?;
        let mut memo = HashMap::new();
        Ok(self.full_rec(v, &mut memo))
    }

    fn full_rec(&self, v: NodeRef, memo: &mut HashMap<NodeRef, NodeRef>) -> NodeRef {
        if v.is_terminal() {
            return v;
        }
        if let Some(&hit) = memo.get(&v) {
            return hit;
        }
        let level = self.node_level(v);
        let children: Vec<NodeRef> = self
            .kids(v)
            .iter()
            .map(|&c| self.full_rec(c, memo))
            .collect();
        let out = self.mk_full(level, &children);
        memo.insert(v, out);
        out
    }

    /// Converts to the quasi form over `levels` levels: every skipped level is
    /// expanded into a redundant node.
    pub fn to_quasi(&self, v: NodeRef, levels: u32) -> Result<NodeRef> {
        self.check_handle(v)?;
        let mut memo = HashMap::new();
        self.quasi_rec(v, 0, levels, &mut memo)
    }

    fn quasi_rec(
        &self,
        v: NodeRef,
        at: u32,
        levels: u32,
        memo: &mut HashMap<(NodeRef, u32), NodeRef>,
    ) -> Result<NodeRef> {
        if v == NodeRef::ZERO {
            return Ok(NodeRef::ZERO);
        }
        if at == levels {
            return if v == NodeRef::ONE {
                Ok(NodeRef::ONE)
            } else {
                Err(Error::ChildLevel {
                    level: levels,
                    child_level: self.node_level(v),
                })
            };
        }
        if let Some(&hit) = memo.get(&(v, at)) {
            return Ok(hit);
        }
        let out = if !v.is_terminal() && self.node_level(v) == at {
            let mapped: Vec<NodeRef> = self
                .kids(v)
                .iter()
                .map(|&c| self.quasi_rec(c, at + 1, levels, memo))
                .collect::<Result<_>>()?;
            self.mk_quasi(at, &mapped)
        } else {
            if !v.is_terminal() && self.node_level(v) < at {
                return Err(Error::ChildLevel {
                    level: at,
                    child_level: self.node_level(v),
                });
            }
            let below = self.quasi_rec(v, at + 1, levels, memo)?;
            self.mk_quasi(at, &vec![below; self.domain as usize])
        };
        memo.insert((v, at), out);
        Ok(out)
    }

    /// Checks the quasi discipline: starting at level 0, no path to ONE skips
    /// a level and ONE occurs only at depth `levels`. ZERO may occur anywhere.
    pub fn is_quasi(&self, v: NodeRef, levels: u32) -> Result<bool> {
        self.check_handle(v)?;
        let mut verified = HashSet::new();
        Ok(self.quasi_check(v, 0, levels, &mut verified))
    }

    /// Validates the handle; the quasi shape itself is only debug-asserted
    /// since every constructor in this crate preserves it.
    pub(crate) fn check_quasi_root(&self, v: NodeRef, levels: u32) -> Result<()> {
        self.check_handle(v)?;
        debug_assert!(self.is_quasi(v, levels).unwrap());
        Ok(())
    }

    fn quasi_check(&self, v: NodeRef, at: u32, levels: u32, verified: &mut HashSet<NodeRef>) -> bool {
        match v {
            NodeRef::ZERO => true,
            NodeRef::ONE => at == levels,
            _ => {
                if self.node_level(v) != at {
                    return false;
                }
                if verified.contains(&v) {
                    return true;
                }
                let ok = self
                    .kids(v)
                    .iter()
                    .all(|&c| self.quasi_check(c, at + 1, levels, verified));
                if ok {
                    verified.insert(v);
                }
                ok
            }
        }
    }

    /// Writes the text dump: header `dd <levels> <m>`, one line per internal
    /// node `<id> <level> <children...>` in DFS preorder (ids from 2,
    /// terminals are 0 and 1), then `root <id>`.
    pub fn write_dd<W: std::io::Write>(&self, root: NodeRef, levels: u32, w: &mut W) -> Result<()> {
        self.check_handle(root)?;
        let mut ids = HashMap::new();
        let mut order = Vec::new();
        self.assign_ids(root, &mut ids, &mut order);
        writeln!(w, "dd {} {}", levels, self.domain)?;
        for &v in &order {
            write!(w, "{} {}", ids[&v], self.node_level(v))?;
            for &child in self.kids(v) {
                let id = if child.is_terminal() {
                    child.0 as usize
                } else {
                    ids[&child]
                };
                write!(w, " {}", id)?;
            }
            writeln!(w)?;
        }
        let root_id = if root.is_terminal() {
            root.0 as usize
        } else {
            ids[&root]
        };
        writeln!(w, "root {}", root_id)?;
        Ok(())
    }

    fn assign_ids(&self, v: NodeRef, ids: &mut HashMap<NodeRef, usize>, order: &mut Vec<NodeRef>) {
        if v.is_terminal() || ids.contains_key(&v) {
            return;
        }
        ids.insert(v, ids.len() + 2);
        order.push(v);
        for &child in self.kids(v) {
            self.assign_ids(child, ids, order);
        }
    }
}
