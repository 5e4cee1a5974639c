//! Binary diagram operations, specialized for domain size 2.
//!
//! These mirror the m-ary operations with unrolled two-way branching and
//! their own cache tags. On a binary store the results are node-for-node
//! identical to the m-ary path; the separate tags keep that a checkable
//! property instead of an accident of cache sharing.

use crate::error::{Error, Result};
use crate::sets::{Relation, StateSet};
use crate::store::{CacheTag, NodeRef, Store};

fn require_binary(store: &Store) -> Result<()> {
    if store.domain() != 2 {
        return Err(Error::BinaryOnly {
            domain: store.domain(),
        });
    }
    Ok(())
}

pub(crate) fn union_rec(store: &Store, a: NodeRef, b: NodeRef) -> NodeRef {
    if a == NodeRef::ZERO {
        return b;
    }
    if b == NodeRef::ZERO {
        return a;
    }
    if a == b {
        return a;
    }
    if a == NodeRef::ONE || b == NodeRef::ONE {
        debug_assert_eq!(a, b, "terminal ONE can only meet another bottom node");
        return NodeRef::ONE;
    }
    let (x, y) = if a <= b { (a, b) } else { (b, a) };
    if let Some(hit) = store.cache_get(CacheTag::Union, x, y) {
        return hit;
    }
    let level = store.node_level(x);
    debug_assert_eq!(level, store.node_level(y));
    let children = [
        union_rec(store, store.kids(x)[0], store.kids(y)[0]),
        union_rec(store, store.kids(x)[1], store.kids(y)[1]),
    ];
    let out = store.mk_quasi(level, &children);
    store.cache_put(CacheTag::Union, x, y, out);
    out
}

pub(crate) fn intersect_rec(store: &Store, a: NodeRef, b: NodeRef) -> NodeRef {
    if a == NodeRef::ZERO || b == NodeRef::ZERO {
        return NodeRef::ZERO;
    }
    if a == b {
        return a;
    }
    if a == NodeRef::ONE {
        return b;
    }
    if b == NodeRef::ONE {
        return a;
    }
    let (x, y) = if a <= b { (a, b) } else { (b, a) };
    if let Some(hit) = store.cache_get(CacheTag::Intersect, x, y) {
        return hit;
    }
    let level = store.node_level(x);
    debug_assert_eq!(level, store.node_level(y));
    let children = [
        intersect_rec(store, store.kids(x)[0], store.kids(y)[0]),
        intersect_rec(store, store.kids(x)[1], store.kids(y)[1]),
    ];
    let out = store.mk_quasi(level, &children);
    store.cache_put(CacheTag::Intersect, x, y, out);
    out
}

/// One-step successors under a full-support binary relation, with the
/// accumulating unions fused in.
pub(crate) fn image_rec(store: &Store, s: NodeRef, r: NodeRef) -> NodeRef {
    if s == NodeRef::ZERO || r == NodeRef::ZERO {
        return NodeRef::ZERO;
    }
    if s == NodeRef::ONE || r == NodeRef::ONE {
        debug_assert!(s == NodeRef::ONE && r == NodeRef::ONE);
        return NodeRef::ONE;
    }
    if let Some(hit) = store.cache_get(CacheTag::Image, s, r) {
        return hit;
    }
    let level = store.node_level(s);
    debug_assert_eq!(store.node_level(r), 2 * level);
    let mut t0 = NodeRef::ZERO;
    let mut t1 = NodeRef::ZERO;
    for i in 0..2 {
        let si = store.kids(s)[i];
        if si == NodeRef::ZERO {
            continue;
        }
        let ri = store.kids(r)[i];
        if ri == NodeRef::ZERO {
            continue;
        }
        debug_assert!(!ri.is_terminal());
        let ri0 = store.kids(ri)[0];
        if ri0 != NodeRef::ZERO {
            t0 = union_rec(store, t0, image_rec(store, si, ri0));
        }
        let ri1 = store.kids(ri)[1];
        if ri1 != NodeRef::ZERO {
            t1 = union_rec(store, t1, image_rec(store, si, ri1));
        }
    }
    let out = store.mk_quasi(level, &[t0, t1]);
    store.cache_put(CacheTag::Image, s, r, out);
    out
}

/// Union of two binary state sets.
pub fn union(store: &Store, a: &StateSet, b: &StateSet) -> Result<StateSet> {
    require_binary(store)?;
    check_set_pair(store, a, b)?;
    Ok(StateSet {
        root: union_rec(store, a.root, b.root),
        vars: a.vars,
    })
}

/// Intersection of two binary state sets.
pub fn intersect(store: &Store, a: &StateSet, b: &StateSet) -> Result<StateSet> {
    require_binary(store)?;
    check_set_pair(store, a, b)?;
    Ok(StateSet {
        root: intersect_rec(store, a.root, b.root),
        vars: a.vars,
    })
}

/// One-step successors of `s` under a full-support binary relation.
pub fn image(store: &Store, s: &StateSet, r: &Relation) -> Result<StateSet> {
    require_binary(store)?;
    store.check_quasi_root(s.root, s.vars)?;
    crate::sets::validate_support(&r.support, s.vars)?;
    store.check_quasi_root(r.root, r.levels())?;
    if !r.is_full_for(s.vars) {
        return Err(Error::Model(
            "image needs a full-support relation; extend or merge partials first".into(),
        ));
    }
    Ok(StateSet {
        root: image_rec(store, s.root, r.root),
        vars: s.vars,
    })
}

/// Extends a binary partial relation to full support over n variables.
pub fn extend_relation(store: &Store, r: &Relation, n: u32) -> Result<Relation> {
    require_binary(store)?;
    crate::sets::validate_support(&r.support, n)?;
    store.check_quasi_root(r.root, r.levels())?;
    Ok(Relation {
        root: crate::mdd::extend_root(store, r, 1, n),
        support: (1..=n).collect(),
    })
}

/// Union of the extensions of all binary partials.
pub fn merge_partials(store: &Store, parts: &[Relation], n: u32) -> Result<Relation> {
    require_binary(store)?;
    if parts.is_empty() {
        return Err(Error::EmptyPartials);
    }
    let mut root = NodeRef::ZERO;
    for part in parts {
        let ext = extend_relation(store, part, n)?;
        root = union_rec(store, root, ext.root);
    }
    Ok(Relation {
        root,
        support: (1..=n).collect(),
    })
}

fn check_set_pair(store: &Store, a: &StateSet, b: &StateSet) -> Result<()> {
    store.check_quasi_root(a.root, a.vars)?;
    store.check_quasi_root(b.root, b.vars)?;
    if a.vars != b.vars {
        return Err(Error::Dimension {
            left: a.vars,
            right: b.vars,
        });
    }
    Ok(())
}
