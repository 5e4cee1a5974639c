//! Multi-valued diagram operations for any domain size m >= 2.
//!
//! Every operation hits the shared lossy cache with its own tag, so a binary
//! store can run the m-ary and binary code paths side by side and the cache
//! never conflates their entries. `image` takes the relation node exactly two
//! levels deeper than the set node: a set node at level l pairs with a
//! relation node at level 2l, source children at 2l and target children at
//! 2l + 1.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::sets::{Relation, StateSet};
use crate::store::{CacheTag, NodeRef, Store};

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
    if let Some(hit) = store.cache_get(CacheTag::MddUnion, x, y) {
        return hit;
    }
    let level = store.node_level(x);
    debug_assert_eq!(level, store.node_level(y));
    let m = store.domain() as usize;
    let mut children = Vec::with_capacity(m);
    for i in 0..m {
        children.push(union_rec(store, store.kids(x)[i], store.kids(y)[i]));
    }
    let out = store.mk_quasi(level, &children);
    store.cache_put(CacheTag::MddUnion, x, y, out);
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
    if let Some(hit) = store.cache_get(CacheTag::MddIntersect, x, y) {
        return hit;
    }
    let level = store.node_level(x);
    debug_assert_eq!(level, store.node_level(y));
    let m = store.domain() as usize;
    let mut children = Vec::with_capacity(m);
    for i in 0..m {
        children.push(intersect_rec(store, store.kids(x)[i], store.kids(y)[i]));
    }
    let out = store.mk_quasi(level, &children);
    store.cache_put(CacheTag::MddIntersect, x, y, out);
    out
}

/// One-step successors, fused with the union that accumulates target
/// children, so no intermediate "paired" diagram is ever built.
pub(crate) fn image_rec(store: &Store, s: NodeRef, r: NodeRef) -> NodeRef {
    if s == NodeRef::ZERO || r == NodeRef::ZERO {
        return NodeRef::ZERO;
    }
    if s == NodeRef::ONE || r == NodeRef::ONE {
        debug_assert!(s == NodeRef::ONE && r == NodeRef::ONE);
        return NodeRef::ONE;
    }
    if let Some(hit) = store.cache_get(CacheTag::MddImage, s, r) {
        return hit;
    }
    let level = store.node_level(s);
    debug_assert_eq!(store.node_level(r), 2 * level);
    let m = store.domain() as usize;
    let mut targets = vec![NodeRef::ZERO; m];
    for i in 0..m {
        let si = store.kids(s)[i];
        if si == NodeRef::ZERO {
            continue;
        }
        let ri = store.kids(r)[i];
        if ri == NodeRef::ZERO {
            continue;
        }
        debug_assert!(!ri.is_terminal());
        for (j, &rij) in store.kids(ri).iter().enumerate() {
            if rij == NodeRef::ZERO {
                continue;
            }
            let stepped = image_rec(store, si, rij);
            targets[j] = union_rec(store, targets[j], stepped);
        }
    }
    let out = store.mk_quasi(level, &targets);
    store.cache_put(CacheTag::MddImage, s, r, out);
    out
}

/// Rebuilds a support-local relation over the interleaved levels of variables
/// `from_var..=n`, weaving an identity pair (same source and target value)
/// into every non-support variable in that range. `from_var` must not exceed
/// the first support variable. The result root sits at level
/// `2 * (from_var - 1)`.
pub(crate) fn extend_root(store: &Store, rel: &Relation, from_var: u32, n: u32) -> NodeRef {
    debug_assert!(from_var >= 1 && from_var <= rel.support[0]);
    let mut memo = HashMap::new();
    extend_rec(store, rel.root, from_var, 0, &rel.support, n, &mut memo)
}

fn extend_rec(
    store: &Store,
    v: NodeRef,
    var: u32,
    pos: usize,
    support: &[u32],
    n: u32,
    memo: &mut HashMap<(NodeRef, u32), NodeRef>,
) -> NodeRef {
    if v == NodeRef::ZERO {
        return NodeRef::ZERO;
    }
    if var > n {
        debug_assert_eq!(pos, support.len());
        debug_assert_eq!(v, NodeRef::ONE);
        return NodeRef::ONE;
    }
    if let Some(&hit) = memo.get(&(v, var)) {
        return hit;
    }
    let m = store.domain() as usize;
    let out = if pos < support.len() && support[pos] == var {
        // Consume one interleaved pair of the support-local diagram.
        debug_assert!(!v.is_terminal());
        let mut src = Vec::with_capacity(m);
        for i in 0..m {
            let si = store.kids(v)[i];
            if si == NodeRef::ZERO {
                src.push(NodeRef::ZERO);
                continue;
            }
            debug_assert!(!si.is_terminal());
            let mut tgt = Vec::with_capacity(m);
            for j in 0..m {
                let sij = store.kids(si)[j];
                tgt.push(extend_rec(store, sij, var + 1, pos + 1, support, n, memo));
            }
            src.push(store.mk_quasi(2 * var - 1, &tgt));
        }
        store.mk_quasi(2 * var - 2, &src)
    } else {
        // Identity pair for a variable outside the support.
        let below = extend_rec(store, v, var + 1, pos, support, n, memo);
        if below == NodeRef::ZERO {
            NodeRef::ZERO
        } else {
            let mut src = Vec::with_capacity(m);
            for i in 0..m {
                let mut tgt = vec![NodeRef::ZERO; m];
                tgt[i] = below;
                src.push(store.mk_quasi(2 * var - 1, &tgt));
            }
            store.mk_quasi(2 * var - 2, &src)
        }
    };
    memo.insert((v, var), out);
    out
}

fn check_set(store: &Store, s: &StateSet) -> Result<()> {
    store.check_quasi_root(s.root, s.vars)
}

fn check_set_pair(store: &Store, a: &StateSet, b: &StateSet) -> Result<()> {
    check_set(store, a)?;
    check_set(store, b)?;
    if a.vars != b.vars {
        return Err(Error::Dimension {
            left: a.vars,
            right: b.vars,
        });
    }
    Ok(())
}

fn check_relation(store: &Store, r: &Relation, n: u32) -> Result<()> {
    crate::sets::validate_support(&r.support, n)?;
    store.check_quasi_root(r.root, r.levels())
}

/// Union of two state sets over the same variables.
pub fn union(store: &Store, a: &StateSet, b: &StateSet) -> Result<StateSet> {
    check_set_pair(store, a, b)?;
    Ok(StateSet {
        root: union_rec(store, a.root, b.root),
        vars: a.vars,
    })
}

/// Intersection of two state sets over the same variables.
pub fn intersect(store: &Store, a: &StateSet, b: &StateSet) -> Result<StateSet> {
    check_set_pair(store, a, b)?;
    Ok(StateSet {
        root: intersect_rec(store, a.root, b.root),
        vars: a.vars,
    })
}

/// One-step successors of `s` under a full-support relation. Partial
/// relations must be extended (or merged) first so the level pairing holds.
pub fn image(store: &Store, s: &StateSet, r: &Relation) -> Result<StateSet> {
    check_set(store, s)?;
    check_relation(store, r, s.vars)?;
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

/// Extends a partial relation to full support over n variables by
/// constraining every variable outside the support to keep its value.
pub fn extend_relation(store: &Store, r: &Relation, n: u32) -> Result<Relation> {
    check_relation(store, r, n)?;
    Ok(Relation {
        root: extend_root(store, r, 1, n),
        support: (1..=n).collect(),
    })
}

/// Union of the extensions of all partials: the monolithic relation.
pub fn merge_partials(store: &Store, parts: &[Relation], n: u32) -> Result<Relation> {
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::StoreConfig;
    use num_bigint::BigUint;

    fn store(vars: u32, m: u32) -> Store {
        Store::new(StoreConfig::new(vars, m).cache_bits(12)).unwrap()
    }

    /// Two tuple sets over domain size 8: {(0,1),(0,4),(2,1),(2,4)} as cubes
    /// sharing their child node, plus singletons. Union has 10 tuples and the
    /// children under first-value 0 and 2 stay the same node.
    #[test]
    fn octal_union_shares_children() {
        let s = store(2, 8);
        let a = StateSet::from_cubes(
            &s,
            2,
            &[
                vec![Some(0), Some(1)],
                vec![Some(0), Some(4)],
                vec![Some(2), Some(1)],
                vec![Some(2), Some(4)],
            ],
        )
        .unwrap();
        let b = StateSet::from_states(
            &s,
            2,
            &[vec![0, 3], vec![1, 2], vec![2, 6], vec![4, 1], vec![4, 5], vec![6, 2]],
        )
        .unwrap();
        assert_eq!(s.child(a.root, 0).unwrap(), s.child(a.root, 2).unwrap());
        let u = union(&s, &a, &b).unwrap();
        assert_eq!(u.count(&s).unwrap(), BigUint::from(10u32));
        assert_eq!(
            u.enumerate(&s).unwrap(),
            vec![
                vec![0, 1],
                vec![0, 3],
                vec![0, 4],
                vec![1, 2],
                vec![2, 1],
                vec![2, 4],
                vec![2, 6],
                vec![4, 1],
                vec![4, 5],
                vec![6, 2],
            ]
        );
        let w = union(&s, &b, &a).unwrap();
        assert_eq!(w.root, u.root);
    }

    #[test]
    fn intersect_agrees_with_enumeration() {
        let s = store(3, 3);
        let a = StateSet::from_cubes(&s, 3, &[vec![Some(1), None, None]]).unwrap();
        let b = StateSet::from_cubes(&s, 3, &[vec![None, Some(2), None], vec![None, None, Some(0)]])
            .unwrap();
        let i = intersect(&s, &a, &b).unwrap();
        let mut expect = Vec::new();
        for x in a.enumerate(&s).unwrap() {
            if b.contains(&s, &x).unwrap() {
                expect.push(x);
            }
        }
        assert_eq!(i.enumerate(&s).unwrap(), expect);
        let empty = intersect(
            &s,
            &StateSet::from_states(&s, 3, &[vec![0, 0, 0]]).unwrap(),
            &StateSet::from_states(&s, 3, &[vec![2, 2, 2]]).unwrap(),
        )
        .unwrap();
        assert!(empty.is_empty());
    }

    #[test]
    fn image_steps_one_transition() {
        let s = store(2, 3);
        // Increment variable 1 mod 3, leave variable 2 alone.
        let rel = Relation::from_rows(
            &s,
            2,
            vec![1],
            &[
                vec![(Some(0), Some(1))],
                vec![(Some(1), Some(2))],
                vec![(Some(2), Some(0))],
            ],
        )
        .unwrap();
        let full = extend_relation(&s, &rel, 2).unwrap();
        assert!(full.is_full_for(2));
        let from = StateSet::from_states(&s, 2, &[vec![0, 2], vec![2, 1]]).unwrap();
        let to = image(&s, &from, &full).unwrap();
        assert_eq!(to.enumerate(&s).unwrap(), vec![vec![0, 1], vec![1, 2]]);
        let partial_err = image(&s, &from, &rel);
        assert!(matches!(partial_err, Err(Error::Model(_))));
    }

    #[test]
    fn extend_multiplies_by_skipped_domains() {
        let s = store(3, 2);
        let rel = Relation::from_rows(&s, 3, vec![2], &[vec![(Some(0), Some(1))]]).unwrap();
        assert_eq!(rel.count_pairs(&s).unwrap(), BigUint::from(1u32));
        let full = extend_relation(&s, &rel, 3).unwrap();
        // One pair over the support, times 2^(3-1) identity assignments.
        assert_eq!(full.count_pairs(&s).unwrap(), BigUint::from(4u32));
        let pairs = full.enumerate_pairs(&s).unwrap();
        assert_eq!(
            pairs,
            vec![
                (vec![0, 0, 0], vec![0, 1, 0]),
                (vec![0, 0, 1], vec![0, 1, 1]),
                (vec![1, 0, 0], vec![1, 1, 0]),
                (vec![1, 0, 1], vec![1, 1, 1]),
            ]
        );
    }

    #[test]
    fn extend_of_full_support_is_identity_on_roots() {
        let s = store(2, 2);
        let rel = Relation::from_rows(
            &s,
            2,
            vec![1, 2],
            &[vec![(Some(0), Some(1)), (None, Some(0))]],
        )
        .unwrap();
        let again = extend_relation(&s, &rel, 2).unwrap();
        assert_eq!(again.root, rel.root);
    }

    #[test]
    fn merge_unions_extended_partials() {
        let s = store(2, 2);
        let r1 = Relation::from_rows(&s, 2, vec![1], &[vec![(Some(0), Some(1))]]).unwrap();
        let r2 = Relation::from_rows(&s, 2, vec![2], &[vec![(Some(0), Some(1))]]).unwrap();
        let merged = merge_partials(&s, &[r1, r2], 2).unwrap();
        assert_eq!(merged.count_pairs(&s).unwrap(), BigUint::from(4u32));
        let from = StateSet::from_states(&s, 2, &[vec![0, 0]]).unwrap();
        let to = image(&s, &from, &merged).unwrap();
        assert_eq!(to.enumerate(&s).unwrap(), vec![vec![0, 1], vec![1, 0]]);
        assert!(matches!(
            merge_partials(&s, &[], 2),
            Err(Error::EmptyPartials)
        ));
    }

    #[test]
    fn extend_from_inner_variable() {
        let s = store(3, 2);
        let rel = Relation::from_rows(&s, 3, vec![3], &[vec![(Some(0), Some(1))]]).unwrap();
        // Extension over variables 2..=3 only: root sits at level 2.
        let sub = extend_root(&s, &rel, 2, 3);
        assert_eq!(s.level(sub), Some(2));
        assert_eq!(
            s.sat_count(sub, 6).unwrap(),
            BigUint::from(2u32) * BigUint::from(4u32)
        );
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let s = store(3, 2);
        let a = StateSet::full(&s, 2).unwrap();
        let b = StateSet::full(&s, 3).unwrap();
        assert!(matches!(
            union(&s, &a, &b),
            Err(Error::Dimension { left: 2, right: 3 })
        ));
    }
}
