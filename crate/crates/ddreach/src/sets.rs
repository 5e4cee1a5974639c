//! State sets and transition relations as typed diagram roots.
//!
//! A `StateSet` over n variables is a quasi diagram on levels `0..n`. A
//! `Relation` is stored over the levels of its own support only: for support
//! variables `s_1 < ... < s_k`, local level `2p` holds the source copy of
//! `s_{p+1}` and level `2p+1` its target copy. A full-support relation over n
//! variables therefore occupies all 2n levels. Variables outside the support
//! are implicitly constrained identically; `extend` materializes that.

use num_bigint::BigUint;

use crate::error::{Error, Result};
use crate::store::{NodeRef, Store};

/// Set of states over `vars` variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateSet {
    pub root: NodeRef,
    pub vars: u32,
}

/// Transition relation over the interleaved levels of its support.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Relation {
    pub root: NodeRef,
    /// Source-variable indices, 1-based, strictly ascending, nonempty.
    pub support: Vec<u32>,
}

impl StateSet {
    pub fn empty(vars: u32) -> StateSet {
        StateSet {
            root: NodeRef::ZERO,
            vars,
        }
    }

    /// The set of all m^vars states.
    pub fn full(store: &Store, vars: u32) -> Result<StateSet> {
        Ok(StateSet {
            root: store.to_quasi(NodeRef::ONE, vars)?,
            vars,
        })
    }

    /// Union of cubes; `None` entries are unconstrained.
    pub fn from_cubes(store: &Store, vars: u32, cubes: &[Vec<Option<u8>>]) -> Result<StateSet> {
        let mut root = NodeRef::ZERO;
        for cube in cubes {
            let one = cube_set_root(store, vars, cube)?;
            root = crate::mdd::union_rec(store, root, one);
        }
        Ok(StateSet { root, vars })
    }

    /// Set holding exactly the given states.
    pub fn from_states(store: &Store, vars: u32, states: &[Vec<u8>]) -> Result<StateSet> {
        let cubes: Vec<Vec<Option<u8>>> = states
            .iter()
            .map(|s| s.iter().map(|&v| Some(v)).collect())
            .collect();
        StateSet::from_cubes(store, vars, &cubes)
    }

    pub fn is_empty(&self) -> bool {
        self.root == NodeRef::ZERO
    }

    pub fn count(&self, store: &Store) -> Result<BigUint> {
        store.sat_count(self.root, self.vars)
    }

    pub fn contains(&self, store: &Store, state: &[u8]) -> Result<bool> {
        if state.len() != self.vars as usize {
            return Err(Error::Arity {
                expected: self.vars as usize,
                got: state.len(),
            });
        }
        store.eval(self.root, state)
    }

    /// All member states in lexicographic order. Intended for small sets.
    pub fn enumerate(&self, store: &Store) -> Result<Vec<Vec<u8>>> {
        store.check_quasi_root(self.root, self.vars)?;
        Ok(enumerate_assignments(store, self.root, self.vars))
    }
}

impl Relation {
    /// Relation with no transitions over the given support.
    pub fn empty(support: Vec<u32>) -> Relation {
        Relation {
            root: NodeRef::ZERO,
            support,
        }
    }

    /// Builds a relation from cube rows. Each row has one
    /// `(source, target)` token pair per support variable, in support order;
    /// `None` leaves that side unconstrained.
    pub fn from_rows(
        store: &Store,
        vars: u32,
        support: Vec<u32>,
        rows: &[Vec<(Option<u8>, Option<u8>)>],
    ) -> Result<Relation> {
        validate_support(&support, vars)?;
        let mut root = NodeRef::ZERO;
        for row in rows {
            if row.len() != support.len() {
                return Err(Error::Arity {
                    expected: support.len(),
                    got: row.len(),
                });
            }
            let cube = cube_rel_root(store, row)?;
            root = crate::mdd::union_rec(store, root, cube);
        }
        Ok(Relation { root, support })
    }

    /// Number of interleaved levels the relation diagram occupies.
    pub fn levels(&self) -> u32 {
        2 * self.support.len() as u32
    }

    /// True when the support covers every variable of an n-variable system.
    pub fn is_full_for(&self, n: u32) -> bool {
        self.support.len() as u32 == n
    }

    /// Number of (source, target) pairs over the support variables.
    pub fn count_pairs(&self, store: &Store) -> Result<BigUint> {
        store.sat_count(self.root, self.levels())
    }

    /// All (source, target) pairs over the support variables, in order.
    pub fn enumerate_pairs(&self, store: &Store) -> Result<Vec<(Vec<u8>, Vec<u8>)>> {
        store.check_quasi_root(self.root, self.levels())?;
        let pairs = enumerate_assignments(store, self.root, self.levels());
        Ok(pairs
            .into_iter()
            .map(|assignment| {
                let mut src = Vec::with_capacity(self.support.len());
                let mut tgt = Vec::with_capacity(self.support.len());
                for (pos, value) in assignment.into_iter().enumerate() {
                    if pos % 2 == 0 {
                        src.push(value);
                    } else {
                        tgt.push(value);
                    }
                }
                (src, tgt)
            })
            .collect())
    }
}

pub(crate) fn validate_support(support: &[u32], vars: u32) -> Result<()> {
    if support.is_empty() {
        return Err(Error::Support { index: 0, vars });
    }
    let mut prev = 0;
    for &v in support {
        if v == 0 || v <= prev || v > vars {
            return Err(Error::Support { index: v, vars });
        }
        prev = v;
    }
    Ok(())
}

/// Builds the diagram of a single cube over `vars` set levels.
pub(crate) fn cube_set_root(store: &Store, vars: u32, cube: &[Option<u8>]) -> Result<NodeRef> {
    if cube.len() != vars as usize {
        return Err(Error::Arity {
            expected: vars as usize,
            got: cube.len(),
        });
    }
    let mut cur = NodeRef::ONE;
    for level in (0..vars).rev() {
        cur = constrain(store, level, cube[level as usize], cur)?;
    }
    Ok(cur)
}

/// Builds the diagram of one relation cube row over the support-local levels.
pub(crate) fn cube_rel_root(store: &Store, row: &[(Option<u8>, Option<u8>)]) -> Result<NodeRef> {
    let mut cur = NodeRef::ONE;
    for (pos, &(src, tgt)) in row.iter().enumerate().rev() {
        cur = constrain(store, 2 * pos as u32 + 1, tgt, cur)?;
        cur = constrain(store, 2 * pos as u32, src, cur)?;
    }
    Ok(cur)
}

fn constrain(store: &Store, level: u32, token: Option<u8>, below: NodeRef) -> Result<NodeRef> {
    let m = store.domain() as usize;
    Ok(match token {
        None => store.mk_quasi(level, &vec![below; m]),
        Some(value) => {
            if value as u32 >= store.domain() {
                return Err(Error::DomainValue {
                    value: value as u32,
                    domain: store.domain(),
                });
            }
            let mut children = vec![NodeRef::ZERO; m];
            children[value as usize] = below;
            store.mk_quasi(level, &children)
        }
    })
}

/// Collects every accepted assignment of a quasi diagram, in lexicographic
/// order. Exponential in the worst case; callers keep inputs small.
pub(crate) fn enumerate_assignments(store: &Store, root: NodeRef, levels: u32) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let mut prefix = Vec::with_capacity(levels as usize);
    enumerate_rec(store, root, 0, levels, &mut prefix, &mut out);
    out
}

fn enumerate_rec(
    store: &Store,
    v: NodeRef,
    at: u32,
    levels: u32,
    prefix: &mut Vec<u8>,
    out: &mut Vec<Vec<u8>>,
) {
    if v == NodeRef::ZERO {
        return;
    }
    if at == levels {
        debug_assert_eq!(v, NodeRef::ONE);
        out.push(prefix.clone());
        return;
    }
    debug_assert!(!v.is_terminal());
    for value in 0..store.domain() {
        prefix.push(value as u8);
        enumerate_rec(store, store.kids(v)[value as usize], at + 1, levels, prefix, out);
        prefix.pop();
    }
}
