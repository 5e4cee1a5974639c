//! Transition system construction: built-in generators, the `.tsys` text
//! format, an explicit-state oracle, and the dependency/bandwidth metric.
//!
//! Generators fill in both the diagram-level system and a cube-level
//! description (`ModelDesc`). The description is what `.tsys` serialization
//! writes and what the oracle prefers to run on, so oracle results never
//! depend on diagram operations.

use std::collections::{HashMap, VecDeque};

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::sets::{Relation, StateSet};
use crate::store::{NodeRef, Store};

/// One relation block at the cube level: rows of (source, target) token
/// pairs over the support, `None` meaning unconstrained.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelBlock {
    pub name: String,
    pub support: Vec<u32>,
    pub rows: Vec<Vec<(Option<u8>, Option<u8>)>>,
}

/// Cube-level description of a system, sufficient to reconstruct it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModelDesc {
    pub init_cubes: Vec<Vec<Option<u8>>>,
    pub rels: Vec<RelBlock>,
}

/// A symbolic transition system: state space dimensions, initial states,
/// partial relations, and optionally a prebuilt monolithic relation. When
/// `monolithic` is present it equals the merge of the partials.
#[derive(Clone, Debug)]
pub struct TransitionSystem {
    pub name: String,
    pub vars: u32,
    pub domain: u32,
    pub var_names: Vec<String>,
    pub init: StateSet,
    pub partials: Vec<Relation>,
    pub monolithic: Option<Relation>,
    pub desc: Option<ModelDesc>,
}

fn check_store_fits(store: &Store, vars: u32, domain: u32) -> Result<()> {
    if store.vars() < vars {
        return Err(Error::Dimension {
            left: store.vars(),
            right: vars,
        });
    }
    if store.domain() != domain {
        return Err(Error::Model(format!(
            "store domain {} does not match model domain {}",
            store.domain(),
            domain
        )));
    }
    Ok(())
}

/// Rebuilds a diagram with every level moved down by `delta`.
fn shift_levels(store: &Store, root: NodeRef, delta: u32) -> NodeRef {
    fn rec(
        store: &Store,
        v: NodeRef,
        delta: u32,
        memo: &mut HashMap<NodeRef, NodeRef>,
    ) -> NodeRef {
        if v.is_terminal() {
            return v;
        }
        if let Some(&hit) = memo.get(&v) {
            return hit;
        }
        let children: Vec<NodeRef> = store
            .kids(v)
            .iter()
            .map(|&c| rec(store, c, delta, memo))
            .collect();
        let out = store.mk_quasi(store.node_level(v) + delta, &children);
        memo.insert(v, out);
        out
    }
    rec(store, root, delta, &mut HashMap::new())
}

fn default_var_names(n: u32) -> Vec<String> {
    (1..=n).map(|i| format!("x{i}")).collect()
}

/// Binary counter over n bits, counting up by one from zero to all-ones with
/// no wraparound (the top state is a sink). Variable 1 is the most
/// significant bit. The monolithic relation is built directly in O(n) nodes;
/// the partials split it into one carry chain per flipped-bit position.
pub fn gen_counter(store: &Store, n: u32) -> Result<TransitionSystem> {
    if n < 1 {
        return Err(Error::Model("counter needs n >= 1".into()));
    }
    if store.domain() != 2 {
        return Err(Error::BinaryOnly {
            domain: store.domain(),
        });
    }
    check_store_fits(store, n, 2)?;

    // Bottom-up: after processing bit v, `inc` increments the v..n suffix
    // without overflow and `carry` maps the all-ones suffix to all-zeroes.
    let mut inc = NodeRef::ZERO;
    let mut carry = NodeRef::ONE;
    for v in (1..=n).rev() {
        let stay0 = store.mk_quasi(2 * v - 1, &[inc, carry]);
        let stay1 = store.mk_quasi(2 * v - 1, &[NodeRef::ZERO, inc]);
        let flip10 = store.mk_quasi(2 * v - 1, &[carry, NodeRef::ZERO]);
        inc = store.mk_quasi(2 * v - 2, &[stay0, stay1]);
        carry = store.mk_quasi(2 * v - 2, &[NodeRef::ZERO, flip10]);
    }

    let mut partials = Vec::with_capacity(n as usize);
    let mut blocks = Vec::with_capacity(n as usize);
    for p in 1..=n {
        let support: Vec<u32> = (p..=n).collect();
        let mut row = Vec::with_capacity(support.len());
        row.push((Some(0), Some(1)));
        for _ in p + 1..=n {
            row.push((Some(1), Some(0)));
        }
        let rows = vec![row];
        partials.push(Relation::from_rows(store, n, support.clone(), &rows)?);
        blocks.push(RelBlock {
            name: format!("inc{p}"),
            support,
            rows,
        });
    }

    let zero_state = vec![0u8; n as usize];
    let init = StateSet::from_states(store, n, std::slice::from_ref(&zero_state))?;
    Ok(TransitionSystem {
        name: format!("counter-n{n}"),
        vars: n,
        domain: 2,
        var_names: default_var_names(n),
        init,
        partials,
        monolithic: Some(Relation {
            root: inc,
            support: (1..=n).collect(),
        }),
        desc: Some(ModelDesc {
            init_cubes: vec![zero_state.into_iter().map(Some).collect()],
            rels: blocks,
        }),
    })
}

/// Dining philosophers with k >= 2 seats. Per seat i the Boolean variables
/// are a_i (fork i on the table), l_i (seat i holds its left fork, which is
/// fork i) and r_i (seat i holds its right fork, which is fork (i mod k)+1),
/// ordered a_1, l_1, r_1, ..., a_k, l_k, r_k. Each seat contributes three
/// partial relations: toggle (a_i, l_i), toggle (r_i, a_j) for the right
/// neighbor's fork j, and an eating self-loop requiring both hands full.
pub fn gen_philosophers(store: &Store, k: u32) -> Result<TransitionSystem> {
    if k < 2 {
        return Err(Error::Model("philosophers needs k >= 2".into()));
    }
    if store.domain() != 2 {
        return Err(Error::BinaryOnly {
            domain: store.domain(),
        });
    }
    let n = 3 * k;
    check_store_fits(store, n, 2)?;

    let toggle_rows = || -> Vec<Vec<(Option<u8>, Option<u8>)>> {
        let flips = [(Some(0), Some(1)), (Some(1), Some(0))];
        let mut rows = Vec::with_capacity(4);
        for &first in &flips {
            for &second in &flips {
                rows.push(vec![first, second]);
            }
        }
        rows
    };

    let mut partials = Vec::with_capacity(3 * k as usize);
    let mut blocks = Vec::with_capacity(3 * k as usize);
    let mut push = |name: String, support: Vec<u32>, rows: Vec<Vec<(Option<u8>, Option<u8>)>>|
     -> Result<()> {
        partials.push(Relation::from_rows(store, n, support.clone(), &rows)?);
        blocks.push(RelBlock { name, support, rows });
        Ok(())
    };

    for i in 1..=k {
        let a_i = 3 * i - 2;
        let l_i = 3 * i - 1;
        let r_i = 3 * i;
        let j = (i % k) + 1;
        let a_j = 3 * j - 2;
        push(format!("p{i}-left"), vec![a_i, l_i], toggle_rows())?;
        // Support must stay ascending; the wraparound seat owns the pair
        // (a_1, r_k) instead of (r_i, a_{i+1}).
        let right_support = if a_j > r_i { vec![r_i, a_j] } else { vec![a_j, r_i] };
        push(format!("p{i}-right"), right_support, toggle_rows())?;
        push(
            format!("p{i}-eat"),
            vec![l_i, r_i],
            vec![vec![(Some(1), Some(1)), (Some(1), Some(1))]],
        )?;
    }

    let init_state: Vec<u8> = (1..=k).flat_map(|_| [1u8, 0, 0]).collect();
    let init = StateSet::from_states(store, n, std::slice::from_ref(&init_state))?;

    let mut var_names = Vec::with_capacity(n as usize);
    for i in 1..=k {
        var_names.push(format!("a{i}"));
        var_names.push(format!("l{i}"));
        var_names.push(format!("r{i}"));
    }

    Ok(TransitionSystem {
        name: format!("philosophers-k{k}"),
        vars: n,
        domain: 2,
        var_names,
        init,
        partials,
        monolithic: None,
        desc: Some(ModelDesc {
            init_cubes: vec![init_state.into_iter().map(Some).collect()],
            rels: blocks,
        }),
    })
}

/// Wraps a binary system with one extra top variable that must flip on every
/// transition: R' = (x_0 xor x_0') and R. Both same-value branches of R'
/// are empty, so recursive fixpoints degrade to stepwise image computation.
pub fn wrap_bad_case(store: &Store, sys: &TransitionSystem) -> Result<TransitionSystem> {
    if sys.domain != 2 {
        return Err(Error::BinaryOnly { domain: sys.domain });
    }
    let mono = sys.monolithic.as_ref().ok_or(Error::MissingMonolithic)?;
    let n = sys.vars + 1;
    check_store_fits(store, n, 2)?;

    let shifted = shift_levels(store, mono.root, 2);
    let up = store.mk_quasi(1, &[NodeRef::ZERO, shifted]);
    let down = store.mk_quasi(1, &[shifted, NodeRef::ZERO]);
    let root = store.mk_quasi(0, &[up, down]);

    let init_root = store.mk_quasi(0, &[shift_levels(store, sys.init.root, 1), NodeRef::ZERO]);

    let wrap_support = |support: &[u32]| -> Vec<u32> {
        let mut s = Vec::with_capacity(support.len() + 1);
        s.push(1);
        s.extend(support.iter().map(|&v| v + 1));
        s
    };
    let wrap_rows =
        |rows: &[Vec<(Option<u8>, Option<u8>)>]| -> Vec<Vec<(Option<u8>, Option<u8>)>> {
            let mut out = Vec::with_capacity(rows.len() * 2);
            for prefix in [(Some(0), Some(1)), (Some(1), Some(0))] {
                for row in rows {
                    let mut wrapped = Vec::with_capacity(row.len() + 1);
                    wrapped.push(prefix);
                    wrapped.extend_from_slice(row);
                    out.push(wrapped);
                }
            }
            out
        };

    let mut partials = Vec::with_capacity(sys.partials.len());
    for part in &sys.partials {
        let rows: Vec<Vec<(Option<u8>, Option<u8>)>> = part
            .enumerate_pairs(store)?
            .into_iter()
            .map(|(src, tgt)| {
                src.into_iter()
                    .zip(tgt)
                    .map(|(s, t)| (Some(s), Some(t)))
                    .collect()
            })
            .collect();
        partials.push(Relation::from_rows(
            store,
            n,
            wrap_support(&part.support),
            &wrap_rows(&rows),
        )?);
    }

    let desc = sys.desc.as_ref().map(|d| ModelDesc {
        init_cubes: d
            .init_cubes
            .iter()
            .map(|cube| {
                let mut c = Vec::with_capacity(cube.len() + 1);
                c.push(Some(0));
                c.extend_from_slice(cube);
                c
            })
            .collect(),
        rels: d
            .rels
            .iter()
            .map(|b| RelBlock {
                name: b.name.clone(),
                support: wrap_support(&b.support),
                rows: wrap_rows(&b.rows),
            })
            .collect(),
    });

    let mut var_names = Vec::with_capacity(n as usize);
    var_names.push("x0".to_string());
    var_names.extend(sys.var_names.iter().cloned());

    Ok(TransitionSystem {
        name: format!("badcase-{}", sys.name),
        vars: n,
        domain: 2,
        var_names,
        init: StateSet {
            root: init_root,
            vars: n,
        },
        partials,
        monolithic: Some(Relation {
            root,
            support: (1..=n).collect(),
        }),
        desc,
    })
}

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn parse_token(line: usize, tok: &str, domain: u32) -> Result<Option<u8>> {
    if tok == "-" {
        return Ok(None);
    }
    let value: u32 = tok
        .parse()
        .map_err(|_| perr(line, format!("expected a value in 0..{domain} or '-', got `{tok}`")))?;
    if value >= domain {
        return Err(perr(
            line,
            format!("value {value} outside domain 0..{domain}"),
        ));
    }
    Ok(Some(value as u8))
}

fn content_rows(text: &str) -> Vec<(usize, Vec<&str>)> {
    text.lines()
        .enumerate()
        .map(|(ix, line)| (ix + 1, line.trim()))
        .filter(|(_, line)| !line.is_empty() && !line.starts_with('#'))
        .map(|(ix, line)| (ix, line.split_whitespace().collect()))
        .collect()
}

fn parse_dims(rows: &[(usize, Vec<&str>)], eof_line: usize) -> Result<(usize, u32, u32)> {
    match rows.first() {
        Some(&(line, ref toks)) if toks.as_slice() != ["tsys", "1"] => {
            return Err(perr(line, "expected header `tsys 1`"));
        }
        None => return Err(perr(eof_line, "expected header `tsys 1`")),
        _ => {}
    }
    let &(line, ref toks) = rows
        .get(1)
        .ok_or_else(|| perr(eof_line, "expected `vars <n> domain <m>`"))?;
    if toks.len() != 4 || toks[0] != "vars" || toks[2] != "domain" {
        return Err(perr(line, "expected `vars <n> domain <m>`"));
    }
    let n: u32 = toks[1]
        .parse()
        .map_err(|_| perr(line, "variable count must be a positive integer"))?;
    let m: u32 = toks[3]
        .parse()
        .map_err(|_| perr(line, "domain size must be an integer"))?;
    if n < 1 {
        return Err(perr(line, "variable count must be at least 1"));
    }
    if !(2..=256).contains(&m) {
        return Err(perr(line, "domain size must be in 2..=256"));
    }
    Ok((2, n, m))
}

/// Reads just the dimensions `(n, m)` from `.tsys` text, so a caller can
/// size a store before the full parse.
pub fn tsys_dims(text: &str) -> Result<(u32, u32)> {
    let rows = content_rows(text);
    let eof_line = text.lines().count() + 1;
    let (_, n, m) = parse_dims(&rows, eof_line)?;
    Ok((n, m))
}

/// Parses `.tsys` text into a system living in the given store. The store
/// must have the file's domain and at least its variable count.
pub fn parse_tsys(store: &Store, text: &str) -> Result<TransitionSystem> {
    let rows = content_rows(text);
    let eof_line = text.lines().count() + 1;
    let (mut at, n, m) = parse_dims(&rows, eof_line)?;
    check_store_fits(store, n, m)?;

    let mut var_names = None;
    if let Some(&(line, ref toks)) = rows.get(at) {
        if toks[0] == "names" {
            if toks.len() != n as usize + 1 {
                return Err(perr(line, format!("expected {n} names")));
            }
            var_names = Some(toks[1..].iter().map(|s| s.to_string()).collect());
            at += 1;
        }
    }

    let &(line, ref toks) = rows
        .get(at)
        .ok_or_else(|| perr(eof_line, "expected `init` block"))?;
    if toks.as_slice() != ["init"] {
        return Err(perr(line, "expected `init`"));
    }
    at += 1;
    let mut init_cubes = Vec::new();
    loop {
        let &(line, ref toks) = rows
            .get(at)
            .ok_or_else(|| perr(eof_line, "unexpected end of file inside init block"))?;
        at += 1;
        if toks.as_slice() == ["end"] {
            break;
        }
        if toks.len() != n as usize {
            return Err(perr(line, format!("init line needs {n} tokens")));
        }
        let cube: Vec<Option<u8>> = toks
            .iter()
            .map(|t| parse_token(line, t, m))
            .collect::<Result<_>>()?;
        init_cubes.push(cube);
    }

    let mut blocks: Vec<RelBlock> = Vec::new();
    while let Some(&(line, ref toks)) = rows.get(at) {
        if toks.len() < 4 || toks[0] != "rel" || toks[2] != "support" {
            return Err(perr(line, "expected `rel <name> support <vars...>`"));
        }
        let name = toks[1].to_string();
        let mut support = Vec::with_capacity(toks.len() - 3);
        for t in &toks[3..] {
            let v: u32 = t
                .parse()
                .map_err(|_| perr(line, format!("bad support index `{t}`")))?;
            support.push(v);
        }
        crate::sets::validate_support(&support, n)
            .map_err(|e| perr(line, format!("bad support: {e}")))?;
        at += 1;
        let mut block_rows = Vec::new();
        loop {
            let &(line, ref toks) = rows
                .get(at)
                .ok_or_else(|| perr(eof_line, "unexpected end of file inside rel block"))?;
            at += 1;
            if toks.as_slice() == ["end"] {
                break;
            }
            if toks.len() != 2 * support.len() {
                return Err(perr(
                    line,
                    format!("rel line needs {} tokens", 2 * support.len()),
                ));
            }
            let mut row = Vec::with_capacity(support.len());
            for pair in toks.chunks(2) {
                row.push((
                    parse_token(line, pair[0], m)?,
                    parse_token(line, pair[1], m)?,
                ));
            }
            block_rows.push(row);
        }
        blocks.push(RelBlock {
            name,
            support,
            rows: block_rows,
        });
    }
    if blocks.is_empty() {
        return Err(perr(eof_line, "expected at least one rel block"));
    }

    let init = StateSet::from_cubes(store, n, &init_cubes)?;
    let mut partials = Vec::with_capacity(blocks.len());
    for block in &blocks {
        partials.push(Relation::from_rows(
            store,
            n,
            block.support.clone(),
            &block.rows,
        )?);
    }
    let monolithic = if blocks.len() == 1 && partials[0].is_full_for(n) {
        Some(partials[0].clone())
    } else {
        None
    };

    Ok(TransitionSystem {
        name: "tsys".to_string(),
        vars: n,
        domain: m,
        var_names: var_names.unwrap_or_else(|| default_var_names(n)),
        init,
        partials,
        monolithic,
        desc: Some(ModelDesc {
            init_cubes,
            rels: blocks,
        }),
    })
}

fn write_token(out: &mut String, tok: Option<u8>) {
    match tok {
        Some(v) => out.push_str(&v.to_string()),
        None => out.push('-'),
    }
}

/// Serializes a system back to `.tsys` text. Needs the cube-level
/// description; systems without one cannot be written.
pub fn write_tsys(sys: &TransitionSystem) -> Result<String> {
    let desc = sys.desc.as_ref().ok_or(Error::NoDescription)?;
    let mut out = String::new();
    out.push_str("tsys 1\n");
    out.push_str(&format!("vars {} domain {}\n", sys.vars, sys.domain));
    out.push_str("names");
    for name in &sys.var_names {
        out.push(' ');
        out.push_str(name);
    }
    out.push('\n');
    out.push_str("init\n");
    for cube in &desc.init_cubes {
        let mut first = true;
        for &tok in cube {
            if !first {
                out.push(' ');
            }
            first = false;
            write_token(&mut out, tok);
        }
        out.push('\n');
    }
    out.push_str("end\n");
    for block in &desc.rels {
        out.push_str(&format!("rel {} support", block.name));
        for v in &block.support {
            out.push_str(&format!(" {v}"));
        }
        out.push('\n');
        for row in &block.rows {
            let mut first = true;
            for &(src, tgt) in row {
                if !first {
                    out.push(' ');
                }
                first = false;
                write_token(&mut out, src);
                out.push(' ');
                write_token(&mut out, tgt);
            }
            out.push('\n');
        }
        out.push_str("end\n");
    }
    Ok(out)
}

fn expand_cube(cube: &[Option<u8>], m: u32) -> Vec<Vec<u8>> {
    let mut out = vec![Vec::with_capacity(cube.len())];
    for &tok in cube {
        let choices: Vec<u8> = match tok {
            Some(v) => vec![v],
            None => (0..m).map(|v| v as u8).collect(),
        };
        let mut next = Vec::with_capacity(out.len() * choices.len());
        for prefix in &out {
            for &c in &choices {
                let mut grown = prefix.clone();
                grown.push(c);
                next.push(grown);
            }
        }
        out = next;
    }
    out
}

fn state_index(state: &[u8], m: u32) -> usize {
    let mut ix = 0usize;
    for &v in state {
        ix = ix * m as usize + v as usize;
    }
    ix
}

/// Appends every successor of `state` under one cube row to `out`.
fn push_successors(
    state: &[u8],
    support: &[u32],
    row: &[(Option<u8>, Option<u8>)],
    m: u32,
    out: &mut Vec<Vec<u8>>,
) {
    for (pos, &(src, _)) in row.iter().enumerate() {
        if let Some(v) = src {
            if state[support[pos] as usize - 1] != v {
                return;
            }
        }
    }
    // Odometer over the unconstrained target positions.
    let mut choice: Vec<u8> = row
        .iter()
        .map(|&(_, tgt)| tgt.unwrap_or(0))
        .collect();
    loop {
        let mut succ = state.to_vec();
        for (pos, &var) in support.iter().enumerate() {
            succ[var as usize - 1] = choice[pos];
        }
        out.push(succ);
        let mut p = row.len();
        loop {
            if p == 0 {
                return;
            }
            p -= 1;
            if row[p].1.is_some() {
                continue;
            }
            if choice[p] as u32 + 1 < m {
                choice[p] += 1;
                for q in p + 1..row.len() {
                    if row[q].1.is_none() {
                        choice[q] = 0;
                    }
                }
                break;
            }
        }
    }
}

/// Exact reachable set by explicit-state breadth-first search, returned as a
/// lexicographically sorted state list. Runs on the cube-level description
/// when one exists, otherwise on enumerated relation pairs, so the result is
/// independent of the symbolic fixpoint operations.
pub fn explicit_oracle(store: &Store, sys: &TransitionSystem) -> Result<Vec<Vec<u8>>> {
    let n = sys.vars;
    let m = sys.domain;
    let total = (m as u128).checked_pow(n).unwrap_or(u128::MAX);
    if total > 1 << 20 {
        let bits = (n as f64 * (m as f64).log2()).ceil() as u32;
        return Err(Error::TooLarge { bits, limit: 20 });
    }
    let total = total as usize;

    // One entry per relation block: its support plus its cube rows.
    type CubeRows = Vec<Vec<(Option<u8>, Option<u8>)>>;
    let mut table: Vec<(Vec<u32>, CubeRows)> = Vec::new();
    if let Some(desc) = &sys.desc {
        for block in &desc.rels {
            table.push((block.support.clone(), block.rows.clone()));
        }
    } else {
        let rels: Vec<&Relation> = if !sys.partials.is_empty() {
            sys.partials.iter().collect()
        } else {
            sys.monolithic.iter().collect()
        };
        for rel in rels {
            let rows = rel
                .enumerate_pairs(store)?
                .into_iter()
                .map(|(src, tgt)| {
                    src.into_iter()
                        .zip(tgt)
                        .map(|(s, t)| (Some(s), Some(t)))
                        .collect()
                })
                .collect();
            table.push((rel.support.clone(), rows));
        }
    }

    let init_states: Vec<Vec<u8>> = match &sys.desc {
        Some(desc) => desc
            .init_cubes
            .iter()
            .flat_map(|cube| expand_cube(cube, m))
            .collect(),
        None => sys.init.enumerate(store)?,
    };

    let mut visited = vec![false; total];
    let mut queue = VecDeque::new();
    for state in init_states {
        let ix = state_index(&state, m);
        if !visited[ix] {
            visited[ix] = true;
            queue.push_back(state);
        }
    }
    let mut succs = Vec::new();
    while let Some(state) = queue.pop_front() {
        succs.clear();
        for (support, rows) in &table {
            for row in rows {
                push_successors(&state, support, row, m, &mut succs);
            }
        }
        for succ in succs.drain(..) {
            let ix = state_index(&succ, m);
            if !visited[ix] {
                visited[ix] = true;
                queue.push_back(succ);
            }
        }
    }

    let mut out = Vec::new();
    for (ix, seen) in visited.iter().enumerate() {
        if !seen {
            continue;
        }
        let mut state = vec![0u8; n as usize];
        let mut rest = ix;
        for slot in state.iter_mut().rev() {
            *slot = (rest % m as usize) as u8;
            rest /= m as usize;
        }
        out.push(state);
    }
    Ok(out)
}

/// Symmetric 0/1 matrix of shared-variable dependencies between partials,
/// rows ordered ascending by first support variable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DependencyMatrix {
    pub entries: Vec<Vec<bool>>,
}

impl DependencyMatrix {
    pub fn k(&self) -> usize {
        self.entries.len()
    }
}

fn supports_share(a: &[u32], b: &[u32]) -> bool {
    let mut i = 0;
    let mut j = 0;
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Equal => return true,
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
        }
    }
    false
}

pub fn dependency_matrix(partials: &[Relation]) -> DependencyMatrix {
    let mut supports: Vec<&[u32]> = partials.iter().map(|r| r.support.as_slice()).collect();
    supports.sort();
    let entries = supports
        .iter()
        .map(|a| supports.iter().map(|b| supports_share(a, b)).collect())
        .collect();
    DependencyMatrix { entries }
}

/// Average over rows of (last nonzero column - first nonzero column),
/// divided by k. A single relation scores 0; a fully dense matrix scores
/// (k-1)/k.
pub fn avg_relative_bandwidth(matrix: &DependencyMatrix) -> Ratio<u64> {
    let k = matrix.k();
    if k == 0 {
        return Ratio::new(0, 1);
    }
    let mut sum = 0u64;
    for row in &matrix.entries {
        let first = row.iter().position(|&b| b).expect("diagonal is nonzero");
        let last = row.iter().rposition(|&b| b).expect("diagonal is nonzero");
        sum += (last - first) as u64;
    }
    Ratio::new(sum, (k * k) as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdd::merge_partials as mdd_merge_partials;
    use crate::store::StoreConfig;
    use num_bigint::BigUint;

    fn store(vars: u32, m: u32) -> Store {
        Store::new(StoreConfig::new(vars, m).cache_bits(14)).unwrap()
    }

    fn as_pairs(rel: &Relation, s: &Store) -> Vec<(u64, u64)> {
        rel.enumerate_pairs(s)
            .unwrap()
            .into_iter()
            .map(|(src, tgt)| {
                let val = |v: &[u8]| v.iter().fold(0u64, |acc, &b| acc * 2 + b as u64);
                (val(&src), val(&tgt))
            })
            .collect()
    }

    #[test]
    fn counter_partition_structure() {
        let s = store(3, 2);
        let sys = gen_counter(&s, 3).unwrap();
        let mono = sys.monolithic.as_ref().unwrap();
        let r0 = s.child(mono.root, 0).unwrap();
        let r1 = s.child(mono.root, 1).unwrap();
        // Same-bit branches agree, the downward flip branch is empty.
        assert_eq!(s.child(r0, 0).unwrap(), s.child(r1, 1).unwrap());
        assert_eq!(s.child(r1, 0).unwrap(), NodeRef::ZERO);
        assert_ne!(s.child(r0, 1).unwrap(), NodeRef::ZERO);
        let expect: Vec<(u64, u64)> = (0..7).map(|v| (v, v + 1)).collect();
        assert_eq!(as_pairs(mono, &s), expect);
    }

    #[test]
    fn counter_single_bit() {
        let s = store(1, 2);
        let sys = gen_counter(&s, 1).unwrap();
        assert_eq!(as_pairs(sys.monolithic.as_ref().unwrap(), &s), vec![(0, 1)]);
    }

    #[test]
    fn counter_partials_merge_to_monolithic() {
        for n in 1..=6 {
            let s = store(n, 2);
            let sys = gen_counter(&s, n).unwrap();
            let merged = mdd_merge_partials(&s, &sys.partials, n).unwrap();
            assert_eq!(merged.root, sys.monolithic.as_ref().unwrap().root);
        }
    }

    #[test]
    fn philosophers_shape() {
        let s = store(6, 2);
        let sys = gen_philosophers(&s, 2).unwrap();
        assert_eq!(sys.vars, 6);
        assert_eq!(sys.partials.len(), 6);
        let desc = sys.desc.as_ref().unwrap();
        assert_eq!(desc.rels[1].name, "p1-right");
        assert_eq!(desc.rels[1].support, vec![3, 4]);
        // Seat 2's right fork is fork 1, so the support wraps to (a_1, r_2).
        assert_eq!(desc.rels[4].name, "p2-right");
        assert_eq!(desc.rels[4].support, vec![1, 6]);
        assert_eq!(sys.init.count(&s).unwrap(), BigUint::from(1u32));
        assert_eq!(sys.init.enumerate(&s).unwrap(), vec![vec![1, 0, 0, 1, 0, 0]]);
        for rel in &sys.partials {
            let pairs = rel.count_pairs(&s).unwrap();
            assert!(pairs == BigUint::from(4u32) || pairs == BigUint::from(1u32));
        }
    }

    #[test]
    fn philosophers_reject_small_k() {
        let s = store(3, 2);
        assert!(matches!(
            gen_philosophers(&s, 1),
            Err(Error::Model(_))
        ));
    }

    #[test]
    fn oracle_counter_reaches_all_states() {
        let s = store(3, 2);
        let sys = gen_counter(&s, 3).unwrap();
        let states = explicit_oracle(&s, &sys).unwrap();
        assert_eq!(states.len(), 8);
        assert_eq!(states[0], vec![0, 0, 0]);
        assert_eq!(states[7], vec![1, 1, 1]);
    }

    #[test]
    fn oracle_empty_relation_keeps_init() {
        let s = store(2, 2);
        let init = StateSet::from_states(&s, 2, &[vec![1, 1]]).unwrap();
        let sys = TransitionSystem {
            name: "inert".into(),
            vars: 2,
            domain: 2,
            var_names: default_var_names(2),
            init,
            partials: vec![Relation::empty(vec![1])],
            monolithic: None,
            desc: None,
        };
        assert_eq!(explicit_oracle(&s, &sys).unwrap(), vec![vec![1, 1]]);
    }

    #[test]
    fn oracle_rejects_large_spaces() {
        let s = store(21, 2);
        let sys = gen_counter(&s, 21).unwrap();
        assert!(matches!(
            explicit_oracle(&s, &sys),
            Err(Error::TooLarge { bits: 21, limit: 20 })
        ));
    }

    /// Fork f can be on the table (a_f), in seat f's left hand (l_f), or in
    /// the right hand of the seat whose right fork is f. Every toggle flips
    /// two of those three bits, so their parity stays odd. The stronger
    /// exactly-one reading fails: from the initial state, p2-right then
    /// p1-left reaches (1,1,0,1,0,1), where fork 1 is marked available while
    /// seat 1 holds it as left fork and seat 2 as right fork.
    #[test]
    fn philosophers_fork_parity_invariant() {
        for k in [2u32, 3] {
            let s = store(3 * k, 2);
            let sys = gen_philosophers(&s, k).unwrap();
            let states = explicit_oracle(&s, &sys).unwrap();
            assert_eq!(states.len(), 1usize << (2 * k));
            let mut saw_non_onehot = false;
            for state in &states {
                for f in 1..=k {
                    let holder = if f == 1 { k } else { f - 1 };
                    let a = state[(3 * f - 2) as usize - 1];
                    let l = state[(3 * f - 1) as usize - 1];
                    let r = state[(3 * holder) as usize - 1];
                    assert_eq!(a ^ l ^ r, 1, "fork {f} parity broken in {state:?}");
                    if a + l + r == 3 {
                        saw_non_onehot = true;
                    }
                }
            }
            assert!(saw_non_onehot, "expected a state violating exactly-one");
            if k == 2 {
                assert!(states.contains(&vec![1, 1, 0, 1, 0, 1]));
            }
        }
    }

    #[test]
    fn badcase_zeroes_the_diagonal() {
        let s = store(4, 2);
        let counter = gen_counter(&s, 3).unwrap();
        let bad = wrap_bad_case(&s, &counter).unwrap();
        assert_eq!(bad.name, "badcase-counter-n3");
        assert_eq!(bad.vars, 4);
        let root = bad.monolithic.as_ref().unwrap().root;
        let r0 = s.child(root, 0).unwrap();
        let r1 = s.child(root, 1).unwrap();
        assert_eq!(s.child(r0, 0).unwrap(), NodeRef::ZERO);
        assert_eq!(s.child(r1, 1).unwrap(), NodeRef::ZERO);
        // Reachable states pair the counter value with the step parity.
        let states = explicit_oracle(&s, &bad).unwrap();
        assert_eq!(states.len(), 8);
        for state in &states {
            let value = state[1..].iter().fold(0u32, |acc, &b| acc * 2 + b as u32);
            assert_eq!(state[0] as u32, value % 2);
        }
        let merged = mdd_merge_partials(&s, &bad.partials, 4).unwrap();
        assert_eq!(merged.root, root);
    }

    #[test]
    fn badcase_needs_monolithic() {
        let s = store(7, 2);
        let phil = gen_philosophers(&s, 2).unwrap();
        assert!(matches!(
            wrap_bad_case(&s, &phil),
            Err(Error::MissingMonolithic)
        ));
    }

    #[test]
    fn badcase_of_empty_relation_is_empty() {
        let s = store(3, 2);
        let init = StateSet::from_states(&s, 2, &[vec![0, 0]]).unwrap();
        let sys = TransitionSystem {
            name: "inert".into(),
            vars: 2,
            domain: 2,
            var_names: default_var_names(2),
            init,
            partials: vec![Relation::empty(vec![1, 2])],
            monolithic: Some(Relation::empty(vec![1, 2])),
            desc: None,
        };
        let bad = wrap_bad_case(&s, &sys).unwrap();
        assert_eq!(bad.monolithic.as_ref().unwrap().root, NodeRef::ZERO);
    }

    #[test]
    fn tsys_roundtrip_is_nodewise_identical() {
        let s = store(2, 2);
        let sys = gen_counter(&s, 2).unwrap();
        let text = write_tsys(&sys).unwrap();
        assert_eq!(tsys_dims(&text).unwrap(), (2, 2));
        let parsed = parse_tsys(&s, &text).unwrap();
        assert_eq!(parsed.init.root, sys.init.root);
        assert_eq!(parsed.partials.len(), sys.partials.len());
        for (a, b) in parsed.partials.iter().zip(&sys.partials) {
            assert_eq!(a.root, b.root);
            assert_eq!(a.support, b.support);
        }
        // Serialization is a fixpoint after the first write.
        assert_eq!(write_tsys(&parsed).unwrap(), text);
    }

    #[test]
    fn tsys_wildcards_expand() {
        let s = store(2, 2);
        let text = "\
# toy model
tsys 1
vars 2 domain 2

init
0 -
end
rel step support 2
0 -
end
";
        let sys = parse_tsys(&s, text).unwrap();
        assert_eq!(
            sys.init.enumerate(&s).unwrap(),
            vec![vec![0, 0], vec![0, 1]]
        );
        assert_eq!(
            sys.partials[0].enumerate_pairs(&s).unwrap(),
            vec![(vec![0], vec![0]), (vec![0], vec![1])]
        );
        let states = explicit_oracle(&s, &sys).unwrap();
        assert_eq!(states, vec![vec![0, 0], vec![0, 1]]);
    }

    #[test]
    fn tsys_single_full_block_is_monolithic() {
        let s = store(2, 2);
        let text = "\
tsys 1
vars 2 domain 2
init
0 0
end
rel step support 1 2
0 1 1 0
end
";
        let sys = parse_tsys(&s, text).unwrap();
        let mono = sys.monolithic.as_ref().unwrap();
        assert_eq!(mono.root, sys.partials[0].root);
    }

    #[test]
    fn tsys_parse_errors_carry_line_numbers() {
        let s = store(3, 2);
        let cases: Vec<(&str, usize, &str)> = vec![
            ("bogus\n", 1, "header"),
            ("tsys 1\nvars 0 domain 2\n", 2, "at least 1"),
            ("tsys 1\nvars 2 domain 1\n", 2, "2..=256"),
            ("tsys 1\nvars 2 domain 2\ninit\n0\nend\n", 4, "2 tokens"),
            ("tsys 1\nvars 2 domain 2\ninit\n0 2\nend\n", 4, "outside domain"),
            (
                "tsys 1\nvars 2 domain 2\ninit\n0 0\nend\nrel a support 0\n0 1\nend\n",
                6,
                "bad support",
            ),
            (
                "tsys 1\nvars 2 domain 2\ninit\n0 0\nend\nrel a support 1\n0 1 1 0\nend\n",
                7,
                "2 tokens",
            ),
            ("tsys 1\nvars 2 domain 2\ninit\n0 0\n", 5, "end of file"),
            ("tsys 1\nvars 2 domain 2\ninit\n0 0\nend\n", 6, "rel block"),
        ];
        for (text, want_line, needle) in cases {
            match parse_tsys(&s, text) {
                Err(Error::Parse { line, msg }) => {
                    assert_eq!(line, want_line, "wrong line for {text:?}: {msg}");
                    assert!(
                        msg.contains(needle),
                        "message {msg:?} missing {needle:?} for {text:?}"
                    );
                }
                other => panic!("expected parse error for {text:?}, got {other:?}"),
            }
        }
    }

    #[test]
    fn bandwidth_three_chain_example() {
        let s = store(4, 2);
        let trivial = |support: Vec<u32>| {
            let rows = vec![vec![(Some(0), Some(0)); support.len()]];
            Relation::from_rows(&s, 4, support, &rows).unwrap()
        };
        let parts = vec![
            trivial(vec![3, 4]),
            trivial(vec![2, 3]),
            trivial(vec![1, 2]),
        ];
        let matrix = dependency_matrix(&parts);
        let t = true;
        let f = false;
        assert_eq!(
            matrix.entries,
            vec![vec![t, t, f], vec![t, t, t], vec![f, t, t]]
        );
        assert_eq!(avg_relative_bandwidth(&matrix), Ratio::new(4, 9));
    }

    #[test]
    fn bandwidth_degenerate_cases() {
        let s = store(4, 2);
        let trivial = |support: Vec<u32>| {
            let rows = vec![vec![(Some(0), Some(0)); support.len()]];
            Relation::from_rows(&s, 4, support, &rows).unwrap()
        };
        let single = dependency_matrix(&[trivial(vec![2])]);
        assert_eq!(avg_relative_bandwidth(&single), Ratio::new(0, 1));
        // All three share variable 1: every row spans all columns.
        let dense = dependency_matrix(&[
            trivial(vec![1, 2]),
            trivial(vec![1, 3]),
            trivial(vec![1, 4]),
        ]);
        assert_eq!(avg_relative_bandwidth(&dense), Ratio::new(2, 3));
    }

    #[test]
    fn philosophers_bandwidth_is_strictly_between_extremes() {
        let s = store(9, 2);
        let sys = gen_philosophers(&s, 3).unwrap();
        let matrix = dependency_matrix(&sys.partials);
        let rel = avg_relative_bandwidth(&matrix);
        assert!(rel > Ratio::new(0, 1) && rel < Ratio::new(1, 1));
    }
}
