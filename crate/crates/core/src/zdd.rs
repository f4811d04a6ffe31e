//! Hash-consed zero-suppressed decision diagrams.
//!
//! A [`ZddStore`] owns every node; a [`ZddRef`] is a handle into one store
//! and denotes a family of sets of variables. A variable skipped along a
//! root-to-`T1` path is absent from the corresponding set.
//!
//! The store keeps diagrams reduced at all times: [`ZddStore::make_node`]
//! never creates a node whose 1-edge reaches `T0`, and the unique table
//! guarantees that two handles of one store are equal exactly when they
//! denote the same family.
//!
//! Size convention: [`ZddStore::node_count`] counts the reachable terminals
//! as vertices, so `{{v}}` has size 3 and a bare terminal has size 1.

use std::collections::hash_map::Entry;
use std::fmt::Write as _;
use std::ops::ControlFlow;
use std::sync::atomic::{AtomicU32, Ordering};

use num_bigint::BigUint;
use rustc_hash::FxHashMap;

use crate::{Error, Result};

/// A variable, identified by its level; smaller levels sit closer to the root.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub u32);

impl VarId {
    pub fn level(self) -> u32 {
        self.0
    }
}

/// A deterministic reader of the values of some variables, used by
/// [`ZddStore::filter_by`]. A member is accepted when every step on its
/// values, read in level order, returns a state.
pub trait LevelAutomaton {
    type State: Copy + Eq + std::hash::Hash;

    /// Variables read, strictly ascending.
    fn levels(&self) -> &[VarId];

    fn start(&self) -> Self::State;

    /// Reads the value of `levels()[k]`; `None` rejects.
    fn step(&self, state: Self::State, k: usize, bit: bool) -> Option<Self::State>;

    /// True when every continuation from `state` before reading level `k`
    /// is accepted.
    fn settled(&self, _state: Self::State, _k: usize) -> bool {
        false
    }
}

/// Handle to a node (or terminal) of one [`ZddStore`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ZddRef {
    store: u32,
    id: u32,
}

impl ZddRef {
    pub fn is_empty_family(self) -> bool {
        self.id == EMPTY
    }

    pub fn is_unit_family(self) -> bool {
        self.id == UNIT
    }
}

const EMPTY: u32 = 0;
const UNIT: u32 = 1;
const TERMINAL_LEVEL: u32 = u32::MAX;

#[derive(Clone, Copy, Debug)]
struct Node {
    var: u32,
    lo: u32,
    hi: u32,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum Op {
    Union,
    Intersect,
    Offset,
    Onset,
    WithVar,
    Implication,
    Exclusion,
}

static NEXT_STORE: AtomicU32 = AtomicU32::new(1);

pub struct ZddStore {
    id: u32,
    num_vars: u32,
    nodes: Vec<Node>,
    unique: FxHashMap<(u32, u32, u32), u32>,
    cache: FxHashMap<(Op, u32, u32, u32), u32>,
}

impl ZddStore {
    /// A store over variables `0..num_vars`.
    pub fn new(num_vars: u32) -> Self {
        let terminal = Node {
            var: TERMINAL_LEVEL,
            lo: EMPTY,
            hi: EMPTY,
        };
        ZddStore {
            id: NEXT_STORE.fetch_add(1, Ordering::Relaxed),
            num_vars,
            nodes: vec![terminal, terminal],
            unique: FxHashMap::default(),
            cache: FxHashMap::default(),
        }
    }

    pub fn num_vars(&self) -> u32 {
        self.num_vars
    }

    /// Nodes held in the arena, dead ones included.
    pub fn arena_len(&self) -> usize {
        self.nodes.len()
    }

    /// The empty family (`T0`).
    pub fn empty(&self) -> ZddRef {
        self.handle(EMPTY)
    }

    /// The family `{∅}` (`T1`).
    pub fn unit(&self) -> ZddRef {
        self.handle(UNIT)
    }

    /// `{{v}}`.
    pub fn singleton(&mut self, v: VarId) -> Result<ZddRef> {
        self.check_var(v)?;
        let r = self.mk(v.0, EMPTY, UNIT);
        Ok(self.handle(r))
    }

    /// Every subset of the store's variables.
    pub fn power_set(&mut self) -> ZddRef {
        let mut f = UNIT;
        for v in (0..self.num_vars).rev() {
            f = self.mk(v, f, f);
        }
        self.handle(f)
    }

    /// Returns the reduced node `(v, lo, hi)`: `lo` itself when `hi` is `T0`,
    /// otherwise the unique stored node with these fields.
    pub fn make_node(&mut self, v: VarId, lo: ZddRef, hi: ZddRef) -> Result<ZddRef> {
        self.check_var(v)?;
        let (lo, hi) = (self.own(lo)?, self.own(hi)?);
        if self.level(lo) <= v.0 || self.level(hi) <= v.0 {
            return Err(Error::usage(format!(
                "variable {} must precede the levels of both children",
                v.0
            )));
        }
        let r = self.mk(v.0, lo, hi);
        Ok(self.handle(r))
    }

    pub fn union(&mut self, f: ZddRef, g: ZddRef) -> Result<ZddRef> {
        let (f, g) = (self.own(f)?, self.own(g)?);
        let r = self.union_id(f, g);
        Ok(self.handle(r))
    }

    pub fn intersection(&mut self, f: ZddRef, g: ZddRef) -> Result<ZddRef> {
        let (f, g) = (self.own(f)?, self.own(g)?);
        let r = self.intersect_id(f, g);
        Ok(self.handle(r))
    }

    /// Restriction `f[x_v = bit]`: with `bit = false` the members without
    /// `v`; with `bit = true` the members with `v`, `v` removed.
    pub fn cofactor(&mut self, f: ZddRef, v: VarId, bit: bool) -> Result<ZddRef> {
        let f = self.own(f)?;
        self.check_var(v)?;
        let r = if bit { self.onset(f, v.0) } else { self.offset(f, v.0) };
        Ok(self.handle(r))
    }

    /// Members of `f` that contain `v`, kept intact.
    pub fn with_var(&mut self, f: ZddRef, v: VarId) -> Result<ZddRef> {
        let f = self.own(f)?;
        self.check_var(v)?;
        let r = self.with_var_id(f, v.0);
        Ok(self.handle(r))
    }

    /// Members of `f` that do not contain `v`; same as `cofactor(f, v, false)`.
    pub fn without_var(&mut self, f: ZddRef, v: VarId) -> Result<ZddRef> {
        self.cofactor(f, v, false)
    }

    /// `{X ∪ {v} : X ∈ f}`; `v` must precede every variable of `f`.
    pub fn attach(&mut self, f: ZddRef, v: VarId) -> Result<ZddRef> {
        let f = self.own(f)?;
        self.check_var(v)?;
        if self.level(f) <= v.0 {
            return Err(Error::usage(format!(
                "attach: variable {} does not precede the support",
                v.0
            )));
        }
        let r = self.mk(v.0, EMPTY, f);
        Ok(self.handle(r))
    }

    /// `{X ∈ f : u ∈ X ⇒ v ∈ X}`.
    pub fn filter_implication(&mut self, f: ZddRef, u: VarId, v: VarId) -> Result<ZddRef> {
        let f = self.own(f)?;
        self.check_pair(u, v)?;
        let r = self.implication_id(f, u.0, v.0);
        Ok(self.handle(r))
    }

    /// `{X ∈ f : ¬(u ∈ X ∧ v ∈ X)}`.
    pub fn filter_exclusion(&mut self, f: ZddRef, u: VarId, v: VarId) -> Result<ZddRef> {
        let f = self.own(f)?;
        self.check_pair(u, v)?;
        let (a, b) = if u.0 < v.0 { (u.0, v.0) } else { (v.0, u.0) };
        let r = self.exclusion_id(f, a, b);
        Ok(self.handle(r))
    }

    /// Members of `f` accepted by `rule`, in one pass over `f`.
    pub fn filter_by<A: LevelAutomaton>(&mut self, f: ZddRef, rule: &A) -> Result<ZddRef> {
        let f = self.own(f)?;
        let levels = rule.levels();
        if levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::usage("automaton levels must be strictly ascending"));
        }
        if let Some(&v) = levels.last() {
            self.check_var(v)?;
        }
        let mut memo = FxHashMap::default();
        let r = self.automaton_id(f, 0, rule.start(), rule, &mut memo);
        Ok(self.handle(r))
    }

    /// Number of members, exact at any magnitude.
    pub fn count(&self, f: ZddRef) -> Result<BigUint> {
        let root = self.own(f)?;
        let mut memo: FxHashMap<u32, BigUint> = FxHashMap::default();
        memo.insert(EMPTY, BigUint::ZERO);
        memo.insert(UNIT, BigUint::from(1u8));
        for id in self.postorder(root) {
            if memo.contains_key(&id) {
                continue;
            }
            let node = self.nodes[id as usize];
            let c = &memo[&node.lo] + &memo[&node.hi];
            memo.insert(id, c);
        }
        Ok(memo.remove(&root).expect("root counted"))
    }

    /// Visits every member once, depth first with the 0-edge explored before
    /// the 1-edge. Members are passed as ascending variable lists. Stops early
    /// when the visitor breaks; returns the number of members visited.
    pub fn enumerate<F>(&self, f: ZddRef, mut visitor: F) -> Result<u64>
    where
        F: FnMut(&[VarId]) -> ControlFlow<()>,
    {
        let root = self.own(f)?;
        let mut path = Vec::new();
        let mut visited = 0;
        let _ = self.walk(root, &mut path, &mut visited, &mut visitor);
        Ok(visited)
    }

    /// All members, in enumeration order.
    pub fn members(&self, f: ZddRef) -> Result<Vec<Vec<VarId>>> {
        let mut out = Vec::new();
        self.enumerate(f, |m| {
            out.push(m.to_vec());
            ControlFlow::Continue(())
        })?;
        Ok(out)
    }

    /// Distinct vertices reachable from `f`, terminals included.
    pub fn node_count(&self, f: ZddRef) -> Result<usize> {
        let root = self.own(f)?;
        let mut seen = vec![0u64; self.nodes.len().div_ceil(64)];
        let mut stack = vec![root];
        let mut size = 0;
        while let Some(id) = stack.pop() {
            let (word, bit) = (id as usize / 64, 1u64 << (id % 64));
            if seen[word] & bit != 0 {
                continue;
            }
            seen[word] |= bit;
            size += 1;
            if id > UNIT {
                let node = self.nodes[id as usize];
                stack.push(node.hi);
                stack.push(node.lo);
            }
        }
        Ok(size)
    }

    /// Variables occurring in some member of `f`, ascending.
    pub fn support(&self, f: ZddRef) -> Result<Vec<VarId>> {
        let root = self.own(f)?;
        let mut vars: Vec<u32> = self
            .postorder(root)
            .into_iter()
            .filter(|&id| id > UNIT)
            .map(|id| self.nodes[id as usize].var)
            .collect();
        vars.sort_unstable();
        vars.dedup();
        Ok(vars.into_iter().map(VarId).collect())
    }

    /// Text dump: one line `id<TAB>level<TAB>lo<TAB>hi` per decision node,
    /// ordered by level; terminals are referenced as `T0`/`T1`. Ids are
    /// assigned in output order, ties broken by a 0-edge-first traversal, so
    /// the text depends only on the family.
    pub fn dump(&self, f: ZddRef) -> Result<String> {
        let root = self.own(f)?;
        let mut order = Vec::new();
        let mut seen = FxHashMap::default();
        let mut stack = vec![root];
        while let Some(id) = stack.pop() {
            if id <= UNIT || seen.contains_key(&id) {
                continue;
            }
            seen.insert(id, order.len());
            order.push(id);
            let node = self.nodes[id as usize];
            stack.push(node.hi);
            stack.push(node.lo);
        }
        order.sort_by_key(|&id| (self.nodes[id as usize].var, seen[&id]));
        let names: FxHashMap<u32, String> = order.iter().enumerate().map(|(k, &id)| (id, k.to_string())).collect();
        let name = |id: u32| match id {
            EMPTY => "T0".to_string(),
            UNIT => "T1".to_string(),
            _ => names[&id].clone(),
        };
        let mut out = String::new();
        for &id in &order {
            let node = self.nodes[id as usize];
            let _ = writeln!(out, "{}\t{}\t{}\t{}", name(id), node.var, name(node.lo), name(node.hi));
        }
        Ok(out)
    }

    /// Memoized operation results currently held.
    pub fn cache_len(&self) -> usize {
        self.cache.len()
    }

    /// Drops all memoized operation results. Semantics are unaffected.
    pub fn clear_caches(&mut self) {
        self.cache.clear();
    }

    /// Rebuilds the arena keeping only nodes reachable from `roots`, and
    /// returns the relocated roots. The store takes a fresh identity, so any
    /// handle obtained before compaction is rejected afterwards.
    pub fn compact(&mut self, roots: &[ZddRef]) -> Result<Vec<ZddRef>> {
        let ids = roots.iter().map(|&r| self.own(r)).collect::<Result<Vec<_>>>()?;
        let mut fresh = ZddStore::new(self.num_vars);
        let mut remap: FxHashMap<u32, u32> = FxHashMap::default();
        remap.insert(EMPTY, EMPTY);
        remap.insert(UNIT, UNIT);
        for &root in &ids {
            for id in self.postorder(root) {
                if remap.contains_key(&id) {
                    continue;
                }
                let node = self.nodes[id as usize];
                let new_id = fresh.mk(node.var, remap[&node.lo], remap[&node.hi]);
                remap.insert(id, new_id);
            }
        }
        *self = fresh;
        Ok(ids.iter().map(|id| self.handle(remap[id])).collect())
    }

    fn handle(&self, id: u32) -> ZddRef {
        ZddRef { store: self.id, id }
    }

    fn own(&self, r: ZddRef) -> Result<u32> {
        if r.store != self.id {
            return Err(Error::usage("diagram handle belongs to a different store"));
        }
        Ok(r.id)
    }

    fn check_var(&self, v: VarId) -> Result<()> {
        if v.0 >= self.num_vars {
            return Err(Error::usage(format!(
                "variable {} outside store of {} variables",
                v.0, self.num_vars
            )));
        }
        Ok(())
    }

    fn check_pair(&self, u: VarId, v: VarId) -> Result<()> {
        self.check_var(u)?;
        self.check_var(v)?;
        if u == v {
            return Err(Error::usage("filter needs two distinct variables"));
        }
        Ok(())
    }

    fn level(&self, id: u32) -> u32 {
        self.nodes[id as usize].var
    }

    fn mk(&mut self, var: u32, lo: u32, hi: u32) -> u32 {
        if hi == EMPTY {
            return lo;
        }
        match self.unique.entry((var, lo, hi)) {
            Entry::Occupied(e) => *e.get(),
            Entry::Vacant(e) => {
                let id = u32::try_from(self.nodes.len()).expect("node arena exceeds u32 range");
                self.nodes.push(Node { var, lo, hi });
                e.insert(id);
                id
            }
        }
    }

    /// Reachable ids with children listed before parents.
    fn postorder(&self, root: u32) -> Vec<u32> {
        let mut out = Vec::new();
        let mut seen = vec![0u64; self.nodes.len().div_ceil(64)];
        let mut stack = vec![(root, false)];
        while let Some((id, expanded)) = stack.pop() {
            if expanded {
                out.push(id);
                continue;
            }
            let (word, bit) = (id as usize / 64, 1u64 << (id % 64));
            if seen[word] & bit != 0 {
                continue;
            }
            seen[word] |= bit;
            stack.push((id, true));
            if id > UNIT {
                let node = self.nodes[id as usize];
                stack.push((node.hi, false));
                stack.push((node.lo, false));
            }
        }
        out
    }

    fn walk<F>(&self, id: u32, path: &mut Vec<VarId>, visited: &mut u64, visitor: &mut F) -> ControlFlow<()>
    where
        F: FnMut(&[VarId]) -> ControlFlow<()>,
    {
        match id {
            EMPTY => ControlFlow::Continue(()),
            UNIT => {
                *visited += 1;
                visitor(path)
            }
            _ => {
                let node = self.nodes[id as usize];
                self.walk(node.lo, path, visited, visitor)?;
                path.push(VarId(node.var));
                let flow = self.walk(node.hi, path, visited, visitor);
                path.pop();
                flow
            }
        }
    }

    fn cached(&self, op: Op, a: u32, b: u32, c: u32) -> Option<u32> {
        self.cache.get(&(op, a, b, c)).copied()
    }

    fn union_id(&mut self, f: u32, g: u32) -> u32 {
        if f == EMPTY || f == g {
            return g;
        }
        if g == EMPTY {
            return f;
        }
        let (f, g) = if f < g { (f, g) } else { (g, f) };
        if let Some(r) = self.cached(Op::Union, f, g, 0) {
            return r;
        }
        let (nf, ng) = (self.nodes[f as usize], self.nodes[g as usize]);
        let r = if nf.var < ng.var {
            let lo = self.union_id(nf.lo, g);
            self.mk(nf.var, lo, nf.hi)
        } else if ng.var < nf.var {
            let lo = self.union_id(f, ng.lo);
            self.mk(ng.var, lo, ng.hi)
        } else {
            let lo = self.union_id(nf.lo, ng.lo);
            let hi = self.union_id(nf.hi, ng.hi);
            self.mk(nf.var, lo, hi)
        };
        self.cache.insert((Op::Union, f, g, 0), r);
        r
    }

    fn intersect_id(&mut self, f: u32, g: u32) -> u32 {
        if f == EMPTY || g == EMPTY {
            return EMPTY;
        }
        if f == g {
            return f;
        }
        let (f, g) = if f < g { (f, g) } else { (g, f) };
        if let Some(r) = self.cached(Op::Intersect, f, g, 0) {
            return r;
        }
        let (nf, ng) = (self.nodes[f as usize], self.nodes[g as usize]);
        // a terminal has the maximal level, so only a node can win here
        let r = if nf.var < ng.var {
            self.intersect_id(nf.lo, g)
        } else if ng.var < nf.var {
            self.intersect_id(f, ng.lo)
        } else {
            let lo = self.intersect_id(nf.lo, ng.lo);
            let hi = self.intersect_id(nf.hi, ng.hi);
            self.mk(nf.var, lo, hi)
        };
        self.cache.insert((Op::Intersect, f, g, 0), r);
        r
    }

    fn offset(&mut self, f: u32, v: u32) -> u32 {
        let node = self.nodes[f as usize];
        if node.var > v {
            return f;
        }
        if node.var == v {
            return node.lo;
        }
        if let Some(r) = self.cached(Op::Offset, f, v, 0) {
            return r;
        }
        let lo = self.offset(node.lo, v);
        let hi = self.offset(node.hi, v);
        let r = self.mk(node.var, lo, hi);
        self.cache.insert((Op::Offset, f, v, 0), r);
        r
    }

    fn onset(&mut self, f: u32, v: u32) -> u32 {
        let node = self.nodes[f as usize];
        if node.var > v {
            return EMPTY;
        }
        if node.var == v {
            return node.hi;
        }
        if let Some(r) = self.cached(Op::Onset, f, v, 0) {
            return r;
        }
        let lo = self.onset(node.lo, v);
        let hi = self.onset(node.hi, v);
        let r = self.mk(node.var, lo, hi);
        self.cache.insert((Op::Onset, f, v, 0), r);
        r
    }

    fn with_var_id(&mut self, f: u32, v: u32) -> u32 {
        let node = self.nodes[f as usize];
        if node.var > v {
            return EMPTY;
        }
        if node.var == v {
            return self.mk(v, EMPTY, node.hi);
        }
        if let Some(r) = self.cached(Op::WithVar, f, v, 0) {
            return r;
        }
        let lo = self.with_var_id(node.lo, v);
        let hi = self.with_var_id(node.hi, v);
        let r = self.mk(node.var, lo, hi);
        self.cache.insert((Op::WithVar, f, v, 0), r);
        r
    }

    fn implication_id(&mut self, f: u32, u: u32, v: u32) -> u32 {
        let node = self.nodes[f as usize];
        let top = u.min(v);
        if node.var > top {
            // the upper of the two variables never occurs below this point
            return if top == u { f } else { self.offset(f, u) };
        }
        if node.var == top {
            return if top == u {
                let hi = self.with_var_id(node.hi, v);
                self.mk(u, node.lo, hi)
            } else {
                let lo = self.offset(node.lo, u);
                self.mk(v, lo, node.hi)
            };
        }
        if let Some(r) = self.cached(Op::Implication, f, u, v) {
            return r;
        }
        let lo = self.implication_id(node.lo, u, v);
        let hi = self.implication_id(node.hi, u, v);
        let r = self.mk(node.var, lo, hi);
        self.cache.insert((Op::Implication, f, u, v), r);
        r
    }

    /// Requires `a < b`.
    fn exclusion_id(&mut self, f: u32, a: u32, b: u32) -> u32 {
        let node = self.nodes[f as usize];
        if node.var > a {
            return f;
        }
        if node.var == a {
            let hi = self.offset(node.hi, b);
            return self.mk(a, node.lo, hi);
        }
        if let Some(r) = self.cached(Op::Exclusion, f, a, b) {
            return r;
        }
        let lo = self.exclusion_id(node.lo, a, b);
        let hi = self.exclusion_id(node.hi, a, b);
        let r = self.mk(node.var, lo, hi);
        self.cache.insert((Op::Exclusion, f, a, b), r);
        r
    }

    fn automaton_id<A: LevelAutomaton>(
        &mut self,
        f: u32,
        mut k: usize,
        mut state: A::State,
        rule: &A,
        memo: &mut FxHashMap<(u32, A::State), u32>,
    ) -> u32 {
        let levels = rule.levels();
        let var = self.level(f);
        // skipped levels read as 0
        while k < levels.len() && levels[k].0 < var {
            match rule.step(state, k, false) {
                Some(s) => state = s,
                None => return EMPTY,
            }
            k += 1;
        }
        if k == levels.len() || rule.settled(state, k) {
            return f;
        }
        if let Some(&r) = memo.get(&(f, state)) {
            return r;
        }
        let node = self.nodes[f as usize];
        let r = if levels[k].0 == node.var {
            let lo = match rule.step(state, k, false) {
                Some(s) => self.automaton_id(node.lo, k + 1, s, rule, memo),
                None => EMPTY,
            };
            let hi = match rule.step(state, k, true) {
                Some(s) => self.automaton_id(node.hi, k + 1, s, rule, memo),
                None => EMPTY,
            };
            self.mk(node.var, lo, hi)
        } else {
            let lo = self.automaton_id(node.lo, k, state, rule, memo);
            let hi = self.automaton_id(node.hi, k, state, rule, memo);
            self.mk(node.var, lo, hi)
        };
        memo.insert((f, state), r);
        r
    }

    #[cfg(test)]
    fn reachable_nodes(&self, f: ZddRef) -> Vec<(u32, u32, u32)> {
        self.postorder(f.id)
            .into_iter()
            .filter(|&id| id > UNIT)
            .map(|id| {
                let n = self.nodes[id as usize];
                (n.var, n.lo, n.hi)
            })
            .collect()
    }
}
