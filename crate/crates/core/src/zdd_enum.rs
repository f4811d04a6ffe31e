//! Compiling every solution of an instance into one ZDD.
//!
//! Only undecided pairs `(i, e)` with `e ∈ U_i \ L_i` get diagram variables;
//! pairs fixed by the bounds are substituted as constants. Starting from the
//! family of all subsets of the free variables, each unordered pair of
//! characters `{i, j}` restricts the family to members where `S_i ⊆ S_j`,
//! `S_j ⊆ S_i` or `S_i ∩ S_j = ∅`, by applying one element-wise filter per
//! species for each of the three relations and taking the union.

use std::ops::ControlFlow;
use std::time::{Duration, Instant};

use num_bigint::BigUint;

use crate::zdd::{LevelAutomaton, VarId, ZddRef, ZddStore};
use crate::{Error, Instance, Phylogeny, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum VarOrder {
    /// Levels sorted by `(character, species)`.
    #[default]
    CharacterMajor,
    /// Levels sorted by `(species, character)`.
    ElementMajor,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum PairSchedule {
    /// Pairs `{i, j}` in lexicographic order.
    #[default]
    Lexicographic,
    /// Pairs whose bounds admit at most one relation first, then the rest;
    /// lexicographic inside each group.
    Deferred,
    /// The groups of [`PairSchedule::Deferred`], each sorted by `j - i`
    /// and then by `i`, so pairs of nearby characters come first.
    DeferredNearest,
}

/// How a pair step restricts the current family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum StepMethod {
    /// One traversal per pair, tracking which of "only in `S_i`", "only in
    /// `S_j`" and "in both" has occurred and rejecting when all three have.
    #[default]
    SinglePass,
    /// The union of the three relation-wise subfamilies, each built by one
    /// implication or exclusion filter per species.
    PerRelation,
}

/// How one `(character, species)` pair is realized.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Slot {
    /// `e ∈ L_i`.
    One,
    /// `e ∉ U_i`.
    Zero,
    Free(VarId),
}

/// Assignment of diagram levels to the undecided pairs of an instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarMap {
    n: usize,
    slots: Vec<Slot>,
    levels: Vec<(usize, usize)>,
}

impl VarMap {
    pub fn slot(&self, i: usize, e: usize) -> Slot {
        self.slots[i * self.n + e]
    }

    pub fn num_vars(&self) -> usize {
        self.levels.len()
    }

    /// The `(character, species)` pair behind a level.
    pub fn pair(&self, v: VarId) -> Option<(usize, usize)> {
        self.levels.get(v.0 as usize).copied()
    }
}

pub fn make_order(inst: &Instance, order: VarOrder) -> VarMap {
    let (m, n) = (inst.m(), inst.n());
    let mut slots = Vec::with_capacity(m * n);
    let mut free = Vec::new();
    for i in 0..m {
        for e in 0..n {
            if inst.lower()[i].contains(e) {
                slots.push(Slot::One);
            } else if inst.upper()[i].contains(e) {
                slots.push(Slot::Free(VarId(0)));
                free.push((i, e));
            } else {
                slots.push(Slot::Zero);
            }
        }
    }
    if order == VarOrder::ElementMajor {
        free.sort_by_key(|&(i, e)| (e, i));
    }
    for (level, &(i, e)) in free.iter().enumerate() {
        slots[i * n + e] = Slot::Free(VarId(level as u32));
    }
    VarMap { n, slots, levels: free }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BuildStats {
    /// Size of the final diagram, terminals included.
    pub final_nodes: usize,
    /// Largest size seen, measured on the initial family and after every
    /// pair step.
    pub peak_nodes: usize,
    pub pair_steps: usize,
    pub wall_time: Duration,
    /// Size after each pair step, in processing order.
    pub trace: Vec<usize>,
}

/// A finished diagram together with the store that owns it.
pub struct ZddSolution {
    pub store: ZddStore,
    pub root: ZddRef,
    pub vm: VarMap,
    pub stats: BuildStats,
}

impl ZddSolution {
    pub fn count(&self) -> BigUint {
        self.store.count(self.root).expect("root belongs to store")
    }

    pub fn node_count(&self) -> usize {
        self.stats.final_nodes
    }

    /// Visits the solutions in diagram order until the visitor breaks.
    pub fn for_each_solution<F>(&self, inst: &Instance, mut visitor: F) -> Result<u64>
    where
        F: FnMut(Phylogeny) -> ControlFlow<()>,
    {
        let mut failure = None;
        let visited = self
            .store
            .enumerate(self.root, |member| match solution_of(member, &self.vm, inst) {
                Ok(p) => visitor(p),
                Err(e) => {
                    failure = Some(e);
                    ControlFlow::Break(())
                }
            })?;
        match failure {
            Some(e) => Err(e),
            None => Ok(visited),
        }
    }

    pub fn solutions(&self, inst: &Instance) -> Result<Vec<Phylogeny>> {
        let mut out = Vec::new();
        self.for_each_solution(inst, |p| {
            out.push(p);
            ControlFlow::Continue(())
        })?;
        Ok(out)
    }
}

pub enum BuildOutcome {
    Complete(ZddSolution),
    /// The deadline passed; the statistics cover the steps that finished.
    TimedOut(BuildStats),
}

impl BuildOutcome {
    pub fn complete(self) -> Option<ZddSolution> {
        match self {
            BuildOutcome::Complete(s) => Some(s),
            BuildOutcome::TimedOut(_) => None,
        }
    }
}

/// Builds with the given ordering policies; see [`build`].
pub fn solve(
    inst: &Instance,
    order: VarOrder,
    schedule: PairSchedule,
    deadline: Option<Duration>,
) -> Result<BuildOutcome> {
    let vm = make_order(inst, order);
    build(inst, vm, schedule, deadline)
}

/// Arena size beyond which dead nodes are collected between pair steps.
const COMPACT_MIN_ARENA: usize = 1 << 21;
const CACHE_LIMIT: usize = 1 << 22;

pub fn build(inst: &Instance, vm: VarMap, schedule: PairSchedule, deadline: Option<Duration>) -> Result<BuildOutcome> {
    build_with(inst, vm, schedule, StepMethod::default(), deadline)
}

/// Starts from every subset of the free variables and restricts by one
/// pair step per unordered character pair, in `schedule` order.
pub fn build_with(
    inst: &Instance,
    vm: VarMap,
    schedule: PairSchedule,
    method: StepMethod,
    deadline: Option<Duration>,
) -> Result<BuildOutcome> {
    if vm.slots.len() != inst.m() * inst.n() {
        return Err(Error::usage("variable map was built for a different instance"));
    }
    let started = Instant::now();
    let expired = || deadline.is_some_and(|d| started.elapsed() > d);
    let mut store = ZddStore::new(vm.num_vars() as u32);
    let mut g = store.power_set();
    let mut stats = BuildStats {
        peak_nodes: store.node_count(g)?,
        ..BuildStats::default()
    };

    for (i, j) in pair_order(inst, schedule) {
        if g.is_empty_family() {
            break;
        }
        let Some(next) = pair_step(&mut store, g, &vm, i, j, method, &expired)? else {
            stats.wall_time = started.elapsed();
            return Ok(BuildOutcome::TimedOut(stats));
        };
        stats.pair_steps += 1;
        let size = match (next == g, stats.trace.last()) {
            (true, Some(&size)) => size,
            _ => store.node_count(next)?,
        };
        g = next;
        stats.trace.push(size);
        stats.peak_nodes = stats.peak_nodes.max(size);

        if store.arena_len() > COMPACT_MIN_ARENA && store.arena_len() > 8 * size {
            g = store.compact(&[g])?[0];
        } else if store.cache_len() > CACHE_LIMIT {
            store.clear_caches();
        }
    }

    stats.final_nodes = store.node_count(g)?;
    stats.wall_time = started.elapsed();
    Ok(BuildOutcome::Complete(ZddSolution {
        store,
        root: g,
        vm,
        stats,
    }))
}

fn pair_order(inst: &Instance, schedule: PairSchedule) -> Vec<(usize, usize)> {
    let m = inst.m();
    let pairs = (0..m).flat_map(|i| (i + 1..m).map(move |j| (i, j)));
    match schedule {
        PairSchedule::Lexicographic => pairs.collect(),
        PairSchedule::Deferred | PairSchedule::DeferredNearest => {
            let (mut early, mut late): (Vec<_>, Vec<_>) =
                pairs.partition(|&(i, j)| possible_relations(inst, i, j) <= 1);
            if schedule == PairSchedule::DeferredNearest {
                early.sort_by_key(|&(i, j)| (j - i, i));
                late.sort_by_key(|&(i, j)| (j - i, i));
            }
            early.append(&mut late);
            early
        }
    }
}

/// How many of the three relations the bounds of `i` and `j` leave open.
fn possible_relations(inst: &Instance, i: usize, j: usize) -> usize {
    let (l, u) = (inst.lower(), inst.upper());
    [l[i].is_subset(&u[j]), l[j].is_subset(&u[i]), l[i].is_disjoint(&l[j])]
        .into_iter()
        .filter(|&b| b)
        .count()
}

#[derive(Clone, Copy)]
enum Relation {
    /// `S_i ⊆ S_j`
    Within,
    /// `S_j ⊆ S_i`
    Contains,
    Disjoint,
}

/// `None` when the deadline passed.
fn pair_step(
    store: &mut ZddStore,
    g: ZddRef,
    vm: &VarMap,
    i: usize,
    j: usize,
    method: StepMethod,
    expired: &dyn Fn() -> bool,
) -> Result<Option<ZddRef>> {
    if method == StepMethod::PerRelation {
        return union_of_relations(store, g, vm, i, j, expired);
    }
    match PairRule::new(vm, i, j) {
        Some(rule) if rule.start & EVENTS == EVENTS => Ok(Some(store.empty())),
        Some(rule) if rule.settled(rule.start, 0) => Ok(Some(g)),
        Some(rule) => {
            let r = store.filter_by(g, &rule)?;
            Ok((!expired()).then_some(r))
        }
        None => union_of_relations(store, g, vm, i, j, expired),
    }
}

fn union_of_relations(
    store: &mut ZddStore,
    g: ZddRef,
    vm: &VarMap,
    i: usize,
    j: usize,
    expired: &dyn Fn() -> bool,
) -> Result<Option<ZddRef>> {
    let mut acc = store.empty();
    for rel in [Relation::Within, Relation::Contains, Relation::Disjoint] {
        let Some(part) = relation_filter(store, g, vm, i, j, rel, expired)? else {
            return Ok(None);
        };
        // every part is a subfamily of g
        if part == g {
            return Ok(Some(g));
        }
        acc = store.union(acc, part)?;
    }
    Ok(Some(acc))
}

// event bits of a pair: a species in S_i only, in S_j only, in both
const ONLY_I: u64 = 1;
const ONLY_J: u64 = 2;
const BOTH: u64 = 4;
const EVENTS: u64 = 7;
const MAX_PENDING: usize = 61;

#[derive(Clone, Copy)]
enum Partner {
    Fixed(bool),
    /// The partner variable comes later; remember this value in bit `k`.
    First(u32),
    /// The partner's value was remembered in bit `k`.
    Second(u32),
}

#[derive(Clone, Copy)]
struct Action {
    side_i: bool,
    partner: Partner,
}

/// Accepts the members where `S_i` and `S_j` are nested or disjoint: the
/// state collects which of the three species events occurred, and a member
/// is rejected once all three have.
struct PairRule {
    levels: Vec<VarId>,
    actions: Vec<Action>,
    start: u64,
    /// Events some level from `k` on can still produce.
    reachable: Vec<u64>,
}

fn event(in_i: bool, in_j: bool) -> u64 {
    match (in_i, in_j) {
        (true, false) => ONLY_I,
        (false, true) => ONLY_J,
        (true, true) => BOTH,
        (false, false) => 0,
    }
}

impl PairRule {
    /// `None` when too many species are free on both sides.
    fn new(vm: &VarMap, i: usize, j: usize) -> Option<PairRule> {
        let mut start = 0;
        let mut entries = Vec::new();
        let mut pending = 0u32;
        for e in 0..vm.n {
            match (vm.slot(i, e), vm.slot(j, e)) {
                (Slot::Free(u), Slot::Free(v)) => {
                    if pending as usize == MAX_PENDING {
                        return None;
                    }
                    let k = pending;
                    pending += 1;
                    let (first, second) = if u < v {
                        ((u, true), (v, false))
                    } else {
                        ((v, false), (u, true))
                    };
                    entries.push((
                        first.0,
                        Action {
                            side_i: first.1,
                            partner: Partner::First(k),
                        },
                    ));
                    entries.push((
                        second.0,
                        Action {
                            side_i: second.1,
                            partner: Partner::Second(k),
                        },
                    ));
                }
                (Slot::Free(u), b) => entries.push((
                    u,
                    Action {
                        side_i: true,
                        partner: Partner::Fixed(b == Slot::One),
                    },
                )),
                (a, Slot::Free(v)) => entries.push((
                    v,
                    Action {
                        side_i: false,
                        partner: Partner::Fixed(a == Slot::One),
                    },
                )),
                (a, b) => start |= event(a == Slot::One, b == Slot::One),
            }
        }
        entries.sort_by_key(|&(v, _)| v);
        let mut reachable = vec![0; entries.len() + 1];
        for k in (0..entries.len()).rev() {
            let a = entries[k].1;
            let produced = match a.partner {
                Partner::Fixed(other) if a.side_i => event(true, other) | event(false, other),
                Partner::Fixed(other) => event(other, true) | event(other, false),
                Partner::First(_) => 0,
                Partner::Second(_) => EVENTS,
            };
            reachable[k] = reachable[k + 1] | produced;
        }
        let (levels, actions) = entries.into_iter().unzip();
        Some(PairRule {
            levels,
            actions,
            start,
            reachable,
        })
    }
}

impl LevelAutomaton for PairRule {
    type State = u64;

    fn levels(&self) -> &[VarId] {
        &self.levels
    }

    fn start(&self) -> u64 {
        self.start
    }

    fn step(&self, state: u64, k: usize, bit: bool) -> Option<u64> {
        let a = self.actions[k];
        let (state, other) = match a.partner {
            Partner::Fixed(other) => (state, other),
            Partner::First(p) => return Some(state | u64::from(bit) << (3 + p)),
            Partner::Second(p) => {
                let mask = 1 << (3 + p);
                (state & !mask, state & mask != 0)
            }
        };
        let ev = if a.side_i { event(bit, other) } else { event(other, bit) };
        let next = state | ev;
        (next & EVENTS != EVENTS).then_some(next)
    }

    fn settled(&self, state: u64, k: usize) -> bool {
        (state | self.reachable[k]) & EVENTS != EVENTS
    }
}

fn relation_filter(
    store: &mut ZddStore,
    mut g: ZddRef,
    vm: &VarMap,
    i: usize,
    j: usize,
    rel: Relation,
    expired: &dyn Fn() -> bool,
) -> Result<Option<ZddRef>> {
    use Slot::*;
    for e in 0..vm.n {
        let (a, b) = match rel {
            Relation::Within | Relation::Disjoint => (vm.slot(i, e), vm.slot(j, e)),
            Relation::Contains => (vm.slot(j, e), vm.slot(i, e)),
        };
        let next = match rel {
            // a ⇒ b
            Relation::Within | Relation::Contains => match (a, b) {
                (Zero, _) | (_, One) => continue,
                (One, Zero) => return Ok(Some(store.empty())),
                (One, Free(v)) => store.with_var(g, v)?,
                (Free(u), Zero) => store.without_var(g, u)?,
                (Free(u), Free(v)) => store.filter_implication(g, u, v)?,
            },
            // ¬(a ∧ b)
            Relation::Disjoint => match (a, b) {
                (Zero, _) | (_, Zero) => continue,
                (One, One) => return Ok(Some(store.empty())),
                (One, Free(v)) | (Free(v), One) => store.without_var(g, v)?,
                (Free(u), Free(v)) => store.filter_exclusion(g, u, v)?,
            },
        };
        if expired() {
            return Ok(None);
        }
        g = next;
        if g.is_empty_family() {
            break;
        }
    }
    Ok(Some(g))
}

/// Maps a diagram member back to species sets: `S_i = L_i` plus the species
/// of every member variable belonging to character `i`.
pub fn solution_of(member: &[VarId], vm: &VarMap, inst: &Instance) -> Result<Phylogeny> {
    let mut sets = inst.lower().to_vec();
    for &v in member {
        let (i, e) = vm
            .pair(v)
            .ok_or_else(|| Error::usage(format!("variable {} not in the variable map", v.0)))?;
        sets[i].insert(e);
    }
    Ok(Phylogeny::new(sets))
}
