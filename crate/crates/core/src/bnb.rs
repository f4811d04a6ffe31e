//! Branch-and-bound enumeration.
//!
//! Each search node is an instance. It is pruned when [`feasible`] rejects
//! it, reported when every character is decided (`L_i = U_i`), and otherwise
//! split on the first undecided pair `(j, e)`: one child puts `e` into
//! `L_j`, the other removes it from `U_j`. The two children partition the
//! solutions, so nothing is reported twice.
//!
//! The witness returned by the feasibility check satisfies exactly one of
//! the children and is handed down to it, so that child skips its own check.
//! The other child receives the witness with `e` toggled in `S_j` when the
//! result is still laminar, and runs the check only otherwise.

use std::time::{Duration, Instant};

use num_bigint::BigUint;

use crate::feasibility::feasible;
use crate::{ElementSet, Instance, Phylogeny};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BnbStats {
    /// Solutions reported.
    pub found: BigUint,
    /// Search nodes entered, the root included.
    pub calls: u64,
    /// False when the deadline cut the search short.
    pub completed: bool,
    pub wall_time: Duration,
}

#[derive(Clone, Copy, Debug)]
pub struct BnbOptions {
    pub deadline: Option<Duration>,
    /// Pass feasibility witnesses down to the child they satisfy.
    pub reuse_witness: bool,
}

impl Default for BnbOptions {
    fn default() -> Self {
        BnbOptions {
            deadline: None,
            reuse_witness: true,
        }
    }
}

pub fn bnb_enumerate<F>(inst: &Instance, visitor: F, deadline: Option<Duration>) -> BnbStats
where
    F: FnMut(&Phylogeny),
{
    bnb_enumerate_with(
        inst,
        BnbOptions {
            deadline,
            ..BnbOptions::default()
        },
        visitor,
    )
}

pub fn bnb_count(inst: &Instance, deadline: Option<Duration>) -> BnbStats {
    bnb_enumerate(inst, |_| {}, deadline)
}

pub fn bnb_enumerate_with<F>(inst: &Instance, options: BnbOptions, visitor: F) -> BnbStats
where
    F: FnMut(&Phylogeny),
{
    let started = Instant::now();
    let mut search = Search {
        inst: inst.clone(),
        visitor,
        options,
        started,
        found: 0,
        calls: 0,
        aborted: false,
    };
    search.run(None);
    BnbStats {
        found: BigUint::from(search.found),
        calls: search.calls,
        completed: !search.aborted,
        wall_time: started.elapsed(),
    }
}

struct Search<F> {
    inst: Instance,
    visitor: F,
    options: BnbOptions,
    started: Instant,
    found: u64,
    calls: u64,
    aborted: bool,
}

impl<F: FnMut(&Phylogeny)> Search<F> {
    fn run(&mut self, witness: Option<Phylogeny>) {
        if self.aborted {
            return;
        }
        self.calls += 1;
        if self.options.deadline.is_some_and(|d| self.started.elapsed() > d) {
            self.aborted = true;
            return;
        }
        let witness = match witness {
            Some(w) => w,
            None => match feasible(&self.inst).witness {
                Some(w) => w,
                None => return,
            },
        };
        let Some((j, e)) = self.first_undecided() else {
            // every character is decided, so the witness is the lower bound
            self.found += 1;
            (self.visitor)(&witness);
            return;
        };
        let (with_e, without_e) = if !self.options.reuse_witness {
            (None, None)
        } else if witness.sets[j].contains(e) {
            let repaired = repair(&witness, j, e, false);
            (Some(witness), repaired)
        } else {
            let repaired = repair(&witness, j, e, true);
            (repaired, Some(witness))
        };

        self.inst.lower_mut()[j].insert(e);
        self.run(with_e);
        self.inst.lower_mut()[j].remove(e);

        self.inst.upper_mut()[j].remove(e);
        self.run(without_e);
        self.inst.upper_mut()[j].insert(e);
    }

    fn first_undecided(&self) -> Option<(usize, usize)> {
        self.inst
            .lower()
            .iter()
            .zip(self.inst.upper())
            .enumerate()
            .find_map(|(j, (l, u))| u.difference(l).first().map(|e| (j, e)))
    }
}

/// The witness with `e` toggled in `S_j`, if that keeps it laminar. The
/// bounds need no check: `(j, e)` is undecided and the child fixes it to
/// the toggled value.
fn repair(witness: &Phylogeny, j: usize, e: usize, insert: bool) -> Option<Phylogeny> {
    let mut s = witness.sets[j].clone();
    if insert {
        s.insert(e);
    } else {
        s.remove(e);
    }
    let compatible = |t: &ElementSet| s.is_subset(t) || t.is_subset(&s) || s.is_disjoint(t);
    if !witness.sets.iter().enumerate().all(|(k, t)| k == j || compatible(t)) {
        return None;
    }
    let mut out = witness.clone();
    out.sets[j] = s;
    Some(out)
}
