//! Deciding whether an instance admits any directed binary perfect phylogeny.
//!
//! The decision procedure works on a species block `K` and the characters
//! whose lower bound is a nonempty subset of `K`:
//!
//! 1. every character with `K ⊆ U_c` takes `S_c = K`;
//! 2. the remaining characters link species that share a lower bound; if
//!    they link all of `K` into one component the block is infeasible,
//!    since the largest remaining set would have to be `K` itself;
//! 3. otherwise each remaining character lives inside one component and the
//!    components are solved independently.
//!
//! Characters with an empty lower bound take `S_c = ∅`.

use crate::{canonical_key, is_laminar, ElementSet, Error, Instance, Phylogeny, Result};

/// Largest `Σ |U_i \ L_i|` accepted by [`brute_force_solutions`].
pub const BRUTE_FORCE_MAX_FREE: usize = 24;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeasibilityResult {
    pub feasible: bool,
    pub witness: Option<Phylogeny>,
}

pub fn feasible(inst: &Instance) -> FeasibilityResult {
    let n = inst.n();
    let mut sets = vec![ElementSet::new(n); inst.m()];
    let chars: Vec<usize> = (0..inst.m()).filter(|&c| !inst.lower()[c].is_empty()).collect();
    let mut uf = UnionFind::new(n);
    if solve_block(inst, ElementSet::full(n), chars, &mut sets, &mut uf) {
        FeasibilityResult {
            feasible: true,
            witness: Some(Phylogeny::new(sets)),
        }
    } else {
        FeasibilityResult {
            feasible: false,
            witness: None,
        }
    }
}

fn solve_block(
    inst: &Instance,
    block: ElementSet,
    chars: Vec<usize>,
    out: &mut [ElementSet],
    uf: &mut UnionFind,
) -> bool {
    let mut remaining = Vec::with_capacity(chars.len());
    for c in chars {
        if block.is_subset(&inst.upper()[c]) {
            out[c] = block.clone();
        } else {
            remaining.push(c);
        }
    }
    if remaining.is_empty() {
        return true;
    }

    for e in block.iter() {
        uf.reset(e);
    }
    for &c in &remaining {
        let mut members = inst.lower()[c].iter();
        let first = members.next().expect("nonempty lower bound");
        for e in members {
            uf.union(first, e);
        }
    }

    let mut roots: Vec<usize> = block.iter().map(|e| uf.find(e)).collect();
    roots.sort_unstable();
    roots.dedup();
    if roots.len() == 1 {
        return false;
    }

    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    for &c in &remaining {
        let root = uf.find(inst.lower()[c].first().expect("nonempty lower bound"));
        match groups.iter_mut().find(|(r, _)| *r == root) {
            Some((_, members)) => members.push(c),
            None => groups.push((root, vec![c])),
        }
    }
    let components: Vec<(ElementSet, Vec<usize>)> = groups
        .into_iter()
        .map(|(root, members)| {
            let mut part = ElementSet::new(inst.n());
            for e in block.iter() {
                if uf.find(e) == root {
                    part.insert(e);
                }
            }
            (part, members)
        })
        .collect();
    components
        .into_iter()
        .all(|(part, members)| solve_block(inst, part, members, out, uf))
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn reset(&mut self, e: usize) {
        self.parent[e] = e;
    }

    fn find(&mut self, mut e: usize) -> usize {
        while self.parent[e] != e {
            self.parent[e] = self.parent[self.parent[e]];
            e = self.parent[e];
        }
        e
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Every completion `L_i ⊆ S_i ⊆ U_i` that is laminar, sorted by canonical key.
///
/// Refuses when more than [`BRUTE_FORCE_MAX_FREE`] pairs are undecided, or
/// when more than `cap` solutions exist.
pub fn brute_force_solutions(inst: &Instance, cap: usize) -> Result<Vec<Phylogeny>> {
    let k = inst.free_count();
    if k > BRUTE_FORCE_MAX_FREE {
        return Err(Error::Refused(format!(
            "{k} undecided pairs exceed the brute-force limit of {BRUTE_FORCE_MAX_FREE}"
        )));
    }
    let free: Vec<(usize, usize)> = (0..inst.m())
        .flat_map(|i| {
            inst.upper()[i]
                .difference(&inst.lower()[i])
                .iter()
                .map(move |e| (i, e))
                .collect::<Vec<_>>()
        })
        .collect();
    let mut out = Vec::new();
    for mask in 0u64..1 << k {
        let mut sets = inst.lower().to_vec();
        for (bit, &(i, e)) in free.iter().enumerate() {
            if mask >> bit & 1 == 1 {
                sets[i].insert(e);
            }
        }
        if is_laminar(&sets)? {
            if out.len() == cap {
                return Err(Error::Refused(format!("more than {cap} solutions")));
            }
            out.push(Phylogeny::new(sets));
        }
    }
    out.sort_by_cached_key(canonical_key);
    Ok(out)
}
