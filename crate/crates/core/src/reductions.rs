//! Counting bipartite matchings by counting phylogenies.
//!
//! Every vertex becomes a species (the `A` side first, then `B`) and every
//! edge `(a, b)` a character with `L = {a}` and `U = {a, b}`. Choosing
//! `S_e = U_e` for the edges of a matching and `S_e = L_e` elsewhere is a
//! bijection between matchings (the empty one included) and solutions.

use num_bigint::BigUint;

use crate::{ElementSet, Error, Instance, Result};

/// Largest edge count accepted by [`brute_force_matching_count`].
pub const MATCHING_BRUTE_FORCE_MAX_EDGES: usize = 24;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BipartiteGraph {
    a_size: usize,
    b_size: usize,
    edges: Vec<(usize, usize)>,
}

impl BipartiteGraph {
    /// Rejects out-of-range endpoints and repeated edges.
    pub fn new(a_size: usize, b_size: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for &(a, b) in &edges {
            if a >= a_size || b >= b_size {
                return Err(Error::usage(format!("edge ({a}, {b}) out of range")));
            }
            if !seen.insert((a, b)) {
                return Err(Error::usage(format!("duplicate edge ({a}, {b})")));
            }
        }
        Ok(BipartiteGraph { a_size, b_size, edges })
    }

    pub fn a_size(&self) -> usize {
        self.a_size
    }

    pub fn b_size(&self) -> usize {
        self.b_size
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }
}

pub fn matching_to_idbpp(g: &BipartiteGraph) -> Instance {
    let n = g.a_size + g.b_size;
    let mut lower = Vec::with_capacity(g.edges.len());
    let mut upper = Vec::with_capacity(g.edges.len());
    for &(a, b) in &g.edges {
        let sa = a;
        let sb = g.a_size + b;
        lower.push(ElementSet::from_elements(n, [sa]).expect("in range"));
        upper.push(ElementSet::from_elements(n, [sa, sb]).expect("in range"));
    }
    Instance::new(n, lower, upper).expect("well formed by construction")
}

/// Number of matchings, the empty matching included.
pub fn brute_force_matching_count(g: &BipartiteGraph) -> Result<BigUint> {
    if g.edges.len() > MATCHING_BRUTE_FORCE_MAX_EDGES {
        return Err(Error::Refused(format!(
            "{} edges exceed the brute-force limit of {MATCHING_BRUTE_FORCE_MAX_EDGES}",
            g.edges.len()
        )));
    }
    let mut count = 0u64;
    'subsets: for mask in 0u32..1 << g.edges.len() {
        let mut used_a = vec![false; g.a_size];
        let mut used_b = vec![false; g.b_size];
        for (bit, &(a, b)) in g.edges.iter().enumerate() {
            if mask >> bit & 1 == 1 {
                if used_a[a] || used_b[b] {
                    continue 'subsets;
                }
                used_a[a] = true;
                used_b[b] = true;
            }
        }
        count += 1;
    }
    Ok(BigUint::from(count))
}
