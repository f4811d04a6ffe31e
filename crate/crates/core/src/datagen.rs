//! Seeded instance generators.
//!
//! All randomness comes from [`ChaCha8Rng`] seeded through
//! `SeedableRng::seed_from_u64`, which is reproducible across platforms.
//! Draws happen in a fixed order: tree construction first, then one node
//! pick per character in ascending order; perturbation draws one Bernoulli
//! variable per `(character, species)` pair, characters ascending and
//! species ascending inside each character.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{ElementSet, Error, Instance, Phylogeny, Result};

/// Seed offset separating the perturbation stream from the tree stream in
/// [`generate`].
pub const PERTURB_SEED_MIX: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GenConfig {
    pub m: usize,
    pub n: usize,
    pub p: f64,
    pub seed: u64,
}

/// A random ground truth perturbed with probability `p`.
pub fn generate(cfg: &GenConfig) -> Result<Instance> {
    let truth = gen_ground_truth(cfg.m, cfg.n, cfg.seed)?;
    perturb(&truth, cfg.p, cfg.seed ^ PERTURB_SEED_MIX)
}

/// A laminar sequence of `m` nonempty species sets.
///
/// Builds a random rooted partition tree over `0..n`: each block of two or
/// more species is shuffled and cut into 2 to 4 nonempty sub-blocks until
/// only singletons remain. Each character then copies the species set of a
/// tree node chosen uniformly.
pub fn gen_ground_truth(m: usize, n: usize, seed: u64) -> Result<Phylogeny> {
    if m == 0 || n == 0 {
        return Err(Error::usage("ground truth needs m >= 1 and n >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nodes: Vec<Vec<usize>> = Vec::new();
    let mut queue = std::collections::VecDeque::from([(0..n).collect::<Vec<_>>()]);
    while let Some(mut block) = queue.pop_front() {
        if block.len() >= 2 {
            let arity = rng.random_range(2..=block.len().min(4));
            block.shuffle(&mut rng);
            let mut cuts = rand::seq::index::sample(&mut rng, block.len() - 1, arity - 1)
                .into_iter()
                .map(|c| c + 1)
                .collect::<Vec<_>>();
            cuts.sort_unstable();
            let mut start = 0;
            for end in cuts.into_iter().chain([block.len()]) {
                queue.push_back(block[start..end].to_vec());
                start = end;
            }
        }
        block.sort_unstable();
        nodes.push(block);
    }
    let sets = (0..m)
        .map(|_| {
            let node = &nodes[rng.random_range(0..nodes.len())];
            ElementSet::from_elements(n, node.iter().copied())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Phylogeny::new(sets))
}

/// Drops each species of `S_i` from `L_i` and adds each species outside
/// `S_i` to `U_i`, independently with probability `p`.
pub fn perturb(truth: &Phylogeny, p: f64, seed: u64) -> Result<Instance> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::usage(format!("probability {p} outside [0, 1]")));
    }
    let n = truth.sets.first().map_or(0, ElementSet::universe_size);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lower = Vec::with_capacity(truth.sets.len());
    let mut upper = Vec::with_capacity(truth.sets.len());
    for s in &truth.sets {
        let mut l = s.clone();
        let mut u = s.clone();
        for e in 0..n {
            if rng.random_bool(p) {
                if s.contains(e) {
                    l.remove(e);
                } else {
                    u.insert(e);
                }
            }
        }
        lower.push(l);
        upper.push(u);
    }
    Instance::new(n, lower, upper)
}

/// `c` characters with pairwise disjoint windows: species `(i, j)` for
/// `j ∈ 0..=k` live at index `i·(k+1) + j`, `L_i = {(i, 0)}` and `U_i` is
/// the whole window. Every choice inside the windows is laminar, so there
/// are `2^(k·c)` solutions.
pub fn compression_family(c: usize, k: usize) -> Instance {
    let width = k + 1;
    let n = width * c;
    let lower = (0..c)
        .map(|i| ElementSet::from_elements(n, [i * width]).expect("in range"))
        .collect();
    let upper = (0..c)
        .map(|i| ElementSet::from_elements(n, i * width..(i + 1) * width).expect("in range"))
        .collect();
    Instance::new(n, lower, upper).expect("well formed by construction")
}
