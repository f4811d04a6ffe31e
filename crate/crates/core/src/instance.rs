//! Sandwich instances, candidate phylogenies and their validity predicates.

use std::fmt;

use crate::{ElementSet, Error, Result};

/// Per-character bounds `L_i ⊆ U_i` over species `0..n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    n: usize,
    lower: Vec<ElementSet>,
    upper: Vec<ElementSet>,
}

impl Instance {
    /// Builds a validated instance.
    pub fn new(n: usize, lower: Vec<ElementSet>, upper: Vec<ElementSet>) -> Result<Self> {
        let inst = Self::from_parts_unchecked(n, lower, upper)?;
        match validate_instance(&inst).first() {
            None => Ok(inst),
            Some(v) => Err(Error::usage(v.to_string())),
        }
    }

    /// Builds an instance without checking the bound invariants; only the
    /// lengths of `lower` and `upper` are required to agree.
    pub fn from_parts_unchecked(n: usize, lower: Vec<ElementSet>, upper: Vec<ElementSet>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::usage(format!(
                "{} lower bounds but {} upper bounds",
                lower.len(),
                upper.len()
            )));
        }
        Ok(Instance { n, lower, upper })
    }

    /// Convenience constructor from element lists, mostly for tests.
    pub fn from_lists(n: usize, bounds: &[(&[usize], &[usize])]) -> Result<Self> {
        let mut lower = Vec::with_capacity(bounds.len());
        let mut upper = Vec::with_capacity(bounds.len());
        for (l, u) in bounds {
            lower.push(ElementSet::from_elements(n, l.iter().copied())?);
            upper.push(ElementSet::from_elements(n, u.iter().copied())?);
        }
        Self::new(n, lower, upper)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[ElementSet] {
        &self.lower
    }

    pub fn upper(&self) -> &[ElementSet] {
        &self.upper
    }

    /// Number of undecided (character, species) pairs, `Σ |U_i \ L_i|`.
    pub fn free_count(&self) -> usize {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| u.difference(l).len())
            .sum()
    }

    pub(crate) fn lower_mut(&mut self) -> &mut [ElementSet] {
        &mut self.lower
    }

    pub(crate) fn upper_mut(&mut self) -> &mut [ElementSet] {
        &mut self.upper
    }
}

/// A candidate solution: one species set per character.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Phylogeny {
    pub sets: Vec<ElementSet>,
}

impl Phylogeny {
    pub fn new(sets: Vec<ElementSet>) -> Self {
        Phylogeny { sets }
    }

    /// True iff laminar and sandwiched in `inst`.
    pub fn is_valid_for(&self, inst: &Instance) -> Result<bool> {
        Ok(is_sandwiched(self, inst)? && is_laminar(&self.sets)?)
    }
}

/// One broken instance invariant. `character` is 1-based.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub character: usize,
    pub kind: ViolationKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    LowerNotSubsetOfUpper,
    ElementOutOfUniverse(usize),
    UniverseMismatch { expected: usize, found: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let i = self.character;
        match &self.kind {
            ViolationKind::LowerNotSubsetOfUpper => {
                write!(f, "character {i}: lower not subset of upper")
            }
            ViolationKind::ElementOutOfUniverse(e) => {
                write!(f, "character {i}: element out of universe ({e})")
            }
            ViolationKind::UniverseMismatch { expected, found } => write!(
                f,
                "character {i}: set over universe of size {found}, expected {expected}"
            ),
        }
    }
}

/// Lists every broken invariant of `inst`; empty iff the instance is well formed.
pub fn validate_instance(inst: &Instance) -> Vec<Violation> {
    let mut out = Vec::new();
    for (idx, (l, u)) in inst.lower.iter().zip(&inst.upper).enumerate() {
        let character = idx + 1;
        let mut shapes_ok = true;
        for set in [l, u] {
            if set.universe_size() != inst.n {
                if let Some(e) = set.iter().find(|&e| e >= inst.n) {
                    out.push(Violation {
                        character,
                        kind: ViolationKind::ElementOutOfUniverse(e),
                    });
                } else {
                    out.push(Violation {
                        character,
                        kind: ViolationKind::UniverseMismatch {
                            expected: inst.n,
                            found: set.universe_size(),
                        },
                    });
                }
                shapes_ok = false;
            }
        }
        if shapes_ok && !l.is_subset(u) {
            out.push(Violation {
                character,
                kind: ViolationKind::LowerNotSubsetOfUpper,
            });
        }
    }
    out
}

fn check_universes(sets: &[ElementSet]) -> Result<()> {
    if let Some(first) = sets.first() {
        if let Some(bad) = sets.iter().find(|s| s.universe_size() != first.universe_size()) {
            return Err(Error::usage(format!(
                "sets over universes of size {} and {}",
                first.universe_size(),
                bad.universe_size()
            )));
        }
    }
    Ok(())
}

/// Checks that every two sets are nested or disjoint.
pub fn is_laminar(sets: &[ElementSet]) -> Result<bool> {
    check_universes(sets)?;
    for (i, a) in sets.iter().enumerate() {
        for b in &sets[i + 1..] {
            if !compatible(a.words(), b.words()) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// `a ∩ b` is `a`, `b` or empty, decided in one pass over the words.
pub(crate) fn compatible(a: &[u64], b: &[u64]) -> bool {
    let (mut disjoint, mut a_in_b, mut b_in_a) = (true, true, true);
    for (&x, &y) in a.iter().zip(b) {
        let both = x & y;
        disjoint &= both == 0;
        a_in_b &= both == x;
        b_in_a &= both == y;
        if !(disjoint || a_in_b || b_in_a) {
            return false;
        }
    }
    true
}

/// Checks `L_i ⊆ S_i ⊆ U_i` for each character; laminarity is not examined.
pub fn is_sandwiched(phylo: &Phylogeny, inst: &Instance) -> Result<bool> {
    if phylo.sets.len() != inst.m() {
        return Err(Error::usage(format!(
            "phylogeny has {} sets, instance has {} characters",
            phylo.sets.len(),
            inst.m()
        )));
    }
    for ((s, l), u) in phylo.sets.iter().zip(&inst.lower).zip(&inst.upper) {
        if s.universe_size() != inst.n {
            return Err(Error::usage("phylogeny universe differs from instance"));
        }
        if !l.is_subset(s) || !s.is_subset(u) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Byte key identifying a phylogeny: `m` and `n` as little-endian `u32`,
/// then per set a little-endian `u32` byte length followed by its bit vector
/// (bit `e` lives in byte `e / 8` at position `e % 8`).
pub fn canonical_key(phylo: &Phylogeny) -> Vec<u8> {
    let n = phylo.sets.first().map_or(0, ElementSet::universe_size);
    let bytes_per_set = n.div_ceil(8);
    let mut key = Vec::with_capacity(8 + phylo.sets.len() * (4 + bytes_per_set));
    key.extend_from_slice(&(phylo.sets.len() as u32).to_le_bytes());
    key.extend_from_slice(&(n as u32).to_le_bytes());
    for set in &phylo.sets {
        let len = set.universe_size().div_ceil(8);
        key.extend_from_slice(&(len as u32).to_le_bytes());
        let start = key.len();
        key.resize(start + len, 0);
        for e in set.iter() {
            key[start + e / 8] |= 1 << (e % 8);
        }
    }
    key
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(n: usize, xs: &[usize]) -> ElementSet {
        ElementSet::from_elements(n, xs.iter().copied()).unwrap()
    }

    fn naive_laminar(sets: &[ElementSet]) -> bool {
        for i in 0..sets.len() {
            for j in 0..sets.len() {
                if i == j {
                    continue;
                }
                let inter: Vec<usize> = sets[i].iter().filter(|&e| sets[j].contains(e)).collect();
                let a: Vec<usize> = sets[i].iter().collect();
                let b: Vec<usize> = sets[j].iter().collect();
                if !(inter.is_empty() || inter == a || inter == b) {
                    return false;
                }
            }
        }
        true
    }

    #[test]
    fn laminar_examples() {
        assert!(is_laminar(&[set(3, &[0, 1]), set(3, &[0]), set(3, &[2])]).unwrap());
        assert!(!is_laminar(&[set(3, &[0, 1]), set(3, &[1, 2])]).unwrap());
        assert!(is_laminar(&[]).unwrap());
        assert!(is_laminar(&[set(3, &[0, 1]), set(3, &[0, 1]), set(3, &[])]).unwrap());
    }

    #[test]
    fn laminar_rejects_mixed_universes() {
        assert!(matches!(
            is_laminar(&[set(3, &[0]), set(4, &[0])]),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn sandwich_examples() {
        let inst = Instance::from_lists(3, &[(&[0], &[0, 1]), (&[2], &[2])]).unwrap();
        let lower = Phylogeny::new(inst.lower().to_vec());
        assert!(is_sandwiched(&lower, &inst).unwrap());
        let over = Phylogeny::new(vec![set(3, &[0, 1, 2]), set(3, &[2])]);
        assert!(!is_sandwiched(&over, &inst).unwrap());
        let empty = Instance::from_lists(3, &[]).unwrap();
        assert!(is_sandwiched(&Phylogeny::new(vec![]), &empty).unwrap());
        assert!(is_sandwiched(&Phylogeny::new(vec![]), &inst).is_err());
    }

    #[test]
    fn validation_reports_each_violation() {
        let ok = Instance::from_lists(3, &[(&[0], &[0, 1])]).unwrap();
        assert!(validate_instance(&ok).is_empty());

        let bad = Instance::from_parts_unchecked(3, vec![set(3, &[0]), set(3, &[1])], vec![set(3, &[0]), set(3, &[2])])
            .unwrap();
        let v = validate_instance(&bad);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].character, 2);
        assert_eq!(v[0].kind, ViolationKind::LowerNotSubsetOfUpper);
        assert!(v[0].to_string().contains("lower not subset of upper"));

        let wide = Instance::from_parts_unchecked(2, vec![set(2, &[])], vec![set(3, &[2])]).unwrap();
        let v = validate_instance(&wide);
        assert_eq!(v[0].character, 1);
        assert_eq!(v[0].kind, ViolationKind::ElementOutOfUniverse(2));
        assert!(v[0].to_string().contains("element out of universe"));
    }

    #[test]
    fn keys_are_distinct() {
        let a = Phylogeny::new(vec![set(2, &[0])]);
        let b = Phylogeny::new(vec![set(2, &[1])]);
        assert_ne!(canonical_key(&a), canonical_key(&b));
        assert_eq!(canonical_key(&a), canonical_key(&a.clone()));
    }

    #[test]
    fn keys_cover_all_small_families() {
        // every sequence of m sets over n species with m * n = 12
        for (m, n) in [(1, 12), (2, 6), (3, 4), (4, 3), (6, 2)] {
            let mut seen = std::collections::HashSet::new();
            for mask in 0u32..1 << (m * n) {
                let sets = (0..m)
                    .map(|i| ElementSet::from_elements(n, (0..n).filter(|e| mask >> (i * n + e) & 1 == 1)).unwrap())
                    .collect();
                assert!(seen.insert(canonical_key(&Phylogeny::new(sets))));
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn sets_strategy() -> impl Strategy<Value = Vec<ElementSet>> {
            (1usize..80).prop_flat_map(|n| {
                prop::collection::vec(prop::collection::vec(0..n, 0..4), 0..7).prop_map(move |lists| {
                    lists
                        .into_iter()
                        .map(|xs| ElementSet::from_elements(n, xs).unwrap())
                        .collect()
                })
            })
        }

        proptest! {
            #[test]
            fn agrees_with_naive_double_loop(sets in sets_strategy()) {
                prop_assert_eq!(is_laminar(&sets).unwrap(), naive_laminar(&sets));
            }

            #[test]
            fn permutation_invariant(sets in sets_strategy(), seed in any::<u64>()) {
                let mut shuffled = sets.clone();
                let len = shuffled.len();
                for i in (1..len).rev() {
                    shuffled.swap(i, (seed.rotate_left(i as u32) as usize) % (i + 1));
                }
                prop_assert_eq!(is_laminar(&sets).unwrap(), is_laminar(&shuffled).unwrap());
            }
        }
    }
}
