use std::fmt;

use crate::{Error, Result};

const WORD_BITS: usize = 64;

/// A subset of the species universe `{0, .., universe_size - 1}`, stored as
/// a chunked bit vector.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ElementSet {
    universe: usize,
    words: Vec<u64>,
}

impl ElementSet {
    pub fn new(universe: usize) -> Self {
        ElementSet {
            universe,
            words: vec![0; universe.div_ceil(WORD_BITS)],
        }
    }

    pub fn full(universe: usize) -> Self {
        let mut set = Self::new(universe);
        for e in 0..universe {
            set.insert(e);
        }
        set
    }

    pub fn from_elements<I: IntoIterator<Item = usize>>(universe: usize, elements: I) -> Result<Self> {
        let mut set = Self::new(universe);
        for e in elements {
            if e >= universe {
                return Err(Error::usage(format!("element {e} outside universe of size {universe}")));
            }
            set.insert(e);
        }
        Ok(set)
    }

    pub fn universe_size(&self) -> usize {
        self.universe
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn contains(&self, e: usize) -> bool {
        e < self.universe && self.words[e / WORD_BITS] >> (e % WORD_BITS) & 1 == 1
    }

    /// Inserts `e`; returns whether it was newly added.
    ///
    /// Panics if `e` lies outside the universe.
    pub fn insert(&mut self, e: usize) -> bool {
        assert!(
            e < self.universe,
            "element {e} outside universe of size {}",
            self.universe
        );
        let word = &mut self.words[e / WORD_BITS];
        let mask = 1u64 << (e % WORD_BITS);
        let fresh = *word & mask == 0;
        *word |= mask;
        fresh
    }

    pub fn remove(&mut self, e: usize) -> bool {
        if e >= self.universe {
            return false;
        }
        let word = &mut self.words[e / WORD_BITS];
        let mask = 1u64 << (e % WORD_BITS);
        let present = *word & mask != 0;
        *word &= !mask;
        present
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn is_subset(&self, other: &ElementSet) -> bool {
        self.check_universe(other);
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn is_disjoint(&self, other: &ElementSet) -> bool {
        self.check_universe(other);
        self.words.iter().zip(&other.words).all(|(a, b)| a & b == 0)
    }

    pub fn intersection(&self, other: &ElementSet) -> ElementSet {
        self.zip_with(other, |a, b| a & b)
    }

    pub fn union(&self, other: &ElementSet) -> ElementSet {
        self.zip_with(other, |a, b| a | b)
    }

    pub fn difference(&self, other: &ElementSet) -> ElementSet {
        self.zip_with(other, |a, b| a & !b)
    }

    /// Smallest element, if any.
    pub fn first(&self) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .find(|(_, &w)| w != 0)
            .map(|(i, w)| i * WORD_BITS + w.trailing_zeros() as usize)
    }

    /// Elements in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            let mut rest = w;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let bit = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(i * WORD_BITS + bit)
            })
        })
    }

    fn zip_with(&self, other: &ElementSet, op: impl Fn(u64, u64) -> u64) -> ElementSet {
        self.check_universe(other);
        ElementSet {
            universe: self.universe,
            words: self.words.iter().zip(&other.words).map(|(&a, &b)| op(a, b)).collect(),
        }
    }

    fn check_universe(&self, other: &ElementSet) {
        assert_eq!(
            self.universe, other.universe,
            "set operation across universes of different size"
        );
    }
}

impl fmt::Debug for ElementSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_set_algebra() {
        let a = ElementSet::from_elements(70, [0, 3, 64, 69]).unwrap();
        let b = ElementSet::from_elements(70, [3, 64]).unwrap();
        assert!(b.is_subset(&a));
        assert!(!a.is_subset(&b));
        assert_eq!(a.len(), 4);
        assert_eq!(a.difference(&b).iter().collect::<Vec<_>>(), vec![0, 69]);
        assert_eq!(a.intersection(&b), b);
        assert_eq!(a.union(&b), a);
        assert_eq!(a.first(), Some(0));
        assert!(ElementSet::new(70).is_empty());
        assert_eq!(ElementSet::full(70).len(), 70);
    }

    #[test]
    fn out_of_range_rejected() {
        assert!(ElementSet::from_elements(3, [3]).is_err());
        assert!(!ElementSet::new(3).contains(10));
    }

    #[test]
    fn zero_universe() {
        let s = ElementSet::new(0);
        assert!(s.is_empty());
        assert_eq!(s.iter().count(), 0);
        assert!(s.is_subset(&ElementSet::full(0)));
    }
}
