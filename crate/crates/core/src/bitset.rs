//! Fixed-width bit sets indexed by condition number.

use std::fmt;

use crate::order::Cond;

/// A set of conditions of one preorder, stored as a bit vector.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CondSet {
    len: usize,
    words: Vec<u64>,
}

impl CondSet {
    pub fn empty(len: usize) -> Self {
        CondSet {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn full(len: usize) -> Self {
        let mut s = Self::empty(len);
        for c in 0..len {
            s.insert(Cond(c as u32));
        }
        s
    }

    pub fn from_iter_in(len: usize, iter: impl IntoIterator<Item = Cond>) -> Self {
        let mut s = Self::empty(len);
        for c in iter {
            s.insert(c);
        }
        s
    }

    pub fn from_raw(len: usize, words: &[u64]) -> Self {
        CondSet {
            len,
            words: words.to_vec(),
        }
    }

    pub fn raw_words(&self) -> &[u64] {
        &self.words
    }

    /// Width of the universe this set lives in.
    pub fn universe(&self) -> usize {
        self.len
    }

    pub fn insert(&mut self, c: Cond) {
        let i = c.index();
        debug_assert!(i < self.len);
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn remove(&mut self, c: Cond) {
        let i = c.index();
        self.words[i / 64] &= !(1 << (i % 64));
    }

    pub fn contains(&self, c: Cond) -> bool {
        let i = c.index();
        i < self.len && self.words[i / 64] & (1 << (i % 64)) != 0
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|w| *w == 0)
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn union_with(&mut self, other: &CondSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= *b;
        }
    }

    pub fn intersect_with(&mut self, other: &CondSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= *b;
        }
    }

    pub fn difference_with(&mut self, other: &CondSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= !*b;
        }
    }

    pub fn intersection(&self, other: &CondSet) -> CondSet {
        let mut s = self.clone();
        s.intersect_with(other);
        s
    }

    pub fn union(&self, other: &CondSet) -> CondSet {
        let mut s = self.clone();
        s.union_with(other);
        s
    }

    pub fn complement(&self) -> CondSet {
        let mut s = CondSet::full(self.len);
        s.difference_with(self);
        s
    }

    pub fn is_subset(&self, other: &CondSet) -> bool {
        self.words
            .iter()
            .zip(&other.words)
            .all(|(a, b)| a & !b == 0)
    }

    pub fn intersects(&self, other: &CondSet) -> bool {
        self.words.iter().zip(&other.words).any(|(a, b)| a & b != 0)
    }

    /// `self ∩ a ⊆ b` without allocating.
    pub fn meet_is_subset(&self, a: &CondSet, b: &CondSet) -> bool {
        self.words
            .iter()
            .zip(&a.words)
            .zip(&b.words)
            .all(|((s, a), b)| s & a & !b == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = Cond> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let tz = w.trailing_zeros();
                w &= w - 1;
                Some(Cond((wi * 64) as u32 + tz))
            })
        })
    }
}

impl fmt::Debug for CondSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter().map(|c| c.0)).finish()
    }
}
