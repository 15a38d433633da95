//! Good identifiers and fixed-universe good sets.

use std::fmt;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

/// Dense index of a good, `0..m`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GoodId(pub usize);

impl GoodId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for GoodId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "g{}", self.0)
    }
}

/// Index of a real agent, `0..n`. The unallocated pool is kept separately
/// rather than as agent zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentId(pub usize);

impl AgentId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "agent{}", self.0)
    }
}

/// A subset of the goods `0..m`. Iteration is always in ascending id order.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct GoodSet {
    bits: FixedBitSet,
}

impl GoodSet {
    pub fn empty(m: usize) -> Self {
        Self {
            bits: FixedBitSet::with_capacity(m),
        }
    }

    pub fn full(m: usize) -> Self {
        let mut bits = FixedBitSet::with_capacity(m);
        bits.insert_range(..);
        Self { bits }
    }

    pub fn from_ids(m: usize, ids: impl IntoIterator<Item = GoodId>) -> Self {
        let mut set = Self::empty(m);
        for g in ids {
            set.insert(g);
        }
        set
    }

    /// Builds a set from the low `m` bits of `mask`.
    pub fn from_mask(m: usize, mask: u64) -> Self {
        debug_assert!(m <= 64);
        Self::from_ids(m, (0..m).filter(|&k| mask >> k & 1 == 1).map(GoodId))
    }

    /// Inverse of [`GoodSet::from_mask`]; only meaningful for `m <= 64`.
    pub fn to_mask(&self) -> u64 {
        self.iter().fold(0u64, |acc, g| acc | 1 << g.0)
    }

    /// Size of the universe, not of the set.
    pub fn universe(&self) -> usize {
        self.bits.len()
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_clear()
    }

    pub fn contains(&self, g: GoodId) -> bool {
        self.bits.contains(g.0)
    }

    /// Returns true if `g` was newly inserted.
    pub fn insert(&mut self, g: GoodId) -> bool {
        !self.bits.put(g.0)
    }

    /// Returns true if `g` was present.
    pub fn remove(&mut self, g: GoodId) -> bool {
        let was = self.bits.contains(g.0);
        self.bits.set(g.0, false);
        was
    }

    pub fn with(&self, g: GoodId) -> Self {
        let mut out = self.clone();
        out.insert(g);
        out
    }

    pub fn without(&self, g: GoodId) -> Self {
        let mut out = self.clone();
        out.remove(g);
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = GoodId> + '_ {
        self.bits.ones().map(GoodId)
    }

    pub fn first(&self) -> Option<GoodId> {
        self.bits.minimum().map(GoodId)
    }

    pub fn union_with(&mut self, other: &GoodSet) {
        self.bits.union_with(&other.bits);
    }

    pub fn intersect_with(&mut self, other: &GoodSet) {
        self.bits.intersect_with(&other.bits);
    }

    pub fn difference_with(&mut self, other: &GoodSet) {
        self.bits.difference_with(&other.bits);
    }

    pub fn intersection_len(&self, other: &GoodSet) -> usize {
        self.bits.intersection_count(&other.bits)
    }

    pub fn is_subset(&self, other: &GoodSet) -> bool {
        self.bits.is_subset(&other.bits)
    }

    pub fn is_disjoint(&self, other: &GoodSet) -> bool {
        self.bits.is_disjoint(&other.bits)
    }

    pub fn to_vec(&self) -> Vec<GoodId> {
        self.iter().collect()
    }
}

impl fmt::Debug for GoodSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter().map(|g| g.0)).finish()
    }
}
