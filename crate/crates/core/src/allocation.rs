//! Allocations, their clean/supplementary decompositions, utility vectors and
//! the orders used to compare them.

use std::cmp::Ordering;

use thiserror::Error;

use crate::goods::{AgentId, GoodId, GoodSet};
use crate::valuation::Instance;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AllocationError {
    #[error("expected {expected} bundles, got {got}")]
    BundleCount { expected: usize, got: usize },
    #[error("good {0} appears in more than one bundle")]
    Overlap(GoodId),
    #[error("bundle universe has {got} goods, instance has {expected}")]
    Universe { expected: usize, got: usize },
}

/// Who holds a good.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Holder {
    Pool,
    Agent(AgentId),
}

/// A partition of the goods into one bundle per agent plus the unallocated pool.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Allocation {
    bundles: Vec<GoodSet>,
    unallocated: GoodSet,
}

impl Allocation {
    /// Every good unallocated.
    pub fn empty(n: usize, m: usize) -> Self {
        Self {
            bundles: vec![GoodSet::empty(m); n],
            unallocated: GoodSet::full(m),
        }
    }

    /// Builds an allocation from agent bundles; goods in no bundle are unallocated.
    pub fn from_bundles(m: usize, bundles: Vec<GoodSet>) -> Result<Self, AllocationError> {
        let mut seen = GoodSet::empty(m);
        for b in &bundles {
            if b.universe() != m {
                return Err(AllocationError::Universe {
                    expected: m,
                    got: b.universe(),
                });
            }
            if let Some(g) = b.iter().find(|&g| seen.contains(g)) {
                return Err(AllocationError::Overlap(g));
            }
            seen.union_with(b);
        }
        let mut unallocated = GoodSet::full(m);
        unallocated.difference_with(&seen);
        Ok(Self {
            bundles,
            unallocated,
        })
    }

    /// `holders[g]` is the holder of good `g`.
    pub fn from_holders(n: usize, holders: &[Holder]) -> Self {
        let m = holders.len();
        let mut bundles = vec![GoodSet::empty(m); n];
        let mut unallocated = GoodSet::empty(m);
        for (g, h) in holders.iter().enumerate() {
            match h {
                Holder::Pool => unallocated.insert(GoodId(g)),
                Holder::Agent(i) => bundles[i.0].insert(GoodId(g)),
            };
        }
        Self {
            bundles,
            unallocated,
        }
    }

    pub fn num_agents(&self) -> usize {
        self.bundles.len()
    }

    pub fn num_goods(&self) -> usize {
        self.unallocated.universe()
    }

    pub fn bundle(&self, i: AgentId) -> &GoodSet {
        &self.bundles[i.0]
    }

    pub fn bundles(&self) -> &[GoodSet] {
        &self.bundles
    }

    pub fn unallocated(&self) -> &GoodSet {
        &self.unallocated
    }

    pub fn is_complete(&self) -> bool {
        self.unallocated.is_empty()
    }

    pub fn holder(&self, g: GoodId) -> Holder {
        self.bundles
            .iter()
            .position(|b| b.contains(g))
            .map_or(Holder::Pool, |i| Holder::Agent(AgentId(i)))
    }
}

/// An allocation in which every agent values each of its goods at `c`.
/// `pool` holds every good not in an agent's clean bundle.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CleanAllocation {
    pub bundles: Vec<GoodSet>,
    pub pool: GoodSet,
}

impl CleanAllocation {
    pub fn empty(n: usize, m: usize) -> Self {
        Self {
            bundles: vec![GoodSet::empty(m); n],
            pool: GoodSet::full(m),
        }
    }

    /// Assumes the bundles are disjoint; the pool is the complement of their union.
    pub fn from_bundles(m: usize, bundles: Vec<GoodSet>) -> Self {
        let mut pool = GoodSet::full(m);
        for b in &bundles {
            pool.difference_with(b);
        }
        Self { bundles, pool }
    }

    pub fn num_goods(&self) -> usize {
        self.pool.universe()
    }

    pub fn holder(&self, g: GoodId) -> Holder {
        if self.pool.contains(g) {
            return Holder::Pool;
        }
        self.bundles
            .iter()
            .position(|b| b.contains(g))
            .map_or(Holder::Pool, |i| Holder::Agent(AgentId(i)))
    }

    /// Holder of every good, indexed by good id.
    pub fn holders(&self) -> Vec<Holder> {
        let mut out = vec![Holder::Pool; self.num_goods()];
        for (i, b) in self.bundles.iter().enumerate() {
            for g in b.iter() {
                out[g.0] = Holder::Agent(AgentId(i));
            }
        }
        out
    }

    pub fn bundle_of(&self, h: Holder) -> &GoodSet {
        match h {
            Holder::Pool => &self.pool,
            Holder::Agent(i) => &self.bundles[i.0],
        }
    }

    pub fn bundle_of_mut(&mut self, h: Holder) -> &mut GoodSet {
        match h {
            Holder::Pool => &mut self.pool,
            Holder::Agent(i) => &mut self.bundles[i.0],
        }
    }

    /// Every agent bundle is independent in that agent's matroid.
    pub fn is_clean(&self, inst: &Instance) -> bool {
        inst.agent_ids()
            .all(|i| inst.valuation(i).is_clean(&self.bundles[i.0]))
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.bundles.iter().map(GoodSet::len).collect()
    }
}

/// Split of an allocation into a clean part and a supplementary part of
/// goods worth `1` to their holder.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Decomposition {
    pub clean: CleanAllocation,
    pub supplementary: Vec<GoodSet>,
}

impl Decomposition {
    /// `X_i = X^c_i ∪ X^1_i`; remaining goods are unallocated.
    pub fn union(&self) -> Allocation {
        let m = self.clean.num_goods();
        let bundles = self
            .clean
            .bundles
            .iter()
            .zip(&self.supplementary)
            .map(|(c, s)| {
                let mut b = c.clone();
                b.union_with(s);
                b
            })
            .collect();
        Allocation::from_bundles(m, bundles).expect("decomposition parts are disjoint")
    }

    /// Checks this is a valid decomposition of `alloc`: parts inside and
    /// covering each bundle, disjoint, clean part clean and of size `rank(X_i)`.
    pub fn verify(&self, inst: &Instance, alloc: &Allocation) -> Result<(), String> {
        if self.clean.bundles.len() != inst.num_agents()
            || self.supplementary.len() != inst.num_agents()
        {
            return Err("wrong number of bundles".into());
        }
        for i in inst.agent_ids() {
            let xi = alloc.bundle(i);
            let clean = &self.clean.bundles[i.0];
            let supp = &self.supplementary[i.0];
            if !clean.is_subset(xi) || !supp.is_subset(xi) {
                return Err(format!("{i}: parts not contained in bundle"));
            }
            if !clean.is_disjoint(supp) {
                return Err(format!("{i}: clean and supplementary parts overlap"));
            }
            if clean.len() + supp.len() != xi.len() {
                return Err(format!("{i}: parts do not cover the bundle"));
            }
            let val = inst.valuation(i);
            if !val.is_clean(clean) {
                return Err(format!("{i}: clean part is not clean"));
            }
            if clean.len() != val.rank(xi) {
                return Err(format!(
                    "{i}: clean part has {} goods, rank of bundle is {}",
                    clean.len(),
                    val.rank(xi)
                ));
            }
        }
        let mut pool = GoodSet::full(inst.num_goods());
        for b in &self.clean.bundles {
            pool.difference_with(b);
        }
        if pool != self.clean.pool {
            return Err("clean pool is not the complement of the clean bundles".into());
        }
        Ok(())
    }
}

/// Greedy decomposition: each agent scans its bundle in ascending good order
/// and keeps a good in the clean part when it is worth `c` on top of what was
/// kept so far.
pub fn decompose(inst: &Instance, alloc: &Allocation) -> Decomposition {
    let m = inst.num_goods();
    let mut clean = Vec::with_capacity(inst.num_agents());
    let mut supplementary = Vec::with_capacity(inst.num_agents());
    for i in inst.agent_ids() {
        let val = inst.valuation(i);
        let mut kept = GoodSet::empty(m);
        let mut rest = GoodSet::empty(m);
        for g in alloc.bundle(i).iter() {
            let candidate = kept.with(g);
            if val.is_clean(&candidate) {
                kept = candidate;
            } else {
                rest.insert(g);
            }
        }
        clean.push(kept);
        supplementary.push(rest);
    }
    Decomposition {
        clean: CleanAllocation::from_bundles(m, clean),
        supplementary,
    }
}

/// `(v_1(X_1), ..., v_n(X_n))`.
pub fn utility_vector(inst: &Instance, alloc: &Allocation) -> Vec<u64> {
    inst.agent_ids()
        .map(|i| inst.valuation(i).value(alloc.bundle(i)))
        .collect()
}

pub fn sorted_utility_vector(inst: &Instance, alloc: &Allocation) -> Vec<u64> {
    let mut u = utility_vector(inst, alloc);
    u.sort_unstable();
    u
}

/// Utilities of the clean part, `v_i(X^c_i)`.
pub fn clean_utility_vector(inst: &Instance, clean: &CleanAllocation) -> Vec<u64> {
    inst.agent_ids()
        .map(|i| inst.valuation(i).value(&clean.bundles[i.0]))
        .collect()
}

/// Lexicographic comparison of equal-length vectors.
pub fn compare_lex(x: &[u64], y: &[u64]) -> Ordering {
    assert_eq!(
        x.len(),
        y.len(),
        "lexicographic comparison needs equal lengths"
    );
    x.cmp(y)
}

fn sorted(mut v: Vec<u64>) -> Vec<u64> {
    v.sort_unstable();
    v
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Domination {
    Dominates,
    Dominated,
    /// Clean utilities and full utilities coincide.
    Equal,
}

/// Compares two decomposed allocations: sorted clean utilities first, then
/// clean utilities, then full utilities, each lexicographically.
pub fn compare_domination(
    inst: &Instance,
    x: (&Allocation, &Decomposition),
    y: (&Allocation, &Decomposition),
) -> Domination {
    let xc = clean_utility_vector(inst, &x.1.clean);
    let yc = clean_utility_vector(inst, &y.1.clean);
    let order = compare_lex(&sorted(xc.clone()), &sorted(yc.clone()))
        .then_with(|| compare_lex(&xc, &yc))
        .then_with(|| compare_lex(&utility_vector(inst, x.0), &utility_vector(inst, y.0)));
    match order {
        Ordering::Greater => Domination::Dominates,
        Ordering::Less => Domination::Dominated,
        Ordering::Equal => Domination::Equal,
    }
}
