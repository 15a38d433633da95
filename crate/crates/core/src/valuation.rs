//! Matroid rank functions and the bivalued valuations built on top of them.
//!
//! Every agent's valuation is `v(S) = |S| + (c - 1) * rank(S)` where `rank` is
//! the rank function of a matroid over the goods. A good is worth `c` to an
//! agent exactly when it extends an independent subset of the agent's bundle,
//! and `1` otherwise.

use std::collections::HashMap;
use std::sync::Mutex;

use thiserror::Error;

use crate::goods::{AgentId, GoodId, GoodSet};

/// Explicit rank tables are indexed by bitmask; beyond this the table is too large.
pub const EXPLICIT_MAX_GOODS: usize = 20;

const RANK_CACHE_LIMIT: usize = 1 << 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ValuationError {
    #[error("malformed matroid: {0}")]
    Malformed(String),
    #[error("explicit rank table has no entry for goods {0:?}")]
    MissingEntry(Vec<usize>),
    #[error("good {0} is already in the bundle")]
    GoodInBundle(GoodId),
    #[error("explicit rank tables support at most {limit} goods, got {m}")]
    TooManyGoods { m: usize, limit: usize },
    #[error("operation requires an explicit rank table")]
    NotExplicit,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InstanceError {
    #[error("an instance needs at least one agent")]
    NoAgents,
    #[error(
        "the high value must be an integer multiple c >= 2 of the low value (got c = {0}); \
         computing MNW or leximin allocations is NP-hard when a does not divide b"
    )]
    BadRatio(String),
    #[error(
        "a = {a} does not divide b = {b}; computing MNW or leximin allocations is NP-hard \
         when a does not divide b"
    )]
    NonDivisible { a: u64, b: u64 },
    #[error("agent {agent}: {source}")]
    Valuation {
        agent: AgentId,
        #[source]
        source: ValuationError,
    },
    #[error(
        "agent {agent}: explicit rank table violates {count} axiom instance(s), first: {first}"
    )]
    InvalidExplicit {
        agent: AgentId,
        count: usize,
        first: String,
    },
}

/// A matroid over the goods `0..m`, described by one of the supported families.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Matroid {
    /// `rank(S) = min(|S|, cap)`.
    Uniform { cap: usize },
    /// `rank(S) = sum_k min(|S ∩ parts[k]|, caps[k])`; goods outside every part are loops.
    Partition {
        parts: Vec<GoodSet>,
        caps: Vec<usize>,
    },
    /// `rank(S) = |S ∩ marked|`, the bivalued additive case.
    Marked { marked: GoodSet },
    /// Rank is the maximum matching between `S` and `slots`; `adjacency[g]` lists the
    /// slots good `g` may fill.
    Transversal {
        slots: usize,
        adjacency: Vec<Vec<usize>>,
    },
    /// Rank table keyed by bitmask over the goods.
    Explicit { table: HashMap<u32, usize> },
}

impl Matroid {
    /// Structural checks that do not depend on the matroid axioms.
    pub fn check_structure(&self, m: usize) -> Result<(), ValuationError> {
        match self {
            Matroid::Uniform { .. } => Ok(()),
            Matroid::Marked { marked } => {
                if marked.universe() != m {
                    return Err(ValuationError::Malformed(format!(
                        "marked set built over {} goods, instance has {m}",
                        marked.universe()
                    )));
                }
                Ok(())
            }
            Matroid::Partition { parts, caps } => {
                if parts.len() != caps.len() {
                    return Err(ValuationError::Malformed(format!(
                        "{} parts but {} caps",
                        parts.len(),
                        caps.len()
                    )));
                }
                let mut seen = GoodSet::empty(m);
                for part in parts {
                    if part.universe() != m {
                        return Err(ValuationError::Malformed(
                            "partition part built over the wrong universe".into(),
                        ));
                    }
                    if !seen.is_disjoint(part) {
                        return Err(ValuationError::Malformed("partition parts overlap".into()));
                    }
                    seen.union_with(part);
                }
                Ok(())
            }
            Matroid::Transversal { slots, adjacency } => {
                if adjacency.len() != m {
                    return Err(ValuationError::Malformed(format!(
                        "transversal adjacency lists {} goods, instance has {m}",
                        adjacency.len()
                    )));
                }
                if let Some(bad) = adjacency.iter().flatten().find(|&&s| s >= *slots) {
                    return Err(ValuationError::Malformed(format!(
                        "slot {bad} out of range (slots = {slots})"
                    )));
                }
                Ok(())
            }
            Matroid::Explicit { table } => {
                if m > EXPLICIT_MAX_GOODS {
                    return Err(ValuationError::TooManyGoods {
                        m,
                        limit: EXPLICIT_MAX_GOODS,
                    });
                }
                let size = 1u64 << m;
                if let Some(&k) = table.keys().find(|&&k| u64::from(k) >= size) {
                    return Err(ValuationError::Malformed(format!(
                        "rank table key {k:#b} names goods outside 0..{m}"
                    )));
                }
                for mask in 0..size as u32 {
                    if !table.contains_key(&mask) {
                        return Err(ValuationError::MissingEntry(mask_goods(mask)));
                    }
                }
                Ok(())
            }
        }
    }

    /// Rank of `set`. Only fails for explicit tables with a missing entry.
    pub fn try_rank(&self, set: &GoodSet) -> Result<usize, ValuationError> {
        Ok(match self {
            Matroid::Uniform { cap } => set.len().min(*cap),
            Matroid::Marked { marked } => set.intersection_len(marked),
            Matroid::Partition { parts, caps } => parts
                .iter()
                .zip(caps)
                .map(|(part, &cap)| set.intersection_len(part).min(cap))
                .sum(),
            Matroid::Transversal { slots, adjacency } => matching_size(set, *slots, adjacency),
            Matroid::Explicit { table } => {
                let mask = set.to_mask() as u32;
                *table
                    .get(&mask)
                    .ok_or_else(|| ValuationError::MissingEntry(mask_goods(mask)))?
            }
        })
    }

    /// Whether the family is cheap enough that caching ranks would only add overhead.
    fn is_closed_form(&self) -> bool {
        !matches!(self, Matroid::Transversal { .. })
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            Matroid::Uniform { .. } => "uniform",
            Matroid::Partition { .. } => "partition",
            Matroid::Marked { .. } => "marked",
            Matroid::Transversal { .. } => "transversal",
            Matroid::Explicit { .. } => "explicit",
        }
    }
}

fn mask_goods(mask: u32) -> Vec<usize> {
    (0..32).filter(|k| mask >> k & 1 == 1).collect()
}

/// Maximum bipartite matching between the goods of `set` and the slots
/// (augmenting paths, one DFS per good).
fn matching_size(set: &GoodSet, slots: usize, adjacency: &[Vec<usize>]) -> usize {
    fn try_assign(
        g: usize,
        adjacency: &[Vec<usize>],
        slot_owner: &mut [Option<usize>],
        visited: &mut [bool],
    ) -> bool {
        for &s in &adjacency[g] {
            if visited[s] {
                continue;
            }
            visited[s] = true;
            match slot_owner[s] {
                None => {
                    slot_owner[s] = Some(g);
                    return true;
                }
                Some(other) => {
                    if try_assign(other, adjacency, slot_owner, visited) {
                        slot_owner[s] = Some(g);
                        return true;
                    }
                }
            }
        }
        false
    }

    let mut slot_owner = vec![None; slots];
    let mut visited = vec![false; slots];
    let mut size = 0;
    for g in set.iter() {
        if size == slots {
            break;
        }
        visited.iter_mut().for_each(|v| *v = false);
        if try_assign(g.0, adjacency, &mut slot_owner, &mut visited) {
            size += 1;
        }
    }
    size
}

/// A `{1, c}` bivalued submodular valuation backed by a matroid rank function.
#[derive(Debug)]
pub struct Valuation {
    c: u64,
    m: usize,
    matroid: Matroid,
    cache: Mutex<HashMap<GoodSet, usize>>,
}

impl Clone for Valuation {
    fn clone(&self) -> Self {
        Self {
            c: self.c,
            m: self.m,
            matroid: self.matroid.clone(),
            cache: Mutex::new(HashMap::new()),
        }
    }
}

impl PartialEq for Valuation {
    fn eq(&self, other: &Self) -> bool {
        self.c == other.c && self.m == other.m && self.matroid == other.matroid
    }
}

impl Valuation {
    /// Checks the matroid's structure (not its axioms; see [`validate_explicit`]).
    pub fn new(c: u64, m: usize, matroid: Matroid) -> Result<Self, ValuationError> {
        matroid.check_structure(m)?;
        Ok(Self {
            c,
            m,
            matroid,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn c(&self) -> u64 {
        self.c
    }

    pub fn num_goods(&self) -> usize {
        self.m
    }

    pub fn matroid(&self) -> &Matroid {
        &self.matroid
    }

    /// Number of goods in `set` that can simultaneously be worth `c`.
    pub fn rank(&self, set: &GoodSet) -> usize {
        if self.matroid.is_closed_form() {
            return self.matroid.try_rank(set).expect("checked at construction");
        }
        if let Some(&r) = self.cache.lock().unwrap().get(set) {
            return r;
        }
        let r = self.matroid.try_rank(set).expect("checked at construction");
        let mut cache = self.cache.lock().unwrap();
        if cache.len() >= RANK_CACHE_LIMIT {
            cache.clear();
        }
        cache.insert(set.clone(), r);
        r
    }

    /// True when every good of `set` is worth `c`, i.e. `v(set) = c|set|`.
    pub fn is_clean(&self, set: &GoodSet) -> bool {
        self.rank(set) == set.len()
    }

    pub fn value(&self, set: &GoodSet) -> u64 {
        set.len() as u64 + (self.c - 1) * self.rank(set) as u64
    }

    /// `v(set + g) - v(set)`, always `1` or `c`.
    pub fn marginal(&self, set: &GoodSet, g: GoodId) -> Result<u64, ValuationError> {
        if set.contains(g) {
            return Err(ValuationError::GoodInBundle(g));
        }
        Ok(1 + (self.c - 1) * self.rank_marginal(set, g) as u64)
    }

    /// `rank(set + g) - rank(set)` for `g` not in `set`.
    pub fn rank_marginal(&self, set: &GoodSet, g: GoodId) -> usize {
        debug_assert!(!set.contains(g));
        self.rank(&set.with(g)) - self.rank(set)
    }
}

/// One violated matroid axiom in an explicit rank table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AxiomViolation {
    /// `rank(∅) != 0`.
    Normalization { rank: usize },
    /// `rank(S + g) - rank(S)` outside `{0, 1}`.
    Marginal {
        set: Vec<usize>,
        good: usize,
        delta: i64,
    },
    /// `rank(S + g) - rank(S) < rank(S + h + g) - rank(S + h)`.
    Submodularity {
        set: Vec<usize>,
        extra: usize,
        good: usize,
    },
}

impl std::fmt::Display for AxiomViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AxiomViolation::Normalization { rank } => write!(f, "rank(empty) = {rank}"),
            AxiomViolation::Marginal { set, good, delta } => {
                write!(f, "rank({set:?} + {good}) - rank({set:?}) = {delta}")
            }
            AxiomViolation::Submodularity { set, extra, good } => write!(
                f,
                "adding {good} gains more on {set:?} + {extra} than on {set:?}"
            ),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AxiomReport {
    pub violations: Vec<AxiomViolation>,
}

impl AxiomReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks normalization, binary marginals and submodularity of an explicit
/// rank table. Submodularity is checked in its local form
/// `Δ(S, g) >= Δ(S + h, g)`, which is equivalent to the global one.
pub fn validate_explicit(val: &Valuation) -> Result<AxiomReport, ValuationError> {
    let Matroid::Explicit { table } = &val.matroid else {
        return Err(ValuationError::NotExplicit);
    };
    validate_rank_table(val.m, table)
}

pub fn validate_rank_table(
    m: usize,
    table: &HashMap<u32, usize>,
) -> Result<AxiomReport, ValuationError> {
    if m > EXPLICIT_MAX_GOODS {
        return Err(ValuationError::TooManyGoods {
            m,
            limit: EXPLICIT_MAX_GOODS,
        });
    }
    let lookup = |mask: u32| {
        table
            .get(&mask)
            .copied()
            .ok_or_else(|| ValuationError::MissingEntry(mask_goods(mask)))
    };
    let mut report = AxiomReport::default();
    let empty = lookup(0)?;
    if empty != 0 {
        report
            .violations
            .push(AxiomViolation::Normalization { rank: empty });
    }
    for mask in 0..(1u32 << m) {
        let base = lookup(mask)? as i64;
        for g in (0..m).filter(|g| mask >> g & 1 == 0) {
            let gain = lookup(mask | 1 << g)? as i64 - base;
            if gain != 0 && gain != 1 {
                report.violations.push(AxiomViolation::Marginal {
                    set: mask_goods(mask),
                    good: g,
                    delta: gain,
                });
            }
            for h in (0..m).filter(|&h| h != g && mask >> h & 1 == 0) {
                let with_h = mask | 1 << h;
                let gain_h = lookup(with_h | 1 << g)? as i64 - lookup(with_h)? as i64;
                if gain < gain_h {
                    report.violations.push(AxiomViolation::Submodularity {
                        set: mask_goods(mask),
                        extra: h,
                        good: g,
                    });
                }
            }
        }
    }
    Ok(report)
}

/// Original `(a, b)` values when the instance was given unscaled.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Scale {
    pub a: u64,
    pub b: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Agent {
    pub name: String,
    pub valuation: Valuation,
}

/// Agents with bivalued valuations sharing the same `c`, over named goods.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    c: u64,
    goods: Vec<String>,
    agents: Vec<Agent>,
    scale: Option<Scale>,
}

impl Instance {
    /// Builds and validates an instance. Explicit rank tables are checked
    /// against the matroid axioms.
    pub fn new(
        c: u64,
        goods: Vec<String>,
        agents: Vec<(String, Matroid)>,
    ) -> Result<Self, InstanceError> {
        if c < 2 {
            return Err(InstanceError::BadRatio(c.to_string()));
        }
        if agents.is_empty() {
            return Err(InstanceError::NoAgents);
        }
        let m = goods.len();
        let mut built = Vec::with_capacity(agents.len());
        for (idx, (name, matroid)) in agents.into_iter().enumerate() {
            let agent = AgentId(idx);
            let valuation = Valuation::new(c, m, matroid)
                .map_err(|source| InstanceError::Valuation { agent, source })?;
            if let Matroid::Explicit { .. } = valuation.matroid() {
                let report = validate_explicit(&valuation)
                    .map_err(|source| InstanceError::Valuation { agent, source })?;
                if let Some(first) = report.violations.first() {
                    return Err(InstanceError::InvalidExplicit {
                        agent,
                        count: report.violations.len(),
                        first: first.to_string(),
                    });
                }
            }
            built.push(Agent { name, valuation });
        }
        Ok(Self {
            c,
            goods,
            agents: built,
            scale: None,
        })
    }

    /// Builds an instance from unscaled `(a, b)` values, rescaling to `(1, b / a)`.
    pub fn from_pair(
        a: u64,
        b: u64,
        goods: Vec<String>,
        agents: Vec<(String, Matroid)>,
    ) -> Result<Self, InstanceError> {
        if a == 0 || b <= a {
            return Err(InstanceError::BadRatio(format!("{b}/{a}")));
        }
        if !b.is_multiple_of(a) {
            return Err(InstanceError::NonDivisible { a, b });
        }
        let mut inst = Self::new(b / a, goods, agents)?;
        inst.scale = Some(Scale { a, b });
        Ok(inst)
    }

    /// Instance with anonymous goods `g1..gm` and agents `a1..an`.
    pub fn unnamed(c: u64, m: usize, matroids: Vec<Matroid>) -> Result<Self, InstanceError> {
        let goods = (1..=m).map(|k| format!("g{k}")).collect();
        let agents = matroids
            .into_iter()
            .enumerate()
            .map(|(i, mt)| (format!("a{}", i + 1), mt))
            .collect();
        Self::new(c, goods, agents)
    }

    pub fn c(&self) -> u64 {
        self.c
    }

    pub fn num_goods(&self) -> usize {
        self.goods.len()
    }

    pub fn num_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn goods(&self) -> &[String] {
        &self.goods
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn agent_ids(&self) -> impl Iterator<Item = AgentId> {
        (0..self.agents.len()).map(AgentId)
    }

    pub fn valuation(&self, i: AgentId) -> &Valuation {
        &self.agents[i.0].valuation
    }

    pub fn scale(&self) -> Option<Scale> {
        self.scale
    }

    pub fn empty_set(&self) -> GoodSet {
        GoodSet::empty(self.num_goods())
    }

    pub fn all_goods(&self) -> GoodSet {
        GoodSet::full(self.num_goods())
    }

    pub fn good_name(&self, g: GoodId) -> &str {
        &self.goods[g.0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(m: usize, ids: &[usize]) -> GoodSet {
        GoodSet::from_ids(m, ids.iter().map(|&k| GoodId(k)))
    }

    #[test]
    fn uniform_rank_caps_at_one() {
        let v = Valuation::new(3, 4, Matroid::Uniform { cap: 1 }).unwrap();
        assert_eq!(v.rank(&set(4, &[2, 3])), 1);
        assert_eq!(v.rank(&set(4, &[])), 0);
        // c min(|S|,1) + max(|S|-1,0) with c = 3 and |S| = 2
        assert_eq!(v.value(&set(4, &[2, 3])), 4);
        assert_eq!(v.marginal(&set(4, &[2]), GoodId(3)).unwrap(), 1);
    }

    #[test]
    fn partition_rank() {
        let m = 3;
        let mt = Matroid::Partition {
            parts: vec![set(m, &[0, 1]), set(m, &[2])],
            caps: vec![1, 1],
        };
        let v = Valuation::new(2, m, mt).unwrap();
        assert_eq!(v.rank(&set(m, &[0, 1, 2])), 2);
    }

    #[test]
    fn marked_all_goods_is_c_per_good() {
        let m = 6;
        let v = Valuation::new(
            5,
            m,
            Matroid::Marked {
                marked: GoodSet::full(m),
            },
        )
        .unwrap();
        assert_eq!(v.value(&set(m, &[0, 3, 5])), 15);
        assert_eq!(v.value(&set(m, &[])), 0);
        for g in 0..m {
            assert_eq!(v.marginal(&set(m, &[]), GoodId(g)).unwrap(), 5);
        }
    }

    #[test]
    fn marginal_rejects_good_in_bundle() {
        let v = Valuation::new(2, 3, Matroid::Uniform { cap: 2 }).unwrap();
        assert_eq!(
            v.marginal(&set(3, &[1]), GoodId(1)),
            Err(ValuationError::GoodInBundle(GoodId(1)))
        );
    }

    #[test]
    fn transversal_rank_is_matching_size() {
        // goods 0,1 both only fit slot 0; good 2 fits slots 0 and 1
        let mt = Matroid::Transversal {
            slots: 2,
            adjacency: vec![vec![0], vec![0], vec![0, 1]],
        };
        let v = Valuation::new(2, 3, mt).unwrap();
        assert_eq!(v.rank(&set(3, &[0, 1])), 1);
        assert_eq!(v.rank(&set(3, &[0, 2])), 2);
        assert_eq!(v.rank(&set(3, &[0, 1, 2])), 2);
        // cached path agrees
        assert_eq!(v.rank(&set(3, &[0, 1, 2])), 2);
    }

    #[test]
    fn explicit_table_missing_entry() {
        let mut table = HashMap::new();
        table.insert(0u32, 0usize);
        table.insert(1, 1);
        table.insert(2, 1);
        let err = Valuation::new(
            2,
            2,
            Matroid::Explicit {
                table: table.clone(),
            },
        )
        .unwrap_err();
        assert_eq!(err, ValuationError::MissingEntry(vec![0, 1]));
        let mt = Matroid::Explicit { table };
        assert!(mt.try_rank(&set(2, &[0, 1])).is_err());
    }

    fn uniform_table(m: usize, cap: usize) -> HashMap<u32, usize> {
        (0..1u32 << m)
            .map(|mask| (mask, (mask.count_ones() as usize).min(cap)))
            .collect()
    }

    #[test]
    fn explicit_valid_uniform_has_no_violations() {
        let v = Valuation::new(
            2,
            4,
            Matroid::Explicit {
                table: uniform_table(4, 2),
            },
        )
        .unwrap();
        assert!(validate_explicit(&v).unwrap().is_valid());
    }

    #[test]
    fn explicit_jump_of_two_is_reported() {
        let mut table = uniform_table(2, 2);
        table.insert(0b01, 0);
        table.insert(0b10, 0);
        let report = validate_rank_table(2, &table).unwrap();
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, AxiomViolation::Marginal { delta: 2, .. })));
    }

    #[test]
    fn explicit_size_limit() {
        let v = Valuation::new(2, 3, Matroid::Uniform { cap: 1 }).unwrap();
        assert_eq!(validate_explicit(&v), Err(ValuationError::NotExplicit));
        assert!(matches!(
            validate_rank_table(21, &HashMap::new()),
            Err(ValuationError::TooManyGoods { m: 21, .. })
        ));
    }

    #[test]
    fn instance_rejects_bad_ratios() {
        let goods = vec!["x".to_string()];
        let agents = || vec![("a".to_string(), Matroid::Uniform { cap: 1 })];
        assert_eq!(
            Instance::from_pair(3, 7, goods.clone(), agents()),
            Err(InstanceError::NonDivisible { a: 3, b: 7 })
        );
        assert!(matches!(
            Instance::new(1, goods.clone(), agents()),
            Err(InstanceError::BadRatio(_))
        ));
        let inst = Instance::from_pair(2, 6, goods, agents()).unwrap();
        assert_eq!(inst.c(), 3);
        assert_eq!(inst.scale(), Some(Scale { a: 2, b: 6 }));
    }
}
