//! Exhaustive ground truth for small instances.
//!
//! Nothing here goes through the solver or the gain functions: criteria are
//! compared directly on utility vectors, and every assignment of goods to
//! agents (or the pool) is enumerated.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use num_bigint::BigUint;
use rayon::prelude::*;
use thiserror::Error;

use crate::allocation::{
    compare_domination, utility_vector, Allocation, CleanAllocation, Decomposition, Domination,
    Holder,
};
use crate::goods::{AgentId, GoodSet};
use crate::solver::Criterion;
use crate::valuation::Instance;

/// Largest number of assignments `(n + 1)^m` the oracle will enumerate.
pub const ENUMERATION_CAP: u64 = 10_000_000;
/// Dominance certification also enumerates decompositions of every optimum.
pub const CERTIFY_MAX_GOODS: usize = 6;

const REAL_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("enumerating (n + 1)^m = {count} allocations exceeds the cap of {ENUMERATION_CAP}")]
    TooLarge { count: u128 },
    #[error("dominance certification supports at most {CERTIFY_MAX_GOODS} goods (got {0})")]
    CertifyTooLarge(usize),
}

fn assignment_count(inst: &Instance) -> Result<u64, OracleError> {
    let base = inst.num_agents() as u128 + 1;
    let mut count: u128 = 1;
    for _ in 0..inst.num_goods() {
        count *= base;
        if count > u128::from(ENUMERATION_CAP) {
            return Err(OracleError::TooLarge { count });
        }
    }
    Ok(count as u64)
}

/// Holder of each good for assignment number `index`; good 0 is the least
/// significant digit, digit 0 is the pool and digit `k` is agent `k - 1`.
fn decode(index: u64, n: usize, m: usize) -> Vec<Holder> {
    let base = n as u64 + 1;
    let mut rest = index;
    (0..m)
        .map(|_| {
            let d = rest % base;
            rest /= base;
            if d == 0 {
                Holder::Pool
            } else {
                Holder::Agent(AgentId(d as usize - 1))
            }
        })
        .collect()
}

/// Every allocation of the instance's goods to agents or the pool, in
/// mixed-radix order.
pub fn enumerate_allocations(
    inst: &Instance,
) -> Result<impl Iterator<Item = Allocation>, OracleError> {
    let count = assignment_count(inst)?;
    let (n, m) = (inst.num_agents(), inst.num_goods());
    Ok((0..count).map(move |k| Allocation::from_holders(n, &decode(k, n, m))))
}

/// Per-agent value of every bundle, indexed by bitmask.
fn value_tables(inst: &Instance) -> Vec<Vec<u64>> {
    let m = inst.num_goods();
    inst.agent_ids()
        .map(|i| {
            let val = inst.valuation(i);
            (0..1u64 << m)
                .map(|mask| val.value(&GoodSet::from_mask(m, mask)))
                .collect()
        })
        .collect()
}

fn utilities_of(
    index: u64,
    n: usize,
    m: usize,
    tables: &[Vec<u64>],
    masks: &mut [u64],
) -> Vec<u64> {
    masks.iter_mut().for_each(|x| *x = 0);
    let base = n as u64 + 1;
    let mut rest = index;
    for g in 0..m {
        let d = (rest % base) as usize;
        rest /= base;
        if d > 0 {
            masks[d - 1] |= 1 << g;
        }
    }
    masks
        .iter()
        .zip(tables)
        .map(|(&mask, t)| t[mask as usize])
        .collect()
}

/// Every distinct utility vector reachable by some allocation.
pub fn achievable_utility_vectors(inst: &Instance) -> Result<BTreeSet<Vec<u64>>, OracleError> {
    let count = assignment_count(inst)?;
    let (n, m) = (inst.num_agents(), inst.num_goods());
    let tables = value_tables(inst);
    let base = n as u64 + 1;
    // split on the last good's digit so each worker owns a contiguous range
    let chunk = count.div_ceil(base).max(1);
    let parts: Vec<BTreeSet<Vec<u64>>> = (0..base)
        .into_par_iter()
        .map(|part| {
            let mut masks = vec![0u64; n];
            let lo = part * chunk;
            let hi = ((part + 1) * chunk).min(count);
            (lo..hi)
                .map(|k| utilities_of(k, n, m, &tables, &mut masks))
                .collect()
        })
        .collect();
    Ok(parts.into_iter().flatten().collect())
}

fn positive_count(u: &[u64]) -> usize {
    u.iter().filter(|&&x| x > 0).count()
}

fn positive_product(u: &[u64]) -> BigUint {
    u.iter()
        .filter(|&&x| x > 0)
        .map(|&x| BigUint::from(x))
        .product()
}

fn power_sum(u: &[u64], p: f64) -> f64 {
    u.iter()
        .filter(|&&x| x > 0)
        .map(|&x| (x as f64).powf(p))
        .sum()
}

/// Orders two utility vectors under `criterion`; `Greater` means `x` is better.
pub fn compare_by_criterion(criterion: Criterion, x: &[u64], y: &[u64]) -> Ordering {
    match criterion {
        Criterion::Mnw => positive_count(x)
            .cmp(&positive_count(y))
            .then_with(|| positive_product(x).cmp(&positive_product(y))),
        Criterion::Leximin => {
            let (mut sx, mut sy) = (x.to_vec(), y.to_vec());
            sx.sort_unstable();
            sy.sort_unstable();
            sx.cmp(&sy)
        }
        Criterion::PMean { p } => positive_count(x).cmp(&positive_count(y)).then_with(|| {
            let (a, b) = (power_sum(x, p), power_sum(y, p));
            let order = if (a - b).abs() <= REAL_TOLERANCE * a.abs().max(b.abs()) {
                Ordering::Equal
            } else {
                a.total_cmp(&b)
            };
            // for p < 0 a smaller power sum is a larger mean
            if p < 0.0 {
                order.reverse()
            } else {
                order
            }
        }),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Optimum {
    /// Lexicographically largest sorted vector among the optimal ones.
    pub best_sorted: Vec<u64>,
    /// Every optimal utility vector.
    pub optimal_vectors: BTreeSet<Vec<u64>>,
}

impl Optimum {
    pub fn contains(&self, utilities: &[u64]) -> bool {
        self.optimal_vectors.contains(utilities)
    }
}

/// Optimum of `criterion` over a precomputed set of achievable vectors.
pub fn optimum_over(criterion: Criterion, vectors: &BTreeSet<Vec<u64>>) -> Optimum {
    let mut best: Vec<&Vec<u64>> = Vec::new();
    for v in vectors {
        match best.first().map(|b| compare_by_criterion(criterion, v, b)) {
            None | Some(Ordering::Greater) => best = vec![v],
            Some(Ordering::Equal) => best.push(v),
            Some(Ordering::Less) => {}
        }
    }
    let optimal_vectors: BTreeSet<Vec<u64>> = best.into_iter().cloned().collect();
    let best_sorted = optimal_vectors
        .iter()
        .map(|v| {
            let mut s = v.clone();
            s.sort_unstable();
            s
        })
        .max()
        .unwrap_or_default();
    Optimum {
        best_sorted,
        optimal_vectors,
    }
}

pub fn brute_force_optimum(inst: &Instance, criterion: Criterion) -> Result<Optimum, OracleError> {
    Ok(optimum_over(criterion, &achievable_utility_vectors(inst)?))
}

/// Max Nash welfare by a second route: maximize the positive count, then
/// the sum of logarithms, breaking near-ties on the exact product.
pub fn mnw_optimum_by_logs(inst: &Instance) -> Result<BTreeSet<Vec<u64>>, OracleError> {
    let vectors = achievable_utility_vectors(inst)?;
    let key = |v: &Vec<u64>| {
        let logs: f64 = v.iter().filter(|&&x| x > 0).map(|&x| (x as f64).ln()).sum();
        (positive_count(v), logs)
    };
    let (count, logs) = vectors
        .iter()
        .map(key)
        .max_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)))
        .unwrap_or((0, 0.0));
    let near: Vec<&Vec<u64>> = vectors
        .iter()
        .filter(|v| {
            let (c, l) = key(v);
            c == count && (l - logs).abs() < 1e-9
        })
        .collect();
    let top = near
        .iter()
        .map(|v| positive_product(v))
        .max()
        .unwrap_or_default();
    Ok(near
        .into_iter()
        .filter(|v| positive_product(v) == top)
        .cloned()
        .collect())
}

/// All decompositions of `alloc`: per agent, every clean subset of the
/// bundle whose size equals the bundle's rank.
pub fn all_decompositions(inst: &Instance, alloc: &Allocation) -> Vec<Decomposition> {
    let m = inst.num_goods();
    let per_agent: Vec<Vec<GoodSet>> = inst
        .agent_ids()
        .map(|i| {
            let val = inst.valuation(i);
            let bundle = alloc.bundle(i);
            let goods = bundle.to_vec();
            let rank = val.rank(bundle);
            (0..1u64 << goods.len())
                .filter(|mask| mask.count_ones() as usize == rank)
                .map(|mask| {
                    GoodSet::from_ids(
                        m,
                        goods
                            .iter()
                            .enumerate()
                            .filter(|(k, _)| mask >> k & 1 == 1)
                            .map(|(_, &g)| g),
                    )
                })
                .filter(|t| val.is_clean(t))
                .collect()
        })
        .collect();

    let mut out = Vec::new();
    let mut choice = vec![0usize; per_agent.len()];
    if per_agent.iter().any(Vec::is_empty) {
        return out;
    }
    loop {
        let clean: Vec<GoodSet> = choice
            .iter()
            .enumerate()
            .map(|(i, &k)| per_agent[i][k].clone())
            .collect();
        let supplementary = clean
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let mut s = alloc.bundle(AgentId(i)).clone();
                s.difference_with(c);
                s
            })
            .collect();
        out.push(Decomposition {
            clean: CleanAllocation::from_bundles(m, clean),
            supplementary,
        });
        // odometer
        let mut pos = 0;
        loop {
            if pos == choice.len() {
                return out;
            }
            choice[pos] += 1;
            if choice[pos] < per_agent[pos].len() {
                break;
            }
            choice[pos] = 0;
            pos += 1;
        }
    }
}

#[derive(Clone, Debug)]
pub struct Certificate {
    /// The candidate's utility vector is optimal for the criterion.
    pub optimal: bool,
    /// An optimal allocation (with decomposition) that dominates the candidate.
    pub dominated_by: Option<(Allocation, Decomposition)>,
    pub optima_checked: usize,
    pub decompositions_checked: usize,
}

impl Certificate {
    pub fn is_certified(&self) -> bool {
        self.optimal && self.dominated_by.is_none()
    }
}

/// Confirms the candidate is optimal for `criterion` and that no optimal
/// allocation, under any of its decompositions, dominates it.
pub fn certify_dominating(
    inst: &Instance,
    candidate: (&Allocation, &Decomposition),
    criterion: Criterion,
) -> Result<Certificate, OracleError> {
    if inst.num_goods() > CERTIFY_MAX_GOODS {
        return Err(OracleError::CertifyTooLarge(inst.num_goods()));
    }
    let optimum = brute_force_optimum(inst, criterion)?;
    let reference = optimum
        .optimal_vectors
        .iter()
        .next()
        .expect("at least one allocation exists");
    let mut cert = Certificate {
        optimal: compare_by_criterion(criterion, &utility_vector(inst, candidate.0), reference)
            == Ordering::Equal,
        dominated_by: None,
        optima_checked: 0,
        decompositions_checked: 0,
    };
    if !cert.optimal {
        return Ok(cert);
    }
    for y in enumerate_allocations(inst)? {
        if !optimum.contains(&utility_vector(inst, &y)) {
            continue;
        }
        cert.optima_checked += 1;
        for yd in all_decompositions(inst, &y) {
            cert.decompositions_checked += 1;
            if compare_domination(inst, (&y, &yd), candidate) == Domination::Dominates {
                cert.dominated_by = Some((y, yd));
                return Ok(cert);
            }
        }
    }
    Ok(cert)
}
