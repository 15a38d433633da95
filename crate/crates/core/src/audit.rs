//! Fairness and efficiency audits of a finished allocation.

use std::fmt::Write as _;

use num_bigint::BigUint;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::allocation::{utility_vector, Allocation};
use crate::goods::{AgentId, GoodId, GoodSet};
use crate::solver::Criterion;
use crate::valuation::Instance;

/// Exhaustive maximin-share computation is limited to this many agents...
pub const MMS_MAX_AGENTS: usize = 4;
/// ...and this many goods.
pub const MMS_MAX_GOODS: usize = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AuditError {
    #[error("allocation leaves {0} good(s) unallocated")]
    Incomplete(usize),
    #[error("allocation has {got} bundles, instance has {expected} agents")]
    Shape { expected: usize, got: usize },
    #[error(
        "maximin share is only computed exactly for n <= {MMS_MAX_AGENTS} and m <= {MMS_MAX_GOODS} \
         (got n = {n}, m = {m})"
    )]
    MmsTooLarge { n: usize, m: usize },
    #[error("p-mean welfare needs a finite non-zero p (got {0})")]
    BadExponent(f64),
}

/// `envious` envies `envied` even after removing `good` (EFX), or after
/// removing any single good (EF1, `good` is `None`).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EnvyWitness {
    pub envious: AgentId,
    pub envied: AgentId,
    pub good: Option<GoodId>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EnvyCheck {
    pub holds: bool,
    pub witness: Option<EnvyWitness>,
}

impl EnvyCheck {
    fn from_witness(witness: Option<EnvyWitness>) -> Self {
        Self {
            holds: witness.is_none(),
            witness,
        }
    }
}

fn check_shape(inst: &Instance, alloc: &Allocation) -> Result<(), AuditError> {
    if alloc.num_agents() != inst.num_agents() {
        return Err(AuditError::Shape {
            expected: inst.num_agents(),
            got: alloc.num_agents(),
        });
    }
    if !alloc.is_complete() {
        return Err(AuditError::Incomplete(alloc.unallocated().len()));
    }
    Ok(())
}

fn pairs(n: usize) -> impl Iterator<Item = (AgentId, AgentId)> {
    (0..n).flat_map(move |i| {
        (0..n)
            .filter(move |&j| j != i)
            .map(move |j| (AgentId(i), AgentId(j)))
    })
}

/// Envy-freeness up to one good. An empty bundle cannot be envied.
pub fn check_ef1(inst: &Instance, alloc: &Allocation) -> Result<EnvyCheck, AuditError> {
    check_shape(inst, alloc)?;
    let witness = pairs(inst.num_agents()).find_map(|(i, j)| {
        let val = inst.valuation(i);
        let own = val.value(alloc.bundle(i));
        let other = alloc.bundle(j);
        let satisfied =
            other.is_empty() || other.iter().any(|g| own >= val.value(&other.without(g)));
        (!satisfied).then_some(EnvyWitness {
            envious: i,
            envied: j,
            good: None,
        })
    });
    Ok(EnvyCheck::from_witness(witness))
}

/// Envy-freeness up to any good.
pub fn check_efx(inst: &Instance, alloc: &Allocation) -> Result<EnvyCheck, AuditError> {
    check_shape(inst, alloc)?;
    let witness = pairs(inst.num_agents()).find_map(|(i, j)| {
        let val = inst.valuation(i);
        let own = val.value(alloc.bundle(i));
        let other = alloc.bundle(j);
        other
            .iter()
            .find(|&g| own < val.value(&other.without(g)))
            .map(|g| EnvyWitness {
                envious: i,
                envied: j,
                good: Some(g),
            })
    });
    Ok(EnvyCheck::from_witness(witness))
}

fn biguint_as_string<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

/// Number of agents with positive utility and the product of their utilities.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct NashWelfare {
    pub positive: usize,
    #[serde(serialize_with = "biguint_as_string")]
    pub product: BigUint,
}

impl NashWelfare {
    pub fn from_utilities(utilities: &[u64]) -> Self {
        let positive: Vec<u64> = utilities.iter().copied().filter(|&u| u > 0).collect();
        Self {
            positive: positive.len(),
            product: positive.iter().map(|&u| BigUint::from(u)).product(),
        }
    }
}

pub fn nash_welfare(inst: &Instance, alloc: &Allocation) -> Result<NashWelfare, AuditError> {
    check_shape(inst, alloc)?;
    Ok(NashWelfare::from_utilities(&utility_vector(inst, alloc)))
}

/// `((1/n) Σ_{u_i > 0} u_i^p)^(1/p)`; zero when nobody has positive utility.
pub fn p_mean_of(utilities: &[u64], p: f64) -> Result<f64, AuditError> {
    if !p.is_finite() || p == 0.0 {
        return Err(AuditError::BadExponent(p));
    }
    let n = utilities.len() as f64;
    let sum: f64 = utilities
        .iter()
        .filter(|&&u| u > 0)
        .map(|&u| (u as f64).powf(p))
        .sum();
    if sum == 0.0 {
        return Ok(0.0);
    }
    Ok((sum / n).powf(1.0 / p))
}

pub fn pmean_welfare(inst: &Instance, alloc: &Allocation, p: f64) -> Result<f64, AuditError> {
    check_shape(inst, alloc)?;
    p_mean_of(&utility_vector(inst, alloc), p)
}

pub fn usw(inst: &Instance, alloc: &Allocation) -> Result<u64, AuditError> {
    check_shape(inst, alloc)?;
    Ok(utility_vector(inst, alloc).iter().sum())
}

/// Exact maximin share of agent `i`: the best worst bundle over all
/// partitions of the goods into `n` (possibly empty) bundles.
pub fn mms(inst: &Instance, i: AgentId) -> Result<u64, AuditError> {
    let (n, m) = (inst.num_agents(), inst.num_goods());
    if n > MMS_MAX_AGENTS || m > MMS_MAX_GOODS {
        return Err(AuditError::MmsTooLarge { n, m });
    }
    let val = inst.valuation(i);
    let values: Vec<u64> = (0..1u64 << m)
        .map(|mask| val.value(&GoodSet::from_mask(m, mask)))
        .collect();
    let mut blocks = vec![0u64; n];
    let mut best = 0;
    partition_search(0, m, 0, &mut blocks, &values, &mut best);
    Ok(best)
}

/// Restricted-growth enumeration: good `g` joins one of the `used` blocks or opens a new one.
fn partition_search(
    g: usize,
    m: usize,
    used: usize,
    blocks: &mut [u64],
    values: &[u64],
    best: &mut u64,
) {
    if g == m {
        let worst = if used < blocks.len() {
            0
        } else {
            blocks
                .iter()
                .map(|&b| values[b as usize])
                .min()
                .unwrap_or(0)
        };
        *best = (*best).max(worst);
        return;
    }
    let limit = (used + 1).min(blocks.len());
    for k in 0..limit {
        blocks[k] |= 1 << g;
        partition_search(g + 1, m, used.max(k + 1), blocks, values, best);
        blocks[k] &= !(1 << g);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AgentMms {
    pub agent: AgentId,
    pub utility: u64,
    pub mms: u64,
    /// `utility / mms`; absent when the maximin share is zero.
    pub ratio: Option<f64>,
    pub meets_guarantee: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MmsReport {
    pub agents: Vec<AgentMms>,
    /// Guaranteed fraction `(num, den)` for the hinted criterion.
    pub guarantee: Option<(u64, u64)>,
    pub violations: Vec<AgentId>,
}

/// Maximin-share ratios of every agent, flagged against the guarantee of
/// `hint` (2/5 for max Nash welfare, 1/(c+2) for leximin) when given.
pub fn mms_ratio_report(
    inst: &Instance,
    alloc: &Allocation,
    hint: Option<Criterion>,
) -> Result<MmsReport, AuditError> {
    check_shape(inst, alloc)?;
    let guarantee = hint.and_then(|h| h.mms_guarantee(inst.c()));
    let utilities = utility_vector(inst, alloc);
    let mut agents = Vec::with_capacity(inst.num_agents());
    let mut violations = Vec::new();
    for i in inst.agent_ids() {
        let share = mms(inst, i)?;
        let u = utilities[i.0];
        // u / share >= num / den, exactly
        let meets = match guarantee {
            Some((num, den)) => {
                u128::from(u) * u128::from(den) >= u128::from(num) * u128::from(share)
            }
            None => true,
        };
        if !meets {
            violations.push(i);
        }
        agents.push(AgentMms {
            agent: i,
            utility: u,
            mms: share,
            ratio: (share > 0).then(|| u as f64 / share as f64),
            meets_guarantee: meets,
        });
    }
    Ok(MmsReport {
        agents,
        guarantee,
        violations,
    })
}

#[derive(Clone, Debug, Default)]
pub struct AuditOptions {
    pub p_values: Vec<f64>,
    pub mms: bool,
    pub criterion_hint: Option<Criterion>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PMeanEntry {
    pub p: f64,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditReport {
    pub utilities: Vec<u64>,
    pub nash: NashWelfare,
    pub usw: u64,
    pub pmean: Vec<PMeanEntry>,
    pub ef1: EnvyCheck,
    pub efx: EnvyCheck,
    pub mms: Option<MmsReport>,
}

pub fn audit(
    inst: &Instance,
    alloc: &Allocation,
    opts: &AuditOptions,
) -> Result<AuditReport, AuditError> {
    check_shape(inst, alloc)?;
    let utilities = utility_vector(inst, alloc);
    let pmean = opts
        .p_values
        .iter()
        .map(|&p| p_mean_of(&utilities, p).map(|value| PMeanEntry { p, value }))
        .collect::<Result<_, _>>()?;
    Ok(AuditReport {
        nash: NashWelfare::from_utilities(&utilities),
        usw: utilities.iter().sum(),
        pmean,
        ef1: check_ef1(inst, alloc)?,
        efx: check_efx(inst, alloc)?,
        mms: if opts.mms {
            Some(mms_ratio_report(inst, alloc, opts.criterion_hint)?)
        } else {
            None
        },
        utilities,
    })
}

impl AuditReport {
    /// Plain-text summary table.
    pub fn to_table(&self, inst: &Instance) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<16} {:>10} {:>10} {:>10}",
            "agent", "utility", "mms", "ratio"
        );
        for i in inst.agent_ids() {
            let (share, ratio) = match &self.mms {
                Some(r) => {
                    let a = &r.agents[i.0];
                    (
                        a.mms.to_string(),
                        a.ratio.map_or("-".to_string(), |x| format!("{x:.3}")),
                    )
                }
                None => ("-".into(), "-".into()),
            };
            let _ = writeln!(
                out,
                "{:<16} {:>10} {:>10} {:>10}",
                inst.agents()[i.0].name,
                self.utilities[i.0],
                share,
                ratio
            );
        }
        let _ = writeln!(
            out,
            "nash: {} positive, product {}",
            self.nash.positive, self.nash.product
        );
        let _ = writeln!(out, "usw: {}", self.usw);
        for e in &self.pmean {
            let _ = writeln!(out, "p-mean (p = {}): {:.6}", e.p, e.value);
        }
        let describe = |check: &EnvyCheck| match &check.witness {
            None => "yes".to_string(),
            Some(w) => {
                let names = &inst.agents();
                let mut s = format!(
                    "no ({} envies {}",
                    names[w.envious.0].name, names[w.envied.0].name
                );
                if let Some(g) = w.good {
                    let _ = write!(s, " after removing {}", inst.good_name(g));
                }
                s.push(')');
                s
            }
        };
        let _ = writeln!(out, "EF1: {}", describe(&self.ef1));
        let _ = writeln!(out, "EFX: {}", describe(&self.efx));
        if let Some(r) = &self.mms {
            if let Some((num, den)) = r.guarantee {
                let _ = writeln!(
                    out,
                    "{num}/{den}-MMS: {}",
                    if r.violations.is_empty() { "yes" } else { "no" }
                );
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::valuation::Matroid;

    fn set(m: usize, ids: &[usize]) -> GoodSet {
        GoodSet::from_ids(m, ids.iter().map(|&k| GoodId(k)))
    }

    fn additive_pair(c: u64, m: usize) -> Instance {
        Instance::unnamed(
            c,
            m,
            vec![
                Matroid::Marked {
                    marked: GoodSet::full(m)
                };
                2
            ],
        )
        .unwrap()
    }

    #[test]
    fn identical_additive_near_equal_split_is_ef1_and_efx() {
        let inst = additive_pair(2, 5);
        let x = Allocation::from_bundles(5, vec![set(5, &[0, 1]), set(5, &[2, 3, 4])]).unwrap();
        assert!(check_ef1(&inst, &x).unwrap().holds);
        assert!(check_efx(&inst, &x).unwrap().holds);
    }

    #[test]
    fn lopsided_split_fails_both() {
        let inst = additive_pair(2, 5);
        let x = Allocation::from_bundles(5, vec![set(5, &[0]), set(5, &[1, 2, 3, 4])]).unwrap();
        let ef1 = check_ef1(&inst, &x).unwrap();
        assert!(!ef1.holds);
        assert_eq!(
            ef1.witness,
            Some(EnvyWitness {
                envious: AgentId(0),
                envied: AgentId(1),
                good: None
            })
        );
        let efx = check_efx(&inst, &x).unwrap();
        assert_eq!(efx.witness.unwrap().good, Some(GoodId(1)));
    }

    #[test]
    fn single_agent_passes_everything() {
        let inst = Instance::unnamed(3, 4, vec![Matroid::Uniform { cap: 1 }]).unwrap();
        let x = Allocation::from_bundles(4, vec![GoodSet::full(4)]).unwrap();
        let report = audit(
            &inst,
            &x,
            &AuditOptions {
                p_values: vec![0.5],
                mms: true,
                criterion_hint: Some(Criterion::Mnw),
            },
        )
        .unwrap();
        assert!(report.ef1.holds && report.efx.holds);
        let mms = report.mms.unwrap();
        assert_eq!(mms.agents[0].ratio, Some(1.0));
        assert!(mms.violations.is_empty());
    }

    #[test]
    fn incomplete_allocation_rejected() {
        let inst = additive_pair(2, 3);
        let x = Allocation::from_bundles(3, vec![set(3, &[0]), set(3, &[1])]).unwrap();
        assert_eq!(check_ef1(&inst, &x), Err(AuditError::Incomplete(1)));
    }

    #[test]
    fn welfare_measures() {
        assert_eq!(
            NashWelfare::from_utilities(&[3, 15]),
            NashWelfare {
                positive: 2,
                product: BigUint::from(45u32)
            }
        );
        assert_eq!(
            NashWelfare::from_utilities(&[0, 0]),
            NashWelfare {
                positive: 0,
                product: BigUint::from(1u32)
            }
        );
        assert!((p_mean_of(&[3, 15], 1.0).unwrap() - 9.0).abs() < 1e-12);
        assert_eq!(p_mean_of(&[0, 0], -1.0).unwrap(), 0.0);
        assert!(p_mean_of(&[1], 0.0).is_err());
    }

    #[test]
    fn mms_identical_additive() {
        // v = c|S|, n = 2, m = 5: floor(5 / 2) c
        let inst = additive_pair(3, 5);
        assert_eq!(mms(&inst, AgentId(0)).unwrap(), 6);
    }

    #[test]
    fn mms_more_agents_than_goods_is_zero() {
        let inst = Instance::unnamed(2, 2, vec![Matroid::Uniform { cap: 2 }; 3]).unwrap();
        assert_eq!(mms(&inst, AgentId(0)).unwrap(), 0);
    }

    #[test]
    fn mms_size_limit() {
        let inst = Instance::unnamed(2, 13, vec![Matroid::Uniform { cap: 2 }; 2]).unwrap();
        assert_eq!(
            mms(&inst, AgentId(0)),
            Err(AuditError::MmsTooLarge { n: 2, m: 13 })
        );
    }
}
