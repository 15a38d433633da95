//! Seeded random instances for each matroid family.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::goods::{GoodId, GoodSet};
use crate::valuation::{Instance, InstanceError, Matroid};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Marked,
    Uniform,
    Partition,
    Transversal,
}

impl Family {
    pub const ALL: [Family; 4] = [
        Family::Marked,
        Family::Uniform,
        Family::Partition,
        Family::Transversal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Marked => "marked",
            Family::Uniform => "uniform",
            Family::Partition => "partition",
            Family::Transversal => "transversal",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown family {0:?} (expected marked, uniform, partition or transversal)")]
pub struct UnknownFamily(pub String);

impl FromStr for Family {
    type Err = UnknownFamily;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| UnknownFamily(s.to_string()))
    }
}

/// Deterministic generator for one seed.
pub fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_subset(rng: &mut impl Rng, m: usize, p: f64) -> GoodSet {
    GoodSet::from_ids(m, (0..m).filter(|_| rng.gen_bool(p)).map(GoodId))
}

pub fn random_matroid(family: Family, m: usize, rng: &mut impl Rng) -> Matroid {
    match family {
        Family::Marked => Matroid::Marked {
            marked: random_subset(rng, m, 0.5),
        },
        Family::Uniform => Matroid::Uniform {
            cap: rng.gen_range(0..=m.div_ceil(2) + 1),
        },
        Family::Partition => {
            let k = rng.gen_range(1..=3usize);
            let mut parts = vec![GoodSet::empty(m); k];
            for g in 0..m {
                // roughly one good in six is a loop
                let slot = rng.gen_range(0..=k * 5);
                if slot < k * 5 {
                    parts[slot % k].insert(GoodId(g));
                }
            }
            let caps = parts
                .iter()
                .map(|p| rng.gen_range(0..=p.len().min(2)))
                .collect();
            Matroid::Partition { parts, caps }
        }
        Family::Transversal => {
            let slots = rng.gen_range(1..=m / 2 + 1);
            let adjacency = (0..m)
                .map(|_| (0..slots).filter(|_| rng.gen_bool(0.4)).collect())
                .collect();
            Matroid::Transversal { slots, adjacency }
        }
    }
}

/// Two goods competing for one slot: each alone has rank marginal 1, but
/// the second adds nothing once the first is present.
fn plant_conflict(matroid: &mut Matroid, rng: &mut impl Rng) {
    if let Matroid::Transversal { slots, adjacency } = matroid {
        if adjacency.len() < 2 {
            return;
        }
        let mut goods: Vec<usize> = (0..adjacency.len()).collect();
        goods.shuffle(rng);
        let slot = rng.gen_range(0..*slots);
        adjacency[goods[0]] = vec![slot];
        adjacency[goods[1]] = vec![slot];
    }
}

/// Random instance with `n` agents and `m` goods. Transversal instances have
/// a planted conflict in the first agent's matroid so the valuation is never
/// additive when `m >= 2`.
pub fn random_instance(
    family: Family,
    n: usize,
    m: usize,
    c: u64,
    rng: &mut impl Rng,
) -> Result<Instance, InstanceError> {
    let mut matroids: Vec<Matroid> = (0..n).map(|_| random_matroid(family, m, rng)).collect();
    if let Some(first) = matroids.first_mut() {
        plant_conflict(first, rng);
    }
    Instance::unnamed(c, m, matroids)
}

/// Instance for `cmd_gen`: same as [`random_instance`] with a fresh seeded rng.
pub fn generate(
    family: Family,
    n: usize,
    m: usize,
    c: u64,
    seed: u64,
) -> Result<Instance, InstanceError> {
    random_instance(family, n, m, c, &mut rng_for(seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::goods::AgentId;

    #[test]
    fn deterministic() {
        for family in Family::ALL {
            let a = generate(family, 3, 7, 2, 11).unwrap();
            let b = generate(family, 3, 7, 2, 11).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn transversal_has_non_additive_marginal() {
        for seed in 0..50 {
            let inst = generate(Family::Transversal, 2, 5, 3, seed).unwrap();
            let val = inst.valuation(AgentId(0));
            let m = inst.num_goods();
            let found = (0..1u64 << m).any(|mask| {
                let s = GoodSet::from_mask(m, mask);
                (0..m).map(GoodId).filter(|g| !s.contains(*g)).any(|g| {
                    s.iter()
                        .any(|h| val.rank_marginal(&s.without(h), g) != val.rank_marginal(&s, g))
                })
            });
            assert!(found, "seed {seed}");
        }
    }

    #[test]
    fn parse_family() {
        assert_eq!("partition".parse::<Family>().unwrap(), Family::Partition);
        assert!("graphic".parse::<Family>().is_err());
    }
}
