//! JSON instance and allocation files.
//!
//! Goods and agents are referred to by name inside files; indices are an
//! in-memory detail.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use serde_json::Number;
use thiserror::Error;

use crate::allocation::Allocation;
use crate::goods::{AgentId, GoodId, GoodSet};
use crate::valuation::{Instance, InstanceError, Matroid, ValuationError, EXPLICIT_MAX_GOODS};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported format version {0} (expected {FORMAT_VERSION})")]
    Version(u32),
    #[error("give either c or both a and b")]
    RatioFields,
    #[error(
        "c must be an integer >= 2 (got {0}); computing MNW or leximin allocations is NP-hard \
         for non-integer ratios"
    )]
    NonIntegerRatio(String),
    #[error("duplicate {kind} name {name:?}")]
    Duplicate { kind: &'static str, name: String },
    #[error("unknown {kind} {name:?}")]
    Unknown { kind: &'static str, name: String },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Number>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<u64>,
    pub goods: Vec<String>,
    pub agents: Vec<AgentFile>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentFile {
    pub name: String,
    pub matroid: MatroidFile,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum MatroidFile {
    Uniform {
        cap: usize,
    },
    Partition {
        parts: Vec<Vec<String>>,
        caps: Vec<usize>,
    },
    Marked {
        goods: Vec<String>,
    },
    Transversal {
        slots: usize,
        /// Slots each good may fill; goods left out fill none.
        adjacency: BTreeMap<String, Vec<usize>>,
    },
    Explicit {
        ranks: Vec<RankEntry>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RankEntry {
    pub goods: Vec<String>,
    pub rank: usize,
}

fn index_names<'a>(
    kind: &'static str,
    names: impl IntoIterator<Item = &'a String>,
) -> Result<HashMap<&'a str, usize>, FormatError> {
    let mut out = HashMap::new();
    for (k, name) in names.into_iter().enumerate() {
        if out.insert(name.as_str(), k).is_some() {
            return Err(FormatError::Duplicate {
                kind,
                name: name.clone(),
            });
        }
    }
    Ok(out)
}

fn lookup(
    index: &HashMap<&str, usize>,
    kind: &'static str,
    name: &str,
) -> Result<usize, FormatError> {
    index
        .get(name)
        .copied()
        .ok_or_else(|| FormatError::Unknown {
            kind,
            name: name.to_string(),
        })
}

fn good_set(
    index: &HashMap<&str, usize>,
    m: usize,
    names: &[String],
) -> Result<GoodSet, FormatError> {
    let mut set = GoodSet::empty(m);
    for name in names {
        let g = GoodId(lookup(index, "good", name)?);
        if !set.insert(g) {
            return Err(FormatError::Duplicate {
                kind: "good",
                name: name.clone(),
            });
        }
    }
    Ok(set)
}

fn good_names(inst: &Instance, set: &GoodSet) -> Vec<String> {
    set.iter().map(|g| inst.good_name(g).to_string()).collect()
}

impl MatroidFile {
    fn to_matroid(&self, index: &HashMap<&str, usize>, m: usize) -> Result<Matroid, FormatError> {
        Ok(match self {
            MatroidFile::Uniform { cap } => Matroid::Uniform { cap: *cap },
            MatroidFile::Partition { parts, caps } => Matroid::Partition {
                parts: parts
                    .iter()
                    .map(|p| good_set(index, m, p))
                    .collect::<Result<_, _>>()?,
                caps: caps.clone(),
            },
            MatroidFile::Marked { goods } => Matroid::Marked {
                marked: good_set(index, m, goods)?,
            },
            MatroidFile::Transversal { slots, adjacency } => {
                let mut adj = vec![Vec::new(); m];
                for (name, list) in adjacency {
                    adj[lookup(index, "good", name)?] = list.clone();
                }
                Matroid::Transversal {
                    slots: *slots,
                    adjacency: adj,
                }
            }
            MatroidFile::Explicit { ranks } => {
                if m > EXPLICIT_MAX_GOODS {
                    let err = ValuationError::TooManyGoods {
                        m,
                        limit: EXPLICIT_MAX_GOODS,
                    };
                    return Err(FormatError::Invalid(err.to_string()));
                }
                let mut table = HashMap::new();
                for entry in ranks {
                    let mask = good_set(index, m, &entry.goods)?.to_mask() as u32;
                    if table.insert(mask, entry.rank).is_some() {
                        return Err(FormatError::Invalid(format!(
                            "rank given twice for {:?}",
                            entry.goods
                        )));
                    }
                }
                Matroid::Explicit { table }
            }
        })
    }

    fn from_matroid(inst: &Instance, matroid: &Matroid) -> Self {
        let m = inst.num_goods();
        match matroid {
            Matroid::Uniform { cap } => MatroidFile::Uniform { cap: *cap },
            Matroid::Partition { parts, caps } => MatroidFile::Partition {
                parts: parts.iter().map(|p| good_names(inst, p)).collect(),
                caps: caps.clone(),
            },
            Matroid::Marked { marked } => MatroidFile::Marked {
                goods: good_names(inst, marked),
            },
            Matroid::Transversal { slots, adjacency } => MatroidFile::Transversal {
                slots: *slots,
                adjacency: adjacency
                    .iter()
                    .enumerate()
                    .filter(|(_, l)| !l.is_empty())
                    .map(|(g, l)| (inst.good_name(GoodId(g)).to_string(), l.clone()))
                    .collect(),
            },
            Matroid::Explicit { table } => {
                let mut masks: Vec<(&u32, &usize)> = table.iter().collect();
                masks.sort();
                MatroidFile::Explicit {
                    ranks: masks
                        .into_iter()
                        .map(|(&mask, &rank)| RankEntry {
                            goods: good_names(inst, &GoodSet::from_mask(m, u64::from(mask))),
                            rank,
                        })
                        .collect(),
                }
            }
        }
    }
}

impl InstanceFile {
    pub fn parse(text: &str) -> Result<Self, FormatError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_instance(&self) -> Result<Instance, FormatError> {
        if self.version != FORMAT_VERSION {
            return Err(FormatError::Version(self.version));
        }
        let index = index_names("good", &self.goods)?;
        index_names("agent", self.agents.iter().map(|a| &a.name))?;
        let m = self.goods.len();
        let agents = self
            .agents
            .iter()
            .map(|a| Ok((a.name.clone(), a.matroid.to_matroid(&index, m)?)))
            .collect::<Result<Vec<_>, FormatError>>()?;
        let goods = self.goods.clone();
        match (&self.c, self.a, self.b) {
            (Some(c), None, None) => {
                let c = c
                    .as_u64()
                    .ok_or_else(|| FormatError::NonIntegerRatio(c.to_string()))?;
                Ok(Instance::new(c, goods, agents)?)
            }
            (None, Some(a), Some(b)) => Ok(Instance::from_pair(a, b, goods, agents)?),
            _ => Err(FormatError::RatioFields),
        }
    }

    pub fn from_instance(inst: &Instance) -> Self {
        let (c, a, b) = match inst.scale() {
            Some(s) => (None, Some(s.a), Some(s.b)),
            None => (Some(Number::from(inst.c())), None, None),
        };
        InstanceFile {
            version: FORMAT_VERSION,
            c,
            a,
            b,
            goods: inst.goods().to_vec(),
            agents: inst
                .agents()
                .iter()
                .map(|ag| AgentFile {
                    name: ag.name.clone(),
                    matroid: MatroidFile::from_matroid(inst, ag.valuation.matroid()),
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance files always serialize")
    }
}

pub fn parse_instance(text: &str) -> Result<Instance, FormatError> {
    InstanceFile::parse(text)?.to_instance()
}

pub fn instance_to_json(inst: &Instance) -> String {
    InstanceFile::from_instance(inst).to_json()
}

/// Bundles keyed by agent name. Extra fields (as in solver output) are ignored.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AllocationFile {
    pub version: u32,
    pub bundles: BTreeMap<String, Vec<String>>,
}

/// Bundles keyed by agent name.
pub fn named_bundles(inst: &Instance, bundles: &[GoodSet]) -> BTreeMap<String, Vec<String>> {
    inst.agents()
        .iter()
        .zip(bundles)
        .map(|(a, b)| (a.name.clone(), good_names(inst, b)))
        .collect()
}

impl AllocationFile {
    pub fn from_allocation(inst: &Instance, alloc: &Allocation) -> Self {
        AllocationFile {
            version: FORMAT_VERSION,
            bundles: named_bundles(inst, alloc.bundles()),
        }
    }

    pub fn parse(text: &str) -> Result<Self, FormatError> {
        Ok(serde_json::from_str(text)?)
    }

    /// Resolves names against `inst`. Agents missing from the file get empty
    /// bundles; goods missing from every bundle stay unallocated.
    pub fn to_allocation(&self, inst: &Instance) -> Result<Allocation, FormatError> {
        if self.version != FORMAT_VERSION {
            return Err(FormatError::Version(self.version));
        }
        let goods = index_names("good", inst.goods())?;
        let agents = index_names("agent", inst.agents().iter().map(|a| &a.name))?;
        let m = inst.num_goods();
        let mut bundles = vec![GoodSet::empty(m); inst.num_agents()];
        for (name, list) in &self.bundles {
            let i = AgentId(lookup(&agents, "agent", name)?);
            bundles[i.0] = good_set(&goods, m, list)?;
        }
        Allocation::from_bundles(m, bundles).map_err(|e| FormatError::Invalid(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("allocation files always serialize")
    }
}
