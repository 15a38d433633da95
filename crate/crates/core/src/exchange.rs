//! Exchange graph over a clean allocation and transfers along its paths.
//!
//! There is an edge `g -> g'` when the holder of `g` can swap `g` for `g'`
//! and keep a clean bundle of the same size. Pool goods have edges to every
//! other good.

use std::collections::VecDeque;
use std::fmt::Write as _;

use thiserror::Error;

use crate::allocation::{CleanAllocation, Holder};
use crate::goods::{AgentId, GoodId, GoodSet};
use crate::valuation::Instance;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExchangeError {
    #[error("bundle of {0} is not clean")]
    NotClean(AgentId),
    #[error("invalid transfer path: {0}")]
    InvalidPath(String),
    #[error("transfer postcondition violated: {0}")]
    Postcondition(String),
}

/// Goods not held by `i` that are worth `c` on top of `i`'s clean bundle.
pub fn f_set(inst: &Instance, clean: &CleanAllocation, i: AgentId) -> GoodSet {
    let val = inst.valuation(i);
    let bundle = &clean.bundles[i.0];
    let base = bundle.len();
    let mut out = inst.empty_set();
    for g in (0..inst.num_goods()).map(GoodId) {
        if !bundle.contains(g) && val.rank(&bundle.with(g)) == base + 1 {
            out.insert(g);
        }
    }
    out
}

/// Edge test on a clean allocation; `holders` must be `clean.holders()`.
fn edge(
    inst: &Instance,
    clean: &CleanAllocation,
    holders: &[Holder],
    from: GoodId,
    to: GoodId,
) -> bool {
    if from == to {
        return false;
    }
    match holders[from.0] {
        Holder::Pool => true,
        Holder::Agent(j) => {
            let bundle = &clean.bundles[j.0];
            if bundle.contains(to) {
                return false;
            }
            let mut swapped = bundle.without(from);
            swapped.insert(to);
            inst.valuation(j).rank(&swapped) == bundle.len()
        }
    }
}

fn ensure_clean(inst: &Instance, clean: &CleanAllocation) -> Result<(), ExchangeError> {
    match inst
        .agent_ids()
        .find(|&i| !inst.valuation(i).is_clean(&clean.bundles[i.0]))
    {
        Some(i) => Err(ExchangeError::NotClean(i)),
        None => Ok(()),
    }
}

/// Fully materialized exchange graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExchangeGraph {
    holders: Vec<Holder>,
    successors: Vec<Vec<GoodId>>,
}

impl ExchangeGraph {
    pub fn build(inst: &Instance, clean: &CleanAllocation) -> Result<Self, ExchangeError> {
        ensure_clean(inst, clean)?;
        let m = inst.num_goods();
        let holders = clean.holders();
        let successors = (0..m)
            .map(|a| {
                (0..m)
                    .map(GoodId)
                    .filter(|&b| edge(inst, clean, &holders, GoodId(a), b))
                    .collect()
            })
            .collect();
        Ok(Self {
            holders,
            successors,
        })
    }

    pub fn num_goods(&self) -> usize {
        self.holders.len()
    }

    pub fn successors(&self, g: GoodId) -> &[GoodId] {
        &self.successors[g.0]
    }

    pub fn has_edge(&self, from: GoodId, to: GoodId) -> bool {
        self.successors[from.0].binary_search(&to).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.successors.iter().map(Vec::len).sum()
    }

    pub fn holder(&self, g: GoodId) -> Holder {
        self.holders[g.0]
    }

    /// Graphviz rendering; goods are grouped by holder.
    pub fn to_dot(&self, inst: &Instance) -> String {
        let mut out = String::from("digraph exchange {\n  rankdir=LR;\n");
        let mut groups: Vec<(String, Vec<GoodId>)> = vec![("unallocated".into(), Vec::new())];
        groups.extend(inst.agents().iter().map(|a| (a.name.clone(), Vec::new())));
        for (g, h) in self.holders.iter().enumerate() {
            let slot = match h {
                Holder::Pool => 0,
                Holder::Agent(i) => i.0 + 1,
            };
            groups[slot].1.push(GoodId(g));
        }
        for (k, (label, goods)) in groups.iter().enumerate() {
            let _ = writeln!(out, "  subgraph cluster_{k} {{\n    label=\"{label}\";");
            for g in goods {
                let _ = writeln!(out, "    n{} [label=\"{}\"];", g.0, inst.good_name(*g));
            }
            out.push_str("  }\n");
        }
        for (a, succ) in self.successors.iter().enumerate() {
            for b in succ {
                let _ = writeln!(out, "  n{a} -> n{};", b.0);
            }
        }
        out.push_str("}\n");
        out
    }
}

/// Breadth-first search from `sources` to `targets`. Sources and successors
/// are expanded in ascending good order, so the returned path is the
/// lexicographically smallest among the shortest ones. `edge` is only
/// queried for unvisited endpoints.
fn bfs_path(
    m: usize,
    sources: &GoodSet,
    targets: &GoodSet,
    mut edge: impl FnMut(GoodId, GoodId) -> bool,
) -> Option<Vec<GoodId>> {
    if let Some(g) = sources.iter().find(|&g| targets.contains(g)) {
        return Some(vec![g]);
    }
    let mut parent: Vec<Option<GoodId>> = vec![None; m];
    let mut visited = vec![false; m];
    let mut queue = VecDeque::new();
    for g in sources.iter() {
        visited[g.0] = true;
        queue.push_back(g);
    }
    while let Some(u) = queue.pop_front() {
        for v in (0..m).map(GoodId) {
            if visited[v.0] || !edge(u, v) {
                continue;
            }
            visited[v.0] = true;
            parent[v.0] = Some(u);
            if targets.contains(v) {
                let mut path = vec![v];
                let mut cur = v;
                while let Some(p) = parent[cur.0] {
                    path.push(p);
                    cur = p;
                }
                path.reverse();
                return Some(path);
            }
            queue.push_back(v);
        }
    }
    None
}

/// Shortest path on a materialized graph, with the same tie-breaking as the solver.
pub fn shortest_path(
    graph: &ExchangeGraph,
    sources: &GoodSet,
    targets: &GoodSet,
) -> Option<Vec<GoodId>> {
    bfs_path(graph.num_goods(), sources, targets, |a, b| {
        graph.has_edge(a, b)
    })
}

/// Shortest path from `F_i` to `targets`, evaluating edges lazily.
pub fn find_path(
    inst: &Instance,
    clean: &CleanAllocation,
    i: AgentId,
    targets: &GoodSet,
) -> Option<Vec<GoodId>> {
    let sources = f_set(inst, clean, i);
    if sources.is_empty() {
        return None;
    }
    let holders = clean.holders();
    bfs_path(inst.num_goods(), &sources, targets, |a, b| {
        edge(inst, clean, &holders, a, b)
    })
}

/// Moves goods along `path` without checking anything: each holder of
/// `path[k]` receives `path[k + 1]`, the last good leaves its holder, and
/// `receiver` gets `path[0]`. Returns the holder that lost a good.
pub(crate) fn transfer(clean: &mut CleanAllocation, path: &[GoodId], receiver: AgentId) -> Holder {
    let holders: Vec<Holder> = path.iter().map(|&g| clean.holder(g)).collect();
    for (k, &g) in path.iter().enumerate() {
        clean.bundle_of_mut(holders[k]).remove(g);
    }
    for k in 0..path.len() - 1 {
        clean.bundle_of_mut(holders[k]).insert(path[k + 1]);
    }
    clean.bundles[receiver.0].insert(path[0]);
    holders[path.len() - 1]
}

/// Augments along a shortest path from `F_receiver` to another bundle and
/// checks the result: the receiver gains one good, the last holder loses one,
/// every other bundle keeps its size and all bundles stay clean.
pub fn augment(
    inst: &Instance,
    clean: &CleanAllocation,
    path: &[GoodId],
    receiver: AgentId,
) -> Result<CleanAllocation, ExchangeError> {
    ensure_clean(inst, clean)?;
    let Some(&last) = path.last() else {
        return Err(ExchangeError::InvalidPath("empty path".into()));
    };
    let mut seen = inst.empty_set();
    for &g in path {
        if g.0 >= inst.num_goods() || !seen.insert(g) {
            return Err(ExchangeError::InvalidPath(format!(
                "repeated or unknown good {g}"
            )));
        }
    }
    if clean.bundles[receiver.0].contains(path[0]) {
        return Err(ExchangeError::InvalidPath(format!(
            "{} already holds {}",
            receiver, path[0]
        )));
    }
    let loser = clean.holder(last);
    if loser == Holder::Agent(receiver) {
        return Err(ExchangeError::InvalidPath(
            "path ends in the receiver's bundle".into(),
        ));
    }

    let before = clean.clone();
    let mut after = clean.clone();
    transfer(&mut after, path, receiver);

    for i in inst.agent_ids() {
        let expected = match Holder::Agent(i) {
            h if i == receiver => before.bundle_of(h).len() + 1,
            h if h == loser => before.bundle_of(h).len() - 1,
            h => before.bundle_of(h).len(),
        };
        if after.bundles[i.0].len() != expected {
            return Err(ExchangeError::Postcondition(format!(
                "{i} holds {} goods, expected {expected}",
                after.bundles[i.0].len()
            )));
        }
        if !inst.valuation(i).is_clean(&after.bundles[i.0]) {
            return Err(ExchangeError::Postcondition(format!(
                "{i} is no longer clean"
            )));
        }
    }
    Ok(after)
}
