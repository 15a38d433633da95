//! Bivalued Yankee Swap.
//!
//! Goods start in the pool. Each round the agent with the best gain for an
//! extra `c` (among agents still in play) competes with the agent with the
//! best gain for an extra `1` (among agents out of play). A winner in play
//! tries to pull a `c`-valued good through the exchange graph from the pool;
//! failing that it leaves play for good. A winner out of play takes a free
//! pool good provisionally; provisional goods stay in the clean pool so
//! transfer paths may still claim them, in which case the holder gets another
//! free good instead.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::allocation::{Allocation, CleanAllocation, Decomposition};
use crate::exchange::{find_path, transfer};
use crate::goods::{AgentId, GoodId, GoodSet};
use crate::valuation::Instance;

/// Relative tolerance under which two real-valued gains count as equal.
pub const REAL_GAIN_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("unsupported criterion: {0}")]
    UnsupportedCriterion(String),
    #[error("solver invariant violated: {0}")]
    Invariant(String),
}

/// Numeric part of an ordinary gain.
#[derive(Clone, Copy, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Magnitude {
    /// `num / den` with `den > 0`, compared by cross-multiplication.
    Ratio {
        num: u64,
        den: u64,
    },
    Integer {
        value: i64,
    },
    /// Compared with relative tolerance [`REAL_GAIN_TOLERANCE`].
    Real {
        value: f64,
    },
}

impl Magnitude {
    fn as_f64(self) -> f64 {
        match self {
            Magnitude::Ratio { num, den } => num as f64 / den as f64,
            Magnitude::Integer { value } => value as f64,
            Magnitude::Real { value } => value,
        }
    }
}

fn real_cmp(a: f64, b: f64) -> Ordering {
    if (a - b).abs() <= REAL_GAIN_TOLERANCE * a.abs().max(b.abs()) {
        Ordering::Equal
    } else {
        a.total_cmp(&b)
    }
}

impl Ord for Magnitude {
    fn cmp(&self, other: &Self) -> Ordering {
        match (*self, *other) {
            (Magnitude::Ratio { num: a, den: b }, Magnitude::Ratio { num: x, den: y }) => {
                (u128::from(a) * u128::from(y)).cmp(&(u128::from(x) * u128::from(b)))
            }
            (Magnitude::Integer { value: a }, Magnitude::Integer { value: b }) => a.cmp(&b),
            (a, b) => real_cmp(a.as_f64(), b.as_f64()),
        }
    }
}

impl PartialOrd for Magnitude {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Magnitude {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Magnitude {}

/// Totally ordered gain: `Bottom < Ordinary(_) < ZeroEscape(_)`.
///
/// `ZeroEscape` stands in for the "very large" gain of lifting an agent off
/// zero utility, ordered by the value added.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(tag = "tier", rename_all = "snake_case")]
pub enum GainValue {
    Bottom,
    Ordinary { magnitude: Magnitude },
    ZeroEscape { added: u64 },
}

impl GainValue {
    pub fn ratio(num: u64, den: u64) -> Self {
        GainValue::Ordinary {
            magnitude: Magnitude::Ratio { num, den },
        }
    }

    pub fn integer(value: i64) -> Self {
        GainValue::Ordinary {
            magnitude: Magnitude::Integer { value },
        }
    }

    pub fn real(value: f64) -> Self {
        GainValue::Ordinary {
            magnitude: Magnitude::Real { value },
        }
    }
}

impl fmt::Display for GainValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GainValue::Bottom => write!(f, "-inf"),
            GainValue::ZeroEscape { added } => write!(f, "M*{added}"),
            GainValue::Ordinary { magnitude } => match magnitude {
                Magnitude::Ratio { num, den } => write!(f, "{num}/{den}"),
                Magnitude::Integer { value } => write!(f, "{value}"),
                Magnitude::Real { value } => write!(f, "{value}"),
            },
        }
    }
}

/// Scores the improvement of giving agent `agent` an extra `added` utility,
/// given the current utility vector.
pub trait GainFunction {
    fn gain(&self, c: u64, utilities: &[u64], agent: AgentId, added: u64) -> GainValue;
}

impl<F> GainFunction for F
where
    F: Fn(u64, &[u64], AgentId, u64) -> GainValue,
{
    fn gain(&self, c: u64, utilities: &[u64], agent: AgentId, added: u64) -> GainValue {
        self(c, utilities, agent, added)
    }
}

/// Justice criteria with a known gain function.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Criterion {
    /// Max Nash welfare.
    Mnw,
    Leximin,
    /// Max `p`-mean welfare for `p < 1`, `p != 0`.
    PMean {
        p: f64,
    },
}

impl Criterion {
    pub fn p_mean(p: f64) -> Result<Self, SolveError> {
        let c = Criterion::PMean { p };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        if let Criterion::PMean { p } = *self {
            if !p.is_finite() || p == 0.0 || p >= 1.0 {
                return Err(SolveError::UnsupportedCriterion(format!(
                    "p-mean welfare needs a finite p < 1 with p != 0 (got {p}); \
                     use mnw for p = 0"
                )));
            }
        }
        Ok(())
    }

    /// Guaranteed fraction of each agent's maximin share, as `(num, den)`.
    pub fn mms_guarantee(&self, c: u64) -> Option<(u64, u64)> {
        match self {
            Criterion::Mnw => Some((2, 5)),
            Criterion::Leximin => Some((1, c + 2)),
            Criterion::PMean { .. } => None,
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Criterion::Mnw => write!(f, "mnw"),
            Criterion::Leximin => write!(f, "leximin"),
            Criterion::PMean { p } => write!(f, "pmean:{p}"),
        }
    }
}

impl FromStr for Criterion {
    type Err = SolveError;

    /// Accepts `mnw`, `leximin` and `pmean:<p>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mnw" | "nash" => Ok(Criterion::Mnw),
            "leximin" => Ok(Criterion::Leximin),
            other => {
                let p = other
                    .strip_prefix("pmean:")
                    .and_then(|p| p.parse::<f64>().ok())
                    .ok_or_else(|| SolveError::UnsupportedCriterion(s.to_string()))?;
                Criterion::p_mean(p)
            }
        }
    }
}

impl GainFunction for Criterion {
    fn gain(&self, c: u64, utilities: &[u64], agent: AgentId, added: u64) -> GainValue {
        let u = utilities[agent.0];
        match *self {
            Criterion::Mnw if u == 0 => GainValue::ZeroEscape { added },
            Criterion::Mnw => GainValue::ratio(u + added, u),
            Criterion::Leximin => GainValue::integer(-((c + 1) as i64) * u as i64 + added as i64),
            Criterion::PMean { .. } if u == 0 => GainValue::ZeroEscape { added },
            Criterion::PMean { p } => {
                // (u + d)^p - u^p without cancellation
                let u = u as f64;
                let delta = u.powf(p) * (p * (added as f64 / u).ln_1p()).exp_m1();
                GainValue::real(if p < 0.0 { -delta } else { delta })
            }
        }
    }
}

/// Gain of adding `added` to agent `agent` under `criterion`.
pub fn gain(
    criterion: Criterion,
    c: u64,
    utilities: &[u64],
    agent: AgentId,
    added: u64,
) -> Result<GainValue, SolveError> {
    criterion.validate()?;
    Ok(criterion.gain(c, utilities, agent, added))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Replacement {
    pub agent: AgentId,
    pub stolen: GoodId,
    pub replacement: GoodId,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Action {
    /// Transfer along `path`; the agent received `path[0]`.
    Augmented {
        path: Vec<GoodId>,
        replacement: Option<Replacement>,
    },
    RemovedFromPlay,
    Provisional {
        good: GoodId,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub gain_c: GainValue,
    pub gain_1: GainValue,
    pub agent: AgentId,
    pub action: Action,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SolveTrace {
    pub records: Vec<IterationRecord>,
}

impl SolveTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// One JSON object per line.
    pub fn to_json_lines(&self) -> String {
        self.records
            .iter()
            .map(|r| serde_json::to_string(r).expect("trace records serialize") + "\n")
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub allocation: Allocation,
    pub decomposition: Decomposition,
    pub trace: SolveTrace,
}

#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    /// Re-check the loop invariants after every iteration.
    pub check_invariants: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            check_invariants: cfg!(debug_assertions),
        }
    }
}

pub fn solve(inst: &Instance, criterion: Criterion) -> Result<Solution, SolveError> {
    criterion.validate()?;
    solve_with(inst, &criterion, SolveOptions::default())
}

struct State {
    c: u64,
    clean: CleanAllocation,
    supplementary: Vec<GoodSet>,
    provisional: GoodSet,
    in_play: Vec<bool>,
    clean_count: Vec<u64>,
    supp_count: Vec<u64>,
}

impl State {
    fn utilities(&self) -> Vec<u64> {
        self.clean_count
            .iter()
            .zip(&self.supp_count)
            .map(|(&xc, &x1)| self.c * xc + x1)
            .collect()
    }

    /// Lowest pool good not held provisionally.
    fn free_good(&self) -> Option<GoodId> {
        self.clean
            .pool
            .iter()
            .find(|&g| !self.provisional.contains(g))
    }

    fn provisional_holder(&self, g: GoodId) -> Option<AgentId> {
        self.supplementary
            .iter()
            .position(|s| s.contains(g))
            .map(AgentId)
    }

    fn check(&self, inst: &Instance) -> Result<(), SolveError> {
        let fail = |msg: String| Err(SolveError::Invariant(msg));
        if let Some(i) = inst
            .agent_ids()
            .find(|&i| !inst.valuation(i).is_clean(&self.clean.bundles[i.0]))
        {
            return fail(format!("clean bundle of {i} is not clean"));
        }
        if !self.provisional.is_subset(&self.clean.pool) {
            return fail("provisional goods outside the clean pool".into());
        }
        let mut union = inst.empty_set();
        for (i, s) in self.supplementary.iter().enumerate() {
            if !union.is_disjoint(s) {
                return fail(format!("supplementary bundle of agent{i} overlaps another"));
            }
            union.union_with(s);
        }
        if union != self.provisional {
            return fail("provisional set out of sync with supplementary bundles".into());
        }
        for i in inst.agent_ids() {
            let (xc, x1) = (&self.clean.bundles[i.0], &self.supplementary[i.0]);
            if xc.len() as u64 != self.clean_count[i.0] || x1.len() as u64 != self.supp_count[i.0] {
                return fail(format!("cached bundle sizes of {i} are stale"));
            }
            let mut bundle = xc.clone();
            bundle.union_with(x1);
            let actual = inst.valuation(i).value(&bundle);
            let expected = self.c * xc.len() as u64 + x1.len() as u64;
            if actual != expected {
                return fail(format!(
                    "{i} values its bundle at {actual}, expected c|Xc| + |X1| = {expected}"
                ));
            }
        }
        Ok(())
    }
}

/// Best agent among those with `in_play[i] == want_in_play`; ties go to the lower index.
fn best_agent(
    gain_fn: &dyn GainFunction,
    state: &State,
    utilities: &[u64],
    want_in_play: bool,
    added: u64,
) -> (Option<AgentId>, GainValue) {
    let mut best = (None, GainValue::Bottom);
    for (i, &play) in state.in_play.iter().enumerate() {
        if play != want_in_play {
            continue;
        }
        let g = gain_fn.gain(state.c, utilities, AgentId(i), added);
        if best.0.is_none() || g > best.1 {
            best = (Some(AgentId(i)), g);
        }
    }
    best
}

/// Runs the swap loop with an arbitrary gain function.
pub fn solve_with(
    inst: &Instance,
    gain_fn: &dyn GainFunction,
    opts: SolveOptions,
) -> Result<Solution, SolveError> {
    let (n, m, c) = (inst.num_agents(), inst.num_goods(), inst.c());
    let mut state = State {
        c,
        clean: CleanAllocation::empty(n, m),
        supplementary: vec![GoodSet::empty(m); n],
        provisional: GoodSet::empty(m),
        in_play: vec![true; n],
        clean_count: vec![0; n],
        supp_count: vec![0; n],
    };
    let mut trace = SolveTrace::default();

    while state.provisional.len() < state.clean.pool.len() {
        if trace.len() >= m + n {
            return Err(SolveError::Invariant(format!(
                "more than m + n = {} iterations",
                m + n
            )));
        }
        let utilities = state.utilities();
        let (in_play_best, gain_c) = best_agent(gain_fn, &state, &utilities, true, c);
        let (out_best, gain_1) = best_agent(gain_fn, &state, &utilities, false, 1);

        let (agent, action) = match (in_play_best, out_best) {
            (Some(i), _) if gain_c >= gain_1 => {
                if opts.check_invariants {
                    check_selection(&state, &utilities, i)?;
                }
                let action = match find_path(inst, &state.clean, i, &state.clean.pool) {
                    Some(path) => {
                        let last = *path.last().expect("paths are non-empty");
                        transfer(&mut state.clean, &path, i);
                        state.clean_count[i.0] += 1;
                        let replacement = if state.provisional.remove(last) {
                            let j = state
                                .provisional_holder(last)
                                .expect("provisional goods have a holder");
                            let fresh = state.free_good().ok_or_else(|| {
                                SolveError::Invariant("no free good to replace a stolen one".into())
                            })?;
                            state.supplementary[j.0].remove(last);
                            state.supplementary[j.0].insert(fresh);
                            state.provisional.insert(fresh);
                            Some(Replacement {
                                agent: j,
                                stolen: last,
                                replacement: fresh,
                            })
                        } else {
                            None
                        };
                        Action::Augmented { path, replacement }
                    }
                    None => {
                        state.in_play[i.0] = false;
                        Action::RemovedFromPlay
                    }
                };
                (i, action)
            }
            (_, Some(i)) => {
                let g = state
                    .free_good()
                    .expect("loop condition guarantees a free good");
                state.supplementary[i.0].insert(g);
                state.provisional.insert(g);
                state.supp_count[i.0] += 1;
                (i, Action::Provisional { good: g })
            }
            (Some(_), None) | (None, None) => {
                unreachable!("an in-play agent always beats an empty out-of-play set")
            }
        };
        trace.records.push(IterationRecord {
            iteration: trace.len(),
            gain_c,
            gain_1,
            agent,
            action,
        });
        if opts.check_invariants {
            state.check(inst)?;
        }
    }

    let decomposition = Decomposition {
        clean: state.clean,
        supplementary: state.supplementary,
    };
    let allocation = decomposition.union();
    let held: usize = allocation.bundles().iter().map(GoodSet::len).sum();
    if held != m {
        return Err(SolveError::Invariant(format!(
            "final allocation holds {held} of {m} goods"
        )));
    }
    if opts.check_invariants {
        decomposition
            .verify(inst, &allocation)
            .map_err(SolveError::Invariant)?;
    }
    Ok(Solution {
        allocation,
        decomposition,
        trace,
    })
}

/// The chosen in-play agent must have the least utility in play, and the
/// lowest index among agents tied with it.
fn check_selection(state: &State, utilities: &[u64], i: AgentId) -> Result<(), SolveError> {
    for (j, &play) in state.in_play.iter().enumerate() {
        if !play || j == i.0 {
            continue;
        }
        if utilities[j] < utilities[i.0] || (utilities[j] == utilities[i.0] && j < i.0) {
            return Err(SolveError::Invariant(format!(
                "picked {i} with utility {} over agent{j} with utility {}",
                utilities[i.0], utilities[j]
            )));
        }
    }
    Ok(())
}

/// Maximizes the sum of utilities: saturate the clean allocation with
/// transfer paths from any agent, then hand the leftovers to the first agent.
pub fn utilitarian_optimal(inst: &Instance) -> Allocation {
    let (n, m) = (inst.num_agents(), inst.num_goods());
    let mut clean = CleanAllocation::empty(n, m);
    loop {
        let mut progressed = false;
        for i in inst.agent_ids() {
            if let Some(path) = find_path(inst, &clean, i, &clean.pool) {
                transfer(&mut clean, &path, i);
                progressed = true;
            }
        }
        if !progressed {
            break;
        }
    }
    let mut bundles = clean.bundles;
    bundles[0].union_with(&clean.pool);
    Allocation::from_bundles(m, bundles).expect("clean bundles are disjoint")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::allocation::{sorted_utility_vector, utility_vector};
    use crate::valuation::Matroid;

    /// Six goods; agent 1 values every good at 1, agent 2 at 5.
    fn worked_example() -> Instance {
        Instance::unnamed(
            5,
            6,
            vec![
                Matroid::Uniform { cap: 0 },
                Matroid::Marked {
                    marked: GoodSet::full(6),
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn gain_values_from_worked_example() {
        let a2 = AgentId(1);
        assert_eq!(
            gain(Criterion::Mnw, 5, &[0, 5], a2, 5).unwrap(),
            GainValue::ratio(2, 1)
        );
        assert_eq!(
            gain(Criterion::Leximin, 5, &[0, 0], AgentId(0), 5).unwrap(),
            GainValue::integer(5)
        );
        assert_eq!(
            gain(Criterion::Leximin, 5, &[0, 5], a2, 5).unwrap(),
            GainValue::integer(-25)
        );
        let high = gain(Criterion::Mnw, 3, &[0], AgentId(0), 3).unwrap();
        let low = gain(Criterion::Mnw, 3, &[0], AgentId(0), 1).unwrap();
        assert!(high > low);
        assert!(low > GainValue::ratio(1000, 1));
    }

    #[test]
    fn p_mean_rejects_degenerate_exponents() {
        for p in [0.0, 1.0, 2.0, f64::NAN, f64::NEG_INFINITY] {
            assert!(Criterion::p_mean(p).is_err(), "p = {p}");
        }
        assert!(gain(Criterion::PMean { p: 1.0 }, 2, &[1], AgentId(0), 1).is_err());
        assert!(solve(&worked_example(), Criterion::PMean { p: 0.0 }).is_err());
    }

    #[test]
    fn criterion_parsing() {
        assert_eq!("mnw".parse::<Criterion>().unwrap(), Criterion::Mnw);
        assert_eq!("Leximin".parse::<Criterion>().unwrap(), Criterion::Leximin);
        assert_eq!(
            "pmean:-2".parse::<Criterion>().unwrap(),
            Criterion::PMean { p: -2.0 }
        );
        assert!("pmean:1".parse::<Criterion>().is_err());
        assert!("utilitarian".parse::<Criterion>().is_err());
    }

    #[test]
    fn p_mean_gain_matches_direct_formula() {
        for p in [0.5, -1.0, -2.0] {
            for u in 1..30u64 {
                for d in [1u64, 3] {
                    let direct = (u as f64 + d as f64).powf(p) - (u as f64).powf(p);
                    let expected = if p < 0.0 { -direct } else { direct };
                    let GainValue::Ordinary {
                        magnitude: Magnitude::Real { value },
                    } = Criterion::PMean { p }.gain(3, &[u], AgentId(0), d)
                    else {
                        panic!("expected a real gain");
                    };
                    assert!((value - expected).abs() <= 1e-12 * expected.abs());
                }
            }
        }
    }

    #[test]
    fn leximin_worked_example() {
        let inst = worked_example();
        let sol = solve(&inst, Criterion::Leximin).unwrap();
        assert_eq!(sorted_utility_vector(&inst, &sol.allocation), vec![5, 5]);
        assert_eq!(sol.allocation.bundle(AgentId(1)).to_vec(), vec![GoodId(0)]);
        assert_eq!(sol.allocation.bundle(AgentId(0)).len(), 5);
        assert_eq!(sol.trace.records[0].action, Action::RemovedFromPlay);
        assert_eq!(sol.trace.records[0].agent, AgentId(0));
    }

    #[test]
    fn mnw_worked_example() {
        let inst = worked_example();
        let sol = solve(&inst, Criterion::Mnw).unwrap();
        assert_eq!(utility_vector(&inst, &sol.allocation), vec![3, 15]);
        assert_eq!(sol.allocation.bundle(AgentId(0)).len(), 3);
        assert_eq!(sol.allocation.bundle(AgentId(1)).len(), 3);
        // second round: 5M against M
        assert_eq!(
            sol.trace.records[1].gain_c,
            GainValue::ZeroEscape { added: 5 }
        );
        assert_eq!(
            sol.trace.records[1].gain_1,
            GainValue::ZeroEscape { added: 1 }
        );
        assert!(sol.trace.len() <= 6 + 2);
    }

    #[test]
    fn single_agent_takes_everything() {
        let inst = Instance::unnamed(3, 5, vec![Matroid::Uniform { cap: 2 }]).unwrap();
        for crit in [
            Criterion::Mnw,
            Criterion::Leximin,
            Criterion::PMean { p: -1.0 },
        ] {
            let sol = solve(&inst, crit).unwrap();
            assert_eq!(sol.allocation.bundle(AgentId(0)).len(), 5);
            assert_eq!(utility_vector(&inst, &sol.allocation), vec![5 + 2 * 2]);
        }
    }

    #[test]
    fn no_goods_is_a_no_op() {
        let inst = Instance::unnamed(2, 0, vec![Matroid::Uniform { cap: 2 }; 2]).unwrap();
        let sol = solve(&inst, Criterion::Mnw).unwrap();
        assert!(sol.trace.is_empty());
        assert_eq!(utility_vector(&inst, &sol.allocation), vec![0, 0]);
    }

    #[test]
    fn trace_serializes_to_json_lines() {
        let sol = solve(&worked_example(), Criterion::Mnw).unwrap();
        let text = sol.trace.to_json_lines();
        assert_eq!(text.lines().count(), sol.trace.len());
        let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(first["action"]["kind"], "removed_from_play");
        assert_eq!(first["gain_c"]["tier"], "zero_escape");
    }

    #[test]
    fn utilitarian_marked_everything() {
        let m = 5;
        let inst = Instance::unnamed(
            3,
            m,
            vec![
                Matroid::Marked {
                    marked: GoodSet::full(m)
                };
                2
            ],
        )
        .unwrap();
        let x = utilitarian_optimal(&inst);
        assert_eq!(utility_vector(&inst, &x).iter().sum::<u64>(), 3 * m as u64);
        assert!(x.is_complete());
    }

    #[test]
    fn utilitarian_worked_example_and_zero_rank_agent() {
        let inst = worked_example();
        let x = utilitarian_optimal(&inst);
        assert_eq!(utility_vector(&inst, &x).iter().sum::<u64>(), 30);
        let clean = crate::allocation::decompose(&inst, &x);
        assert!(clean.clean.bundles[0].is_empty());
    }
}
