mod common;

use proptest::prelude::*;

use fairswap::allocation::{decompose, utility_vector, CleanAllocation, Holder};
use fairswap::exchange::{f_set, find_path, shortest_path, ExchangeGraph};
use fairswap::generate::{random_instance, rng_for, Family};
use fairswap::goods::{AgentId, GoodId, GoodSet};
use fairswap::io::{instance_to_json, parse_instance, AllocationFile};
use fairswap::oracle::brute_force_optimum;
use fairswap::solver::{solve, Criterion};
use fairswap::valuation::Instance;

fn instance(family: usize, n: usize, m: usize, c: u64, seed: u64) -> Instance {
    random_instance(Family::ALL[family], n, m, c, &mut rng_for(seed)).unwrap()
}

fn arb_instance(max_n: usize, max_m: usize) -> impl Strategy<Value = Instance> {
    (
        0..4usize,
        1..=max_n,
        1..=max_m,
        prop::sample::select(vec![2u64, 3, 5]),
        any::<u64>(),
    )
        .prop_map(|(f, n, m, c, seed)| instance(f, n, m, c, seed))
}

/// Every clean allocation of the instance, pool included.
fn clean_allocations(inst: &Instance) -> Vec<CleanAllocation> {
    let (n, m) = (inst.num_agents(), inst.num_goods());
    let base = n as u64 + 1;
    let mut out = Vec::new();
    for mut k in 0..base.pow(m as u32) {
        let mut clean = CleanAllocation::empty(n, m);
        for g in 0..m {
            let d = (k % base) as usize;
            k /= base;
            if d > 0 {
                clean.pool.remove(GoodId(g));
                clean.bundles[d - 1].insert(GoodId(g));
            }
        }
        if clean.is_clean(inst) {
            out.push(clean);
        }
    }
    out
}

fn size(clean: &CleanAllocation, h: Holder) -> usize {
    clean.bundle_of(h).len()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn path_exists_when_another_clean_allocation_gives_more(
        inst in arb_instance(3, 5),
        picks in (any::<prop::sample::Index>(), any::<prop::sample::Index>()),
    ) {
        let all = clean_allocations(&inst);
        let x = &all[picks.0.index(all.len())];
        let y = &all[picks.1.index(all.len())];
        let mut holders = vec![Holder::Pool];
        holders.extend(inst.agent_ids().map(Holder::Agent));
        for i in inst.agent_ids() {
            if size(x, Holder::Agent(i)) >= size(y, Holder::Agent(i)) {
                continue;
            }
            let mut targets = inst.empty_set();
            for &h in &holders {
                if size(x, h) > size(y, h) {
                    targets.union_with(x.bundle_of(h));
                }
            }
            prop_assert!(find_path(&inst, x, i, &targets).is_some());
        }
    }

    #[test]
    fn clean_sets_exchange(inst in arb_instance(1, 7), a in any::<u64>(), b in any::<u64>()) {
        let m = inst.num_goods();
        let val = inst.valuation(AgentId(0));
        let full = (1u64 << m) - 1;
        let (s, t) = (GoodSet::from_mask(m, a & full), GoodSet::from_mask(m, b & full));
        if val.is_clean(&s) && val.is_clean(&t) && s.len() < t.len() {
            prop_assert!(t.iter().any(|g| !s.contains(g) && val.marginal(&s, g).unwrap() == inst.c()));
        }
    }

    #[test]
    fn lazy_search_matches_materialized_graph(inst in arb_instance(3, 7), seed in any::<u64>()) {
        use rand::Rng;
        let mut rng = rng_for(seed);
        let mut clean = CleanAllocation::empty(inst.num_agents(), inst.num_goods());
        for _ in 0..inst.num_goods() {
            let i = AgentId(rng.gen_range(0..inst.num_agents()));
            let pool = clean.pool.clone();
            if let Some(path) = find_path(&inst, &clean, i, &pool) {
                clean = fairswap::exchange::augment(&inst, &clean, &path, i).unwrap();
            }
        }
        let graph = ExchangeGraph::build(&inst, &clean).unwrap();
        for i in inst.agent_ids() {
            let lazy = find_path(&inst, &clean, i, &clean.pool);
            let sources = f_set(&inst, &clean, i);
            let eager = if sources.is_empty() { None } else { shortest_path(&graph, &sources, &clean.pool) };
            prop_assert_eq!(lazy, eager);
        }
    }

    #[test]
    fn solver_matches_oracle_up_to_seven_goods(inst in arb_instance(3, 7)) {
        for crit in [Criterion::Mnw, Criterion::Leximin, Criterion::PMean { p: -1.0 }] {
            let sol = solve(&inst, crit).unwrap();
            let opt = brute_force_optimum(&inst, crit).unwrap();
            prop_assert!(opt.contains(&utility_vector(&inst, &sol.allocation)));
        }
    }

    #[test]
    fn decomposition_of_solver_output_reproduces_utilities(inst in arb_instance(4, 9)) {
        let sol = solve(&inst, Criterion::Leximin).unwrap();
        let again = decompose(&inst, &sol.allocation);
        prop_assert!(again.verify(&inst, &sol.allocation).is_ok());
        for i in inst.agent_ids() {
            prop_assert_eq!(again.clean.bundles[i.0].len(), sol.decomposition.clean.bundles[i.0].len());
        }
    }

    #[test]
    fn instance_files_round_trip(inst in arb_instance(4, 9)) {
        let back = parse_instance(&instance_to_json(&inst)).unwrap();
        prop_assert_eq!(&back, &inst);
        let sol = solve(&inst, Criterion::Mnw).unwrap();
        let text = AllocationFile::from_allocation(&inst, &sol.allocation).to_json();
        let alloc = AllocationFile::parse(&text).unwrap().to_allocation(&inst).unwrap();
        prop_assert_eq!(alloc, sol.allocation);
    }
}
