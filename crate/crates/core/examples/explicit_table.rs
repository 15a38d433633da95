//! Valuations given as an explicit rank table are checked against the
//! matroid axioms before use.

use std::collections::HashMap;

use fairswap::io::parse_instance;
use fairswap::solver::{solve, Criterion};
use fairswap::valuation::validate_rank_table;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let inst = parse_instance(include_str!("data/explicit.json"))?;
    let sol = solve(&inst, Criterion::Mnw)?;
    for (agent, bundle) in inst.agents().iter().zip(sol.allocation.bundles()) {
        println!("{}: {:?}", agent.name, bundle.to_vec());
    }

    // rank jumps by two on a single good: not a matroid
    let broken: HashMap<u32, usize> = [(0b00, 0), (0b01, 0), (0b10, 1), (0b11, 2)].into();
    let report = validate_rank_table(2, &broken)?;
    for v in &report.violations {
        println!("violation: {v}");
    }
    Ok(())
}
