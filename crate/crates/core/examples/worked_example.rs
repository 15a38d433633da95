//! Two agents, six goods: one values every good at 1, the other at 5.
//! Leximin and max Nash welfare disagree sharply here.

use fairswap::allocation::utility_vector;
use fairswap::io::parse_instance;
use fairswap::solver::{solve, Action, Criterion};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let inst = parse_instance(include_str!("data/worked_example.json"))?;

    for criterion in [Criterion::Leximin, Criterion::Mnw] {
        let sol = solve(&inst, criterion)?;
        println!(
            "{criterion}: utilities {:?}",
            utility_vector(&inst, &sol.allocation)
        );
        for (agent, bundle) in inst.agents().iter().zip(sol.allocation.bundles()) {
            let names: Vec<&str> = bundle.iter().map(|g| inst.good_name(g)).collect();
            println!("  {:<8} {names:?}", agent.name);
        }
        for rec in &sol.trace.records {
            let what = match &rec.action {
                Action::Augmented { path, .. } => {
                    format!(
                        "takes {} (path length {})",
                        inst.good_name(path[0]),
                        path.len()
                    )
                }
                Action::RemovedFromPlay => "leaves play".to_string(),
                Action::Provisional { good } => {
                    format!("takes {} at value 1", inst.good_name(*good))
                }
            };
            println!(
                "  step {}: {} {what}  [gain_c {}, gain_1 {}]",
                rec.iteration,
                inst.agents()[rec.agent.0].name,
                rec.gain_c,
                rec.gain_1
            );
        }
    }
    Ok(())
}
