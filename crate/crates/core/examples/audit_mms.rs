//! Full audit of solver outputs on a mixed instance, including maximin
//! shares and the guarantees for max Nash welfare and leximin.

use fairswap::audit::{audit, AuditOptions};
use fairswap::io::parse_instance;
use fairswap::solver::{solve, Criterion};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let inst = parse_instance(include_str!("data/courses.json"))?;
    if let Some(scale) = inst.scale() {
        println!(
            "values {} and {} rescaled to 1 and {}",
            scale.a,
            scale.b,
            inst.c()
        );
    }
    for criterion in [Criterion::Mnw, Criterion::Leximin] {
        let sol = solve(&inst, criterion)?;
        let opts = AuditOptions {
            p_values: vec![0.5, -1.0],
            mms: true,
            criterion_hint: Some(criterion),
        };
        let report = audit(&inst, &sol.allocation, &opts)?;
        println!("== {criterion}");
        print!("{}", report.to_table(&inst));
    }
    Ok(())
}
