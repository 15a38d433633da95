//! Compares the solver with exhaustive search on random instances, then
//! shows the same harness rejecting a deliberately wrong gain function.

use fairswap::cli::{oracle_check, OracleCheckConfig};
use fairswap::goods::AgentId;
use fairswap::solver::{Criterion, GainValue};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = OracleCheckConfig {
        count: 100,
        seed: 2024,
        ..Default::default()
    };
    let summary = oracle_check(&cfg, None)?;
    print!("{}", summary.to_text());

    // serve the richest agent first: leximin optima are missed
    let greedy = |c: u64, u: &[u64], i: AgentId, d: u64| {
        GainValue::integer((c + 1) as i64 * u[i.0] as i64 + d as i64)
    };
    let wrong = OracleCheckConfig {
        criteria: vec![Criterion::Leximin],
        ..cfg
    };
    let summary = oracle_check(&wrong, Some(&greedy))?;
    println!(
        "reversed gain: {} of {} checks failed",
        summary.mismatches.len(),
        summary.checks
    );
    Ok(())
}
