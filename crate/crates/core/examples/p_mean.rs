//! p-mean welfare interpolates between utilitarian (p -> 1) and leximin
//! (p -> -infinity) behaviour.

use fairswap::allocation::utility_vector;
use fairswap::audit::p_mean_of;
use fairswap::io::parse_instance;
use fairswap::solver::{solve, utilitarian_optimal, Criterion};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let inst = parse_instance(include_str!("data/courses.json"))?;
    let usw = utility_vector(&inst, &utilitarian_optimal(&inst));
    println!("utilitarian: {usw:?} (sum {})", usw.iter().sum::<u64>());
    for p in [0.9, 0.5, -0.5, -1.0, -4.0] {
        let sol = solve(&inst, Criterion::p_mean(p)?)?;
        let u = utility_vector(&inst, &sol.allocation);
        println!("p = {p:>4}: {u:?}, p-mean {:.3}", p_mean_of(&u, p)?);
    }
    let lex = solve(&inst, Criterion::Leximin)?;
    println!("leximin:  {:?}", utility_vector(&inst, &lex.allocation));
    Ok(())
}
