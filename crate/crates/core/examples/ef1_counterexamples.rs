//! Neither max Nash welfare nor leximin allocations need to be EF1 once
//! valuations are submodular.

use fairswap::audit::{check_ef1, check_efx};
use fairswap::goods::GoodSet;
use fairswap::solver::{solve, Criterion};
use fairswap::valuation::{Instance, Matroid};

fn report(title: &str, inst: &Instance, criterion: Criterion) {
    let sol = solve(inst, criterion).expect("solvable");
    let sizes: Vec<usize> = sol.allocation.bundles().iter().map(GoodSet::len).collect();
    let ef1 = check_ef1(inst, &sol.allocation).expect("complete allocation");
    let efx = check_efx(inst, &sol.allocation).expect("complete allocation");
    println!(
        "{title} ({criterion}): bundle sizes {sizes:?}, EF1 {}, EFX {}",
        ef1.holds, efx.holds
    );
    if let Some(w) = ef1.witness {
        println!(
            "  {} envies {} even after dropping any good",
            w.envious, w.envied
        );
    }
}

fn main() {
    for c in [2u64, 3, 5] {
        let everything = |m| Matroid::Marked {
            marked: GoodSet::full(m),
        };
        let capped = Instance::unnamed(c, 6, vec![Matroid::Uniform { cap: 2 }, everything(6)])
            .expect("valid instance");
        report(&format!("c={c}, capped agent"), &capped, Criterion::Mnw);

        let m = 2 * c as usize + 2;
        let additive = Instance::unnamed(c, m, vec![Matroid::Uniform { cap: 0 }, everything(m)])
            .expect("valid instance");
        report(&format!("c={c}, additive"), &additive, Criterion::Leximin);
    }
}
