//! Splitting an allocation into its clean part (goods worth c) and the
//! supplementary goods worth 1.

use fairswap::allocation::{decompose, Allocation};
use fairswap::goods::{GoodId, GoodSet};
use fairswap::valuation::{Instance, Matroid};

fn main() {
    let m = 4;
    // the first agent values everything at c, the second only one good at a time
    let inst = Instance::unnamed(
        3,
        m,
        vec![
            Matroid::Marked {
                marked: GoodSet::full(m),
            },
            Matroid::Uniform { cap: 1 },
        ],
    )
    .expect("valid instance");
    let alloc = Allocation::from_bundles(
        m,
        vec![
            GoodSet::from_ids(m, [GoodId(0), GoodId(1)]),
            GoodSet::from_ids(m, [GoodId(2), GoodId(3)]),
        ],
    )
    .expect("disjoint bundles");

    let d = decompose(&inst, &alloc);
    d.verify(&inst, &alloc).expect("decomposition properties");
    let names = |s: &GoodSet| s.iter().map(|g| inst.good_name(g)).collect::<Vec<_>>();
    for i in inst.agent_ids() {
        println!(
            "{}: bundle {:?} worth {}, clean {:?}, supplementary {:?}",
            inst.agents()[i.0].name,
            names(alloc.bundle(i)),
            inst.valuation(i).value(alloc.bundle(i)),
            names(&d.clean.bundles[i.0]),
            names(&d.supplementary[i.0]),
        );
    }
    println!("clean pool: {:?}", names(&d.clean.pool));
}
