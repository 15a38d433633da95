//! Exchange graph of a clean allocation and a transfer path that makes
//! one agent give up a good for an equally useful one.

use fairswap::allocation::CleanAllocation;
use fairswap::exchange::{augment, f_set, find_path, ExchangeGraph};
use fairswap::goods::{AgentId, GoodId, GoodSet};
use fairswap::valuation::{Instance, Matroid};

fn main() {
    let m = 3;
    let set = |ids: &[usize]| GoodSet::from_ids(m, ids.iter().map(|&k| GoodId(k)));
    // agent 0 can only use good 0; agent 1 can use any one of goods 0 and 1
    let inst = Instance::unnamed(
        2,
        m,
        vec![
            Matroid::Partition {
                parts: vec![set(&[0])],
                caps: vec![1],
            },
            Matroid::Partition {
                parts: vec![set(&[0, 1])],
                caps: vec![1],
            },
        ],
    )
    .expect("valid instance");

    let mut clean = CleanAllocation::empty(2, m);
    clean.pool.remove(GoodId(0));
    clean.bundles[1].insert(GoodId(0));

    let graph = ExchangeGraph::build(&inst, &clean).expect("clean allocation");
    println!("{} edges", graph.edge_count());
    print!("{}", graph.to_dot(&inst));

    let receiver = AgentId(0);
    println!("F = {:?}", f_set(&inst, &clean, receiver).to_vec());
    let path = find_path(&inst, &clean, receiver, &clean.pool).expect("a path exists");
    println!("path {path:?}");
    let after = augment(&inst, &clean, &path, receiver).expect("valid augmentation");
    for i in inst.agent_ids() {
        println!(
            "{i}: {:?} -> {:?}",
            clean.bundles[i.0].to_vec(),
            after.bundles[i.0].to_vec()
        );
    }
}
