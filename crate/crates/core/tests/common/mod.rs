#![allow(dead_code)]

use fairswap::allocation::Allocation;
use fairswap::goods::{AgentId, GoodId, GoodSet};
use fairswap::valuation::{Instance, Matroid};

pub fn set(m: usize, ids: &[usize]) -> GoodSet {
    GoodSet::from_ids(m, ids.iter().map(|&k| GoodId(k)))
}

pub fn range(m: usize, lo: usize, hi: usize) -> GoodSet {
    GoodSet::from_ids(m, (lo..hi).map(GoodId))
}

/// Two agents over `m` goods: the first values every good at 1, the second at `c`.
pub fn low_high(c: u64, m: usize) -> Instance {
    Instance::unnamed(
        c,
        m,
        vec![
            Matroid::Uniform { cap: 0 },
            Matroid::Marked {
                marked: GoodSet::full(m),
            },
        ],
    )
    .unwrap()
}

/// Six goods; the first agent values only two goods at `c`, the second every good.
pub fn mnw_not_ef1(c: u64) -> Instance {
    Instance::unnamed(
        c,
        6,
        vec![
            Matroid::Uniform { cap: 2 },
            Matroid::Marked {
                marked: GoodSet::full(6),
            },
        ],
    )
    .unwrap()
}

/// `n` agents, `n + c n (n - 1)` goods; the last agent values every good at `c`,
/// the rest at 1.
pub fn leximin_mms_tight(n: usize, c: u64) -> Instance {
    let m = n + c as usize * n * (n - 1);
    let mut matroids = vec![Matroid::Uniform { cap: 0 }; n - 1];
    matroids.push(Matroid::Marked {
        marked: GoodSet::full(m),
    });
    Instance::unnamed(c, m, matroids).unwrap()
}

/// Odd `n`, `n + c (n - 1) / 2` goods split into blocks of `n`, `n - 1` and the rest.
/// Agent 1 values one good from each of the first two blocks at `c`; the next
/// `(n - 1) / 2` agents value the second block; the remaining agents value
/// the first and third blocks.
pub fn mnw_mms_tight(n: usize, c: u64) -> Instance {
    assert!(n % 2 == 1 && (c as usize * (n - 1)).is_multiple_of(2));
    let m = n + c as usize * (n - 1) / 2;
    let g1 = range(m, 0, n);
    let g2 = range(m, n, 2 * n - 1);
    let g3 = range(m, 2 * n - 1, m);
    let mut g13 = g1.clone();
    g13.union_with(&g3);
    let mut matroids = vec![Matroid::Partition {
        parts: vec![g1, g2.clone()],
        caps: vec![1, 1],
    }];
    for j in 2..=n {
        matroids.push(Matroid::Marked {
            marked: if j <= n.div_ceil(2) {
                g2.clone()
            } else {
                g13.clone()
            },
        });
    }
    Instance::unnamed(c, m, matroids).unwrap()
}

/// Every assignment of goods to the `n` agents (no pool), by index.
pub fn for_each_partition(n: usize, m: usize, mut f: impl FnMut(&[GoodSet])) {
    let total = (n as u64).pow(m as u32);
    let mut bundles = vec![GoodSet::empty(m); n];
    for mut k in 0..total {
        bundles.iter_mut().for_each(|b| *b = GoodSet::empty(m));
        for g in 0..m {
            bundles[(k % n as u64) as usize].insert(GoodId(g));
            k /= n as u64;
        }
        f(&bundles);
    }
}

/// Maximin share by plain enumeration of all `n^m` labelled partitions.
pub fn brute_mms(inst: &Instance, i: AgentId) -> u64 {
    let val = inst.valuation(i);
    let mut best = 0;
    for_each_partition(inst.num_agents(), inst.num_goods(), |bundles| {
        let worst = bundles.iter().map(|b| val.value(b)).min().unwrap();
        best = best.max(worst);
    });
    best
}

/// EF1 straight from the definition; empty bundles count as envy-free.
pub fn brute_ef1(inst: &Instance, alloc: &Allocation) -> bool {
    inst.agent_ids().all(|i| {
        let val = inst.valuation(i);
        let own = val.value(alloc.bundle(i));
        inst.agent_ids().filter(|&j| j != i).all(|j| {
            let other = alloc.bundle(j);
            other.is_empty() || other.iter().any(|g| val.value(&other.without(g)) <= own)
        })
    })
}

/// Largest matching between `goods` and `slots` by trying every injective
/// slot choice, one good at a time.
pub fn brute_matching(adjacency: &[Vec<usize>], goods: &[usize], slots: usize) -> usize {
    fn go(adj: &[Vec<usize>], goods: &[usize], used: &mut Vec<bool>) -> usize {
        let Some((&g, rest)) = goods.split_first() else {
            return 0;
        };
        let mut best = go(adj, rest, used);
        for &s in &adj[g] {
            if !used[s] {
                used[s] = true;
                best = best.max(1 + go(adj, rest, used));
                used[s] = false;
            }
        }
        best
    }
    go(adjacency, goods, &mut vec![false; slots])
}

/// Value as a sum of marginals in the given good order: each marginal is
/// `c` when the good raises the rank, else 1.
pub fn value_by_marginals(inst: &Instance, i: AgentId, order: &[GoodId]) -> u64 {
    let val = inst.valuation(i);
    let mut acc = GoodSet::empty(inst.num_goods());
    let mut total = 0;
    for &g in order {
        let before = val.rank(&acc);
        acc.insert(g);
        total += if val.rank(&acc) > before { inst.c() } else { 1 };
    }
    total
}
