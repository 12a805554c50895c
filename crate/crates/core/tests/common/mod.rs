//! Shared fixtures for the integration suites: the tree-poset suite, seeded
//! corpus families, and independent oracles kept deliberately separate from
//! the implementation paths they check.

use num_bigint::BigInt;
use num_rational::BigRational;
use treesat::chains::{hit_probability, QMarkedView, Side};
use treesat::lattice::{middle_levels, Family, SubsetMask};
use treesat::poset::Poset;

pub fn rat(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// The tree posets exercised throughout: chains up to 3, both three-element
/// forks, the zigzag, and the four-element spider.
pub fn suite() -> Vec<(&'static str, Poset)> {
    vec![
        ("chain2", Poset::chain(2)),
        ("chain3", Poset::chain(3)),
        ("vee", Poset::vee()),
        ("wedge", Poset::wedge()),
        ("zigzag3", Poset::zigzag3()),
        ("spider4", Poset::spider4()),
    ]
}

/// Corpus family for the cleaning and builder audits: the q middle levels
/// plus a seeded sprinkle, so the strong family is nonempty and irregular.
pub fn corpus_family(n: usize, q: usize, seed: u64) -> Family {
    let levels = Family::levels(n, middle_levels(n, q).unwrap());
    let extras = treesat::experiments::sample_plattice(n, &rat(1, 4), seed).unwrap();
    levels.union(&extras).unwrap()
}

/// Independent exhaustive witness oracle (lower side): iterates every subset
/// of the tail pool, keeps those hitting all q-chains at `(f, i)` with
/// measure at most `delta`, and returns the minimum under the canonical
/// `(measure, cardinality, lexicographic)` order. Pools above 18 are the
/// caller's responsibility to skip.
pub fn exhaustive_lower_witness(
    view: &QMarkedView<'_>,
    f: SubsetMask,
    i: usize,
    delta: &BigRational,
) -> Option<(BigRational, Vec<SubsetMask>)> {
    let tails = view.lower_tail_sets(f, i);
    if tails.is_empty() || view.q() == i {
        return None;
    }
    let allowed = (view.q() - i - 1) as u32;
    let mut pool: Vec<SubsetMask> = tails.iter().flat_map(|(_, t)| t.iter().copied()).collect();
    pool.sort_unstable();
    pool.dedup();
    assert!(pool.len() <= 18, "oracle is for pools of at most 18");
    let tail_masks: Vec<u32> = tails
        .iter()
        .map(|(_, tail)| {
            tail.iter()
                .map(|m| 1u32 << pool.binary_search(m).unwrap())
                .fold(0, |a, b| a | b)
        })
        .collect();
    let mut best: Option<(BigRational, Vec<SubsetMask>)> = None;
    for bits in 0u32..1 << pool.len() {
        if !tail_masks
            .iter()
            .all(|&tm| (tm & !bits).count_ones() <= allowed)
        {
            continue;
        }
        let members: Vec<SubsetMask> = (0..pool.len())
            .filter(|j| bits & (1 << j) != 0)
            .map(|j| pool[j])
            .collect();
        let fam = Family::new(view.n(), members.clone()).unwrap();
        let measure = hit_probability(f, &fam, Side::Lower).unwrap();
        if measure > *delta {
            continue;
        }
        let better = match &best {
            None => true,
            Some((bm, bw)) => (&measure, members.len(), &members) < (bm, bw.len(), bw),
        };
        if better {
            best = Some((measure, members));
        }
    }
    best
}

/// Size of the lower tail pool at `(f, i)`; the oracle scope gate.
pub fn lower_pool_size(view: &QMarkedView<'_>, f: SubsetMask, i: usize) -> usize {
    let mut pool: Vec<SubsetMask> = view
        .lower_tail_sets(f, i)
        .into_iter()
        .flat_map(|(_, t)| t)
        .collect();
    pool.sort_unstable();
    pool.dedup();
    pool.len()
}
