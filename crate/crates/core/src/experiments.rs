//! Random Turán experiments over the p-random lattice, exact solvers for the
//! largest induced-P-free subfamily, and exhaustive P-free counting at tiny
//! ground sets.
//!
//! All randomness flows through the counter-based generator in [`crate::rng`]
//! with one draw per mask in mask order, so every artifact is reproducible
//! bit for bit from `(seed, n, p)` on any platform and thread count.

use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{big_binomial, binomial, Family, SubsetMask};
use crate::poset::Poset;
use crate::rng;
use crate::supersat::copy_edges;

pub use crate::rng::PRNG_VERSION;

/// Hosts up to this size get the exact branch-and-bound solver; larger hosts
/// fall back to the flagged greedy bound.
pub const EXACT_SOLVER_CAP: usize = 64;

/// Each of the `2^n` masks survives independently with probability `p`,
/// decided by comparing the mask's draw against `floor(p * 2^64)`. Identical
/// `(n, p, seed)` give identical families.
pub fn sample_plattice(n: usize, p: &BigRational, seed: u64) -> Result<Family> {
    if p.is_negative() || p > &BigRational::one() {
        return Err(Error::InvalidInput(format!("p = {p} outside [0, 1]")));
    }
    let two64 = BigInt::from(1u128 << 64);
    let threshold = (p * BigRational::from(two64)).floor().to_integer();
    let threshold: u128 = threshold.to_u128().unwrap_or(u128::MAX);
    let mut members = Vec::new();
    for bits in 0..1u64 << n {
        if (rng::draw(seed, bits) as u128) < threshold {
            members.push(SubsetMask::new(bits as u32));
        }
    }
    Family::new(n, members)
}

/// A uniform random subfamily of exactly `size` members.
pub fn sample_fixed_size(n: usize, size: usize, seed: u64) -> Result<Family> {
    if size > 1 << n {
        return Err(Error::InvalidInput(format!(
            "cannot sample {size} members from B_{n}"
        )));
    }
    let mut masks: Vec<SubsetMask> = (0..1u64 << n).map(|b| SubsetMask::new(b as u32)).collect();
    let mut counter = 0u64;
    rng::shuffle(&mut masks, seed, &mut counter);
    Family::new(n, masks.into_iter().take(size).collect())
}

#[derive(Clone, Debug)]
pub struct LaStarOutcome {
    pub value: usize,
    pub witness: Family,
    /// False when the greedy fallback produced only a lower bound.
    pub exact: bool,
}

/// Greedy peeling: while some copy survives, delete the member lying in the
/// most surviving copies. Returns the surviving vertex set as a bitmask.
fn greedy_peel(edges: &[u64], vertex_count: usize) -> u64 {
    let full: u64 = if vertex_count == 64 {
        u64::MAX
    } else {
        (1u64 << vertex_count) - 1
    };
    let mut current = full;
    loop {
        let mut degree = vec![0u32; vertex_count];
        let mut any = false;
        for &e in edges {
            if e & current == e {
                any = true;
                let mut rest = e;
                while rest != 0 {
                    let v = rest.trailing_zeros() as usize;
                    degree[v] += 1;
                    rest &= rest - 1;
                }
            }
        }
        if !any {
            return current;
        }
        let worst = (0..vertex_count)
            .filter(|&v| current & (1 << v) != 0)
            .max_by_key(|&v| degree[v])
            .expect("some vertex survives");
        current &= !(1 << worst);
    }
}

/// A chain partition of the host masks by greedy longest-chain peeling. Each
/// chain is a bitmask over vertex indices.
fn chain_partition(masks: &[SubsetMask]) -> Vec<u64> {
    let v = masks.len();
    let mut remaining: Vec<usize> = (0..v).collect();
    let mut chains = Vec::new();
    while !remaining.is_empty() {
        let mut order = remaining.clone();
        order.sort_by_key(|&i| masks[i].card());
        let mut best_len = vec![1usize; order.len()];
        let mut pred = vec![usize::MAX; order.len()];
        for a in 0..order.len() {
            for b in 0..a {
                if masks[order[b]].is_proper_subset_of(masks[order[a]])
                    && best_len[b] + 1 > best_len[a]
                {
                    best_len[a] = best_len[b] + 1;
                    pred[a] = b;
                }
            }
        }
        let (mut at, _) = best_len
            .iter()
            .enumerate()
            .max_by_key(|&(_, l)| *l)
            .expect("nonempty");
        let mut chain_mask = 0u64;
        loop {
            chain_mask |= 1u64 << order[at];
            if pred[at] == usize::MAX {
                break;
            }
            at = pred[at];
        }
        chains.push(chain_mask);
        remaining.retain(|&i| chain_mask & (1 << i) == 0);
    }
    chains
}

struct MisSolver<'a> {
    edges: &'a [u64],
    vertex_count: usize,
    /// When the forbidden poset is a k-chain, each partition chain
    /// contributes at most k - 1 members to any free subfamily.
    chain_bound: Option<(Vec<u64>, usize)>,
    best_mask: u64,
    best: usize,
}

impl MisSolver<'_> {
    fn full(&self) -> u64 {
        if self.vertex_count == 64 {
            u64::MAX
        } else {
            (1u64 << self.vertex_count) - 1
        }
    }

    fn upper_bound(&self, included: u64, excluded: u64) -> usize {
        let avail = !excluded & self.full();
        let mut bound = avail.count_ones() as usize;
        if let Some((chains, k)) = &self.chain_bound {
            let cap = k - 1;
            bound = bound.min(
                chains
                    .iter()
                    .map(|&c| ((c & avail).count_ones() as usize).min(cap))
                    .sum(),
            );
        }
        // disjoint alive edges each force one exclusion
        let mut used = included;
        let mut pack = 0usize;
        for &e in self.edges {
            if e & excluded == 0 && e & used == 0 {
                used |= e;
                pack += 1;
            }
        }
        let packing_bound = (avail.count_ones() as usize).saturating_sub(pack);
        bound.min(packing_bound)
    }

    fn solve(&mut self, included: u64, mut excluded: u64) {
        // unit propagation: an alive edge with one undecided member forces it out
        loop {
            let mut changed = false;
            for &e in self.edges {
                if e & excluded != 0 {
                    continue;
                }
                let undecided = e & !included;
                if undecided == 0 {
                    return; // an edge is fully included: infeasible
                }
                if undecided.count_ones() == 1 {
                    excluded |= undecided;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        if self.upper_bound(included, excluded) <= self.best {
            return;
        }
        // the alive edge with the fewest undecided members
        let mut pick: Option<u64> = None;
        for &e in self.edges {
            if e & excluded != 0 {
                continue;
            }
            let und = e & !included;
            if pick.is_none_or(|b| und.count_ones() < (b & !included).count_ones()) {
                pick = Some(e);
            }
        }
        let Some(edge) = pick else {
            // no alive edge: everything undecided joins the set
            let solution = self.full() & !excluded;
            let size = solution.count_ones() as usize;
            if size > self.best {
                self.best = size;
                self.best_mask = solution;
            }
            return;
        };
        // at least one member of the edge leaves; branch with earlier members
        // forced in so branches stay disjoint
        let members: Vec<usize> = (0..self.vertex_count)
            .filter(|&v| edge & (1 << v) != 0 && included & (1 << v) == 0)
            .collect();
        let mut forced_in = included;
        for &v in &members {
            self.solve(forced_in, excluded | (1 << v));
            forced_in |= 1 << v;
            if self
                .edges
                .iter()
                .any(|&e| e & excluded == 0 && e & !forced_in == 0)
            {
                break; // forcing this member in completes an edge
            }
        }
    }
}

/// Exact maximum size of an induced-P-free subfamily of `host`, by
/// branch-and-bound over the copy hypergraph with greedy seeding, a chain
/// partition bound for chain posets, and disjoint-copy packing in general.
/// Returns one witness family.
pub fn la_star_exact(host: &Family, p: &Poset) -> Result<LaStarOutcome> {
    let members = host.members();
    let v = members.len();
    if v > EXACT_SOLVER_CAP {
        return Err(Error::CapExceeded {
            what: "la* exact solver (la_star_bound provides a flagged greedy bound)",
            size: v,
            cap: EXACT_SOLVER_CAP,
        });
    }
    let edge_sets = copy_edges(host, p)?;
    let index_of = |m: &SubsetMask| members.binary_search(m).expect("edge member in host");
    let edges: Vec<u64> = edge_sets
        .iter()
        .map(|e| e.iter().fold(0u64, |acc, m| acc | (1u64 << index_of(m))))
        .collect();
    let greedy = greedy_peel(&edges, v);
    let chain_bound = if p.size() >= 2 && p.is_isomorphic(&Poset::chain(p.size())) {
        Some((chain_partition(members), p.size()))
    } else {
        None
    };
    let mut solver = MisSolver {
        edges: &edges,
        vertex_count: v,
        chain_bound,
        best_mask: greedy,
        best: greedy.count_ones() as usize,
    };
    if v > 0 {
        solver.solve(0, 0);
    }
    let witness = Family::new(
        host.n(),
        (0..v)
            .filter(|&i| solver.best_mask & (1 << i) != 0)
            .map(|i| members[i])
            .collect(),
    )?;
    Ok(LaStarOutcome {
        value: solver.best,
        witness,
        exact: true,
    })
}

/// Greedy lower bound on the largest induced-P-free subfamily; always flagged
/// inexact. For hosts beyond the exact solver cap.
pub fn la_star_bound(host: &Family, p: &Poset) -> Result<LaStarOutcome> {
    let mut current = host.clone();
    loop {
        let edges = copy_edges(&current, p)?;
        if edges.is_empty() {
            return Ok(LaStarOutcome {
                value: current.len(),
                witness: current,
                exact: false,
            });
        }
        let mut worst: Option<(usize, SubsetMask)> = None;
        for f in current.iter() {
            let deg = edges.iter().filter(|e| e.contains(&f)).count();
            if worst.is_none_or(|(b, _)| deg > b) {
                worst = Some((deg, f));
            }
        }
        current = current.without(worst.expect("nonempty").1);
    }
}

/// One random Turán trial; reproducible from `(seed, n, p)` exactly.
#[derive(Clone, Debug)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub n: usize,
    pub p: BigRational,
    pub sample_size: usize,
    pub la_star: usize,
    pub exact: bool,
    pub millis: u128,
}

#[derive(Debug)]
pub struct RandomTuranReport {
    pub records: Vec<TrialRecord>,
    pub mean: BigRational,
    pub max: usize,
    /// `(k - 1) p binom(n, n/2)` for the poset's height k.
    pub reference: BigRational,
    pub prng: &'static str,
}

/// Runs seeded trials of: sample the p-random lattice, solve la* exactly.
/// Trials run concurrently on derived substreams; aggregation is
/// order-independent, so results do not depend on the thread count.
pub fn random_turan_trials(
    n: usize,
    p: &BigRational,
    poset: &Poset,
    trials: usize,
    seed: u64,
) -> Result<RandomTuranReport> {
    if trials == 0 {
        return Err(Error::InvalidInput("need at least one trial".into()));
    }
    let records: Vec<TrialRecord> = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<TrialRecord> {
            let trial_seed = rng::derive(seed, t as u64);
            let start = Instant::now();
            let sample = sample_plattice(n, p, trial_seed)?;
            let outcome = la_star_exact(&sample, poset)?;
            Ok(TrialRecord {
                trial: t,
                seed: trial_seed,
                n,
                p: p.clone(),
                sample_size: sample.len(),
                la_star: outcome.value,
                exact: outcome.exact,
                millis: start.elapsed().as_millis(),
            })
        })
        .collect::<Result<_>>()?;
    let sum: u64 = records.iter().map(|r| r.la_star as u64).sum();
    let mean = BigRational::new(BigInt::from(sum), BigInt::from(trials as u64));
    let max = records.iter().map(|r| r.la_star).max().unwrap_or(0);
    let k = poset.height();
    let reference = BigRational::from(BigInt::from(k as u64 - 1))
        * p.clone()
        * BigRational::from(BigInt::from(big_binomial(n, n / 2)));
    Ok(RandomTuranReport {
        records,
        mean,
        max,
        reference,
        prng: rng::PRNG_VERSION,
    })
}

fn p_free_edge_masks(n: usize, p: &Poset) -> Result<Vec<u64>> {
    let host = Family::complete(n);
    let edges = copy_edges(&host, p)?;
    Ok(edges
        .into_iter()
        .map(|e| e.iter().fold(0u64, |acc, m| acc | (1u64 << m.bits())))
        .collect())
}

/// Exact number of induced-P-free subfamilies of `B_n`: exhaustive over all
/// families for `n <= 4`, copy-aware backtracking for `n = 5`.
pub fn enumerate_p_free(n: usize, p: &Poset) -> Result<u64> {
    if n > 5 {
        return Err(Error::CapExceeded {
            what: "P-free family counting",
            size: n,
            cap: 5,
        });
    }
    let edges = p_free_edge_masks(n, p)?;
    if n <= 4 {
        let universe = 1u64 << (1 << n);
        let mut count = 0u64;
        for fam in 0..universe {
            if edges.iter().all(|&e| e & fam != e) {
                count += 1;
            }
        }
        return Ok(count);
    }
    // group edges by their largest member index; an edge can only complete
    // when that member is included
    let total_masks = 1usize << n;
    let mut by_max: Vec<Vec<u64>> = vec![Vec::new(); total_masks];
    for &e in &edges {
        let top = 63 - e.leading_zeros() as usize;
        by_max[top].push(e & !(1u64 << top));
    }
    fn rec(idx: usize, total_masks: usize, included: u64, by_max: &[Vec<u64>]) -> u64 {
        if idx == total_masks {
            return 1;
        }
        let mut count = rec(idx + 1, total_masks, included, by_max);
        if by_max[idx]
            .iter()
            .all(|&others| others & included != others)
        {
            count += rec(idx + 1, total_masks, included | (1u64 << idx), by_max);
        }
        count
    }
    Ok(rec(0, total_masks, 0, &by_max))
}

/// Number of strictly nested pairs in the family.
pub fn two_chain_count(fam: &Family) -> u64 {
    let members = fam.members();
    let mut count = 0u64;
    for (i, &a) in members.iter().enumerate() {
        for &b in &members[i + 1..] {
            if a.is_proper_subset_of(b) || b.is_proper_subset_of(a) {
                count += 1;
            }
        }
    }
    count
}

/// Levels of `B_n` ordered by proximity to `n/2 + 1/4`; the scaled distances
/// `|4l - 2n - 1|` are odd, so there are no ties.
fn centralized_level_order(n: usize) -> Vec<usize> {
    let mut levels: Vec<usize> = (0..=n).collect();
    levels.sort_by_key(|&l| (4 * l as i64 - 2 * n as i64 - 1).abs());
    levels
}

/// The centralized family of size `a`: levels filled in proximity order to
/// `n/2 + 1/4`, the partial level by smallest mask value.
pub fn centralized_family(n: usize, a: usize) -> Result<Family> {
    if a > 1 << n {
        return Err(Error::InvalidInput(format!("size {a} exceeds 2^{n}")));
    }
    let mut members = Vec::with_capacity(a);
    for level in centralized_level_order(n) {
        if members.len() == a {
            break;
        }
        for bits in 0..1u64 << n {
            let mask = SubsetMask::new(bits as u32);
            if mask.card() == level {
                members.push(mask);
                if members.len() == a {
                    break;
                }
            }
        }
    }
    Family::new(n, members)
}

/// Exhaustive minimum number of 2-chains over all families of each size in
/// `B_n`; index `a` holds the minimum at size `a`. Capped at `n <= 4`.
pub fn min_two_chain_counts(n: usize) -> Result<Vec<u64>> {
    if n > 4 {
        return Err(Error::CapExceeded {
            what: "exhaustive 2-chain minimum",
            size: n,
            cap: 4,
        });
    }
    let masks = 1usize << n;
    let mut pairs = Vec::new();
    for i in 0..masks {
        for j in i + 1..masks {
            let a = SubsetMask::new(i as u32);
            let b = SubsetMask::new(j as u32);
            if a.is_proper_subset_of(b) || b.is_proper_subset_of(a) {
                pairs.push((1u64 << i) | (1u64 << j));
            }
        }
    }
    let mut minima = vec![u64::MAX; masks + 1];
    for fam in 0..1u64 << masks {
        let size = fam.count_ones() as usize;
        let count = pairs.iter().filter(|&&pm| pm & fam == pm).count() as u64;
        if count < minima[size] {
            minima[size] = count;
        }
    }
    Ok(minima)
}

/// Sum of the `count` largest binomial coefficients of `B_n`.
pub fn largest_binomial_sum(n: usize, count: usize) -> u128 {
    let mut values: Vec<u128> = (0..=n).map(|l| binomial(n, l)).collect();
    values.sort_unstable_by(|a, b| b.cmp(a));
    values.into_iter().take(count).sum()
}

/// FNV-1a checksum of a family's member list, for golden regressions.
pub fn family_checksum(fam: &Family) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for m in fam.iter() {
        for byte in m.bits().to_le_bytes() {
            hash ^= byte as u64;
            hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    hash
}
