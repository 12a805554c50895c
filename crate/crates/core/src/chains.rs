//! Full chains of `B_n`, marked-chain families and their q-th powers, level
//! sets, and exact chain-hit probabilities.
//!
//! A full chain is identified with a permutation of the ground set and keyed
//! by its Lehmer rank, so marked-chain maps are stable and mergeable. The
//! q-th power of a family is never materialized globally; consumers iterate
//! per chain or query positions.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{binomial, factorial, Family, SubsetMask};
use crate::rng;

/// Default cap on ground sets for operations that enumerate all n! chains.
pub const DEFAULT_CHAIN_CAP: usize = 8;

/// Cap on `|F|` for the exact hit-probability subset DP.
pub const HIT_DP_CAP: usize = 22;

/// Which side of an anchor set a witness family lives on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Lower,
    Upper,
}

/// A full chain `{} < {p1} < {p1,p2} < ... < [n]`, stored as the permutation
/// `p` of the ground set (1-based labels).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FullChain {
    perm: Vec<u8>,
}

impl FullChain {
    pub fn new(perm: Vec<u8>) -> Result<Self> {
        let n = perm.len();
        let mut seen = vec![false; n + 1];
        for &e in &perm {
            if e == 0 || e as usize > n || seen[e as usize] {
                return Err(Error::InvalidInput(format!("bad permutation {perm:?}")));
            }
            seen[e as usize] = true;
        }
        Ok(FullChain { perm })
    }

    pub fn n(&self) -> usize {
        self.perm.len()
    }

    pub fn perm(&self) -> &[u8] {
        &self.perm
    }

    /// The chain member of cardinality `k`.
    pub fn prefix_mask(&self, k: usize) -> SubsetMask {
        let mut bits = 0u32;
        for &e in &self.perm[..k] {
            bits |= 1 << (e - 1);
        }
        SubsetMask::new(bits)
    }

    /// All `n + 1` members, ascending.
    pub fn masks(&self) -> Vec<SubsetMask> {
        (0..=self.n()).map(|k| self.prefix_mask(k)).collect()
    }

    pub fn contains(&self, m: SubsetMask) -> bool {
        self.prefix_mask(m.card()) == m
    }

    /// Lehmer rank in the lexicographic order of permutations.
    pub fn rank(&self) -> u64 {
        let n = self.n();
        assert!(n <= 20, "chain rank overflows u64 beyond n = 20");
        let mut rank: u64 = 0;
        for i in 0..n {
            let smaller_later = self.perm[i + 1..]
                .iter()
                .filter(|&&x| x < self.perm[i])
                .count() as u64;
            rank += smaller_later * factorial(n - 1 - i) as u64;
        }
        rank
    }

    pub fn from_rank(n: usize, mut rank: u64) -> Self {
        assert!(n <= 20);
        let mut pool: Vec<u8> = (1..=n as u8).collect();
        let mut perm = Vec::with_capacity(n);
        for i in 0..n {
            let f = factorial(n - 1 - i) as u64;
            let idx = (rank / f) as usize;
            rank %= f;
            perm.push(pool.remove(idx));
        }
        FullChain { perm }
    }

    /// The image of the chain under complementation; its members are the
    /// complements of this chain's members.
    pub fn complemented(&self) -> FullChain {
        let mut perm = self.perm.clone();
        perm.reverse();
        FullChain { perm }
    }
}

struct PermIter {
    current: Option<Vec<u8>>,
}

impl Iterator for PermIter {
    type Item = FullChain;

    fn next(&mut self) -> Option<FullChain> {
        let perm = self.current.take()?;
        let mut next = perm.clone();
        if next_permutation(&mut next) {
            self.current = Some(next);
        }
        Some(FullChain { perm })
    }
}

fn next_permutation(p: &mut [u8]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// All `n!` full chains in lexicographic permutation order.
pub fn full_chains(n: usize) -> Result<impl Iterator<Item = FullChain>> {
    full_chains_with_cap(n, DEFAULT_CHAIN_CAP)
}

pub fn full_chains_with_cap(n: usize, cap: usize) -> Result<impl Iterator<Item = FullChain>> {
    if n > cap {
        return Err(Error::ChainCapExceeded { n, cap });
    }
    Ok(PermIter {
        current: Some((1..=n as u8).collect()),
    })
}

/// The `|F|! (n - |F|)!` full chains through `F`, deterministic order.
pub fn chains_through(f: SubsetMask, n: usize) -> Result<Vec<FullChain>> {
    chains_through_with_cap(f, n, DEFAULT_CHAIN_CAP)
}

pub fn chains_through_with_cap(f: SubsetMask, n: usize, cap: usize) -> Result<Vec<FullChain>> {
    if n > cap {
        return Err(Error::ChainCapExceeded { n, cap });
    }
    let inside: Vec<u8> = (1..=n as u8)
        .filter(|&e| f.has_element(e as usize))
        .collect();
    let outside: Vec<u8> = (1..=n as u8)
        .filter(|&e| !f.has_element(e as usize))
        .collect();
    let mut out = Vec::new();
    let mut lo = inside.clone();
    loop {
        let mut hi = outside.clone();
        loop {
            let mut perm = lo.clone();
            perm.extend_from_slice(&hi);
            out.push(FullChain { perm });
            if !next_permutation(&mut hi) {
                break;
            }
        }
        if !next_permutation(&mut lo) {
            break;
        }
    }
    Ok(out)
}

/// A family of 1-marked chains: per-chain marker lists keyed by chain rank,
/// each sorted by decreasing cardinality.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarkedChainFamily {
    n: usize,
    markers: BTreeMap<u64, Vec<SubsetMask>>,
}

impl MarkedChainFamily {
    pub fn new(n: usize, markers: BTreeMap<u64, Vec<SubsetMask>>) -> Self {
        let mut cleaned = BTreeMap::new();
        for (chain, mut list) in markers {
            if list.is_empty() {
                continue;
            }
            list.sort_by_key(|m| std::cmp::Reverse(m.card()));
            cleaned.insert(chain, list);
        }
        MarkedChainFamily {
            n,
            markers: cleaned,
        }
    }

    pub fn empty(n: usize) -> Self {
        MarkedChainFamily {
            n,
            markers: BTreeMap::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn chain_count(&self) -> usize {
        self.markers.len()
    }

    /// Total number of (chain, marker) incidences.
    pub fn incidence_count(&self) -> u64 {
        self.markers.values().map(|l| l.len() as u64).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.markers.is_empty()
    }

    pub fn markers_on(&self, chain: u64) -> &[SubsetMask] {
        self.markers
            .get(&chain)
            .map(|v| v.as_slice())
            .unwrap_or(&[])
    }

    pub fn chains(&self) -> impl Iterator<Item = (u64, &[SubsetMask])> {
        self.markers.iter().map(|(&c, l)| (c, l.as_slice()))
    }

    pub fn is_q_strong(&self, q: usize) -> bool {
        self.markers.values().all(|l| l.len() >= q)
    }

    /// Distinct marker masks across all chains.
    pub fn mask_support(&self) -> Vec<SubsetMask> {
        let mut out: Vec<SubsetMask> = self.markers.values().flatten().copied().collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// True iff every (chain, marker) pair of `self` also occurs in `other`.
    pub fn is_nested_in(&self, other: &MarkedChainFamily) -> bool {
        self.markers.iter().all(|(chain, list)| {
            let theirs = other.markers_on(*chain);
            list.iter().all(|m| theirs.contains(m))
        })
    }

    /// The image of the family under complementation of every chain and
    /// marker; an involution.
    pub fn complemented(&self) -> MarkedChainFamily {
        let n = self.n;
        let mut markers = BTreeMap::new();
        for (&chain, list) in &self.markers {
            let comp_chain = FullChain::from_rank(n, chain).complemented().rank();
            let comp_list: Vec<SubsetMask> = list.iter().rev().map(|m| m.complement(n)).collect();
            markers.insert(comp_chain, comp_list);
        }
        MarkedChainFamily { n, markers }
    }
}

/// The q-strong 1-marked chain family over `fam`: pairs `(chain, F)` with
/// `F` on the chain and at least `q` members of `fam` on that chain.
pub fn build_strong_t(fam: &Family, q: usize) -> Result<MarkedChainFamily> {
    build_strong_t_with_cap(fam, q, DEFAULT_CHAIN_CAP)
}

pub fn build_strong_t_with_cap(fam: &Family, q: usize, cap: usize) -> Result<MarkedChainFamily> {
    let n = fam.n();
    let mut markers = BTreeMap::new();
    for chain in full_chains_with_cap(n, cap)? {
        let on_chain: Vec<SubsetMask> = (0..=n)
            .rev()
            .map(|k| chain.prefix_mask(k))
            .filter(|m| fam.contains(*m))
            .collect();
        if on_chain.len() >= q {
            markers.insert(chain.rank(), on_chain);
        }
    }
    Ok(MarkedChainFamily { n, markers })
}

/// Exact number of q-marked chains with markers in `fam`, over all chains:
/// `sum_chain binom(|chain ∩ fam|, q)`.
pub fn count_q_marked(fam: &Family, q: usize) -> Result<u128> {
    count_q_marked_with_cap(fam, q, DEFAULT_CHAIN_CAP)
}

pub fn count_q_marked_with_cap(fam: &Family, q: usize, cap: usize) -> Result<u128> {
    let n = fam.n();
    let mut total: u128 = 0;
    for chain in full_chains_with_cap(n, cap)? {
        let hits = (0..=n)
            .filter(|&k| fam.contains(chain.prefix_mask(k)))
            .count();
        total += binomial(hits, q);
    }
    Ok(total)
}

/// A materialized q-marked chain: the chain key plus the `q` markers in
/// decreasing cardinality order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarkedQChain {
    pub chain: u64,
    pub members: Vec<SubsetMask>,
}

/// A logical view of the q-th power `T[q]` of a q-strong family: all
/// `(chain, Q)` with `Q` a q-subset of the chain's markers. Nothing is
/// materialized; queries work off a position index.
pub struct QMarkedView<'a> {
    base: &'a MarkedChainFamily,
    q: usize,
    occurrences: BTreeMap<SubsetMask, Vec<(u64, usize)>>,
}

pub fn power_view(base: &MarkedChainFamily, q: usize) -> Result<QMarkedView<'_>> {
    for (chain, list) in base.chains() {
        if list.len() < q {
            return Err(Error::NotQStrong { q, chain });
        }
    }
    let mut occurrences: BTreeMap<SubsetMask, Vec<(u64, usize)>> = BTreeMap::new();
    for (chain, list) in base.chains() {
        for (idx, &m) in list.iter().enumerate() {
            occurrences.entry(m).or_default().push((chain, idx));
        }
    }
    Ok(QMarkedView {
        base,
        q,
        occurrences,
    })
}

impl<'a> QMarkedView<'a> {
    pub fn n(&self) -> usize {
        self.base.n()
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn base(&self) -> &MarkedChainFamily {
        self.base
    }

    pub fn is_empty(&self) -> bool {
        self.base.is_empty()
    }

    /// Distinct marker masks.
    pub fn mask_support(&self) -> Vec<SubsetMask> {
        self.occurrences.keys().copied().collect()
    }

    /// Every `(chain, index)` at which `f` occurs as a marker.
    pub fn occurrences(&self, f: SubsetMask) -> &[(u64, usize)] {
        self.occurrences
            .get(&f)
            .map(|v| v.as_slice())
            .unwrap_or(&[])
    }

    /// Marker list of one chain, decreasing cardinality.
    pub fn markers_on(&self, chain: u64) -> &[SubsetMask] {
        self.base.markers_on(chain)
    }

    /// Total `|T[q]| = sum_chain binom(|T(chain)|, q)`.
    pub fn count_q_chains(&self) -> u128 {
        self.base
            .chains()
            .map(|(_, list)| binomial(list.len(), self.q))
            .sum()
    }

    fn spot_eligible(&self, chain: u64, idx: usize, i: usize) -> bool {
        let t = self.base.markers_on(chain).len();
        idx >= i - 1 && t - 1 - idx >= self.q - i
    }

    /// Chains where `f` occupies position `i` of some q-chain, with its index
    /// in the marker list.
    pub fn eligible_spots(&self, f: SubsetMask, i: usize) -> Vec<(u64, usize)> {
        assert!((1..=self.q).contains(&i), "position out of [q]");
        self.occurrences
            .get(&f)
            .map(|spots| {
                spots
                    .iter()
                    .copied()
                    .filter(|&(chain, idx)| self.spot_eligible(chain, idx, i))
                    .collect()
            })
            .unwrap_or_default()
    }

    /// Per eligible chain, the markers strictly below `f` on that chain.
    pub fn lower_tail_sets(&self, f: SubsetMask, i: usize) -> Vec<(u64, Vec<SubsetMask>)> {
        self.eligible_spots(f, i)
            .into_iter()
            .map(|(chain, idx)| (chain, self.base.markers_on(chain)[idx + 1..].to_vec()))
            .collect()
    }

    /// Per eligible chain, the markers strictly above `f` on that chain.
    pub fn upper_head_sets(&self, f: SubsetMask, i: usize) -> Vec<(u64, Vec<SubsetMask>)> {
        self.eligible_spots(f, i)
            .into_iter()
            .map(|(chain, idx)| (chain, self.base.markers_on(chain)[..idx].to_vec()))
            .collect()
    }

    /// Exact `|M(F, i)|`.
    pub fn count_marked_at(&self, f: SubsetMask, i: usize) -> u128 {
        self.eligible_spots(f, i)
            .into_iter()
            .map(|(chain, idx)| {
                let t = self.base.markers_on(chain).len();
                binomial(idx, i - 1) * binomial(t - 1 - idx, self.q - i)
            })
            .sum()
    }

    /// Materializes `M(F, i)`: every q-chain with `f` in position `i`.
    pub fn marked_at(&self, f: SubsetMask, i: usize) -> Vec<MarkedQChain> {
        let mut out = Vec::new();
        for (chain, idx) in self.eligible_spots(f, i) {
            let list = self.base.markers_on(chain);
            let above: Vec<SubsetMask> = list[..idx].to_vec();
            let below: Vec<SubsetMask> = list[idx + 1..].to_vec();
            for head in combinations(&above, i - 1) {
                for tail in combinations(&below, self.q - i) {
                    let mut members = head.clone();
                    members.push(f);
                    members.extend_from_slice(&tail);
                    out.push(MarkedQChain { chain, members });
                }
            }
        }
        out
    }

    /// The level set `L^i`: all masks occupying position `i` of some q-chain.
    pub fn level_set(&self, i: usize) -> Result<Family> {
        if i < 1 || i > self.q {
            return Err(Error::InvalidInput(format!(
                "position {i} out of [{}]",
                self.q
            )));
        }
        let mut members = Vec::new();
        for (chain, list) in self.base.chains() {
            for (idx, &m) in list.iter().enumerate() {
                if self.spot_eligible(chain, idx, i) {
                    members.push(m);
                }
            }
        }
        Family::new(self.n(), members)
    }
}

fn combinations<T: Clone>(items: &[T], k: usize) -> Vec<Vec<T>> {
    if k > items.len() {
        return Vec::new();
    }
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.iter().map(|&i| items[i].clone()).collect());
        // advance the combination
        let mut pos = k;
        while pos > 0 {
            pos -= 1;
            if idx[pos] != pos + items.len() - k {
                idx[pos] += 1;
                for j in pos + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
            if pos == 0 {
                return out;
            }
        }
    }
}

fn ratio(num: u128, den: u128) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn partition_by_side(f: SubsetMask, w: &Family, side: Side) -> Result<Vec<SubsetMask>> {
    let mut active = Vec::new();
    for d in w.iter() {
        match side {
            Side::Lower => {
                if d.is_subset_of(f) {
                    active.push(d);
                } else if f.is_proper_subset_of(d) {
                    return Err(Error::SidePrecondition {
                        what: format!("hit_probability({f}, .., lower): member above F"),
                        member: d.to_string(),
                    });
                }
                // incomparable members never lie on a chain through F: ignored
            }
            Side::Upper => {
                if f.is_subset_of(d) {
                    active.push(d);
                } else if d.is_proper_subset_of(f) {
                    return Err(Error::SidePrecondition {
                        what: format!("hit_probability({f}, .., upper): member below F"),
                        member: d.to_string(),
                    });
                }
            }
        }
    }
    Ok(active)
}

/// Exact conditional probability that a uniform full chain through `f` meets
/// `w` on the given side, by dynamic programming over the interval `[{}, F]`
/// (resp. `[F, [n]]`): with `g(D) = [D not in W] * sum_{x in D} g(D - x)`,
/// the answer is `1 - g(F) / |F|!`.
pub fn hit_probability(f: SubsetMask, w: &Family, side: Side) -> Result<BigRational> {
    let n = w.n();
    if !f.valid_for(n) {
        return Err(Error::InvalidInput(format!("mask {f} invalid for n = {n}")));
    }
    let active = partition_by_side(f, w, side)?;
    match side {
        Side::Lower => lower_hit_probability(f, &active),
        Side::Upper => {
            let comp_active: Vec<SubsetMask> = active.iter().map(|d| d.complement(n)).collect();
            lower_hit_probability(f.complement(n), &comp_active)
        }
    }
}

fn lower_hit_probability(f: SubsetMask, active: &[SubsetMask]) -> Result<BigRational> {
    let s = f.card();
    if s > HIT_DP_CAP {
        return Err(Error::CapExceeded {
            what: "hit probability DP",
            size: s,
            cap: HIT_DP_CAP,
        });
    }
    // Map the bits of f to dense positions.
    let positions: Vec<u32> = (0..32).filter(|b| f.bits() & (1 << b) != 0).collect();
    let dense = |m: SubsetMask| -> u32 {
        let mut d = 0u32;
        for (j, &b) in positions.iter().enumerate() {
            if m.bits() & (1 << b) != 0 {
                d |= 1 << j;
            }
        }
        d
    };
    let mut blocked = vec![false; 1usize << s];
    for &d in active {
        blocked[dense(d) as usize] = true;
    }
    let mut g = vec![0u128; 1usize << s];
    g[0] = if blocked[0] { 0 } else { 1 };
    for d in 1..1usize << s {
        if blocked[d] {
            continue;
        }
        let mut sum = 0u128;
        let mut rest = d;
        while rest != 0 {
            let bit = rest & rest.wrapping_neg();
            sum += g[d ^ bit];
            rest ^= bit;
        }
        g[d] = sum;
    }
    let avoiding = g[(1usize << s) - 1];
    Ok(ratio(1, 1) - ratio(avoiding, factorial(s)))
}

/// The relative Lubell bound `sum_{D in W} 1 / binom(|F|, |F - D|)` (upper
/// side via complement); always an upper bound on `hit_probability`.
pub fn relative_lubell_bound(f: SubsetMask, w: &Family, side: Side) -> Result<BigRational> {
    let n = w.n();
    let active = partition_by_side(f, w, side)?;
    let mut acc = BigRational::from(BigInt::from(0));
    for d in active {
        let (anchor, diff) = match side {
            Side::Lower => (f.card(), f.card() - d.card()),
            Side::Upper => (n - f.card(), d.card() - f.card()),
        };
        acc += ratio(1, binomial(anchor, diff));
    }
    Ok(acc)
}

/// Seeded Monte Carlo estimate of the hit probability, for anchors beyond
/// the exact DP cap. Returns the estimate together with the sample count; it
/// never silently replaces the exact mode.
pub fn hit_probability_sampled(
    f: SubsetMask,
    w: &Family,
    side: Side,
    samples: u64,
    seed: u64,
) -> Result<(f64, u64)> {
    let n = w.n();
    let active = partition_by_side(f, w, side)?;
    let (anchor, targets) = match side {
        Side::Lower => (f, active),
        Side::Upper => (
            f.complement(n),
            active.iter().map(|d| d.complement(n)).collect(),
        ),
    };
    let target_set: std::collections::HashSet<SubsetMask> = targets.into_iter().collect();
    let elems: Vec<usize> = anchor.elements();
    let mut hits = 0u64;
    let mut counter = 0u64;
    for _ in 0..samples {
        let mut order = elems.clone();
        rng::shuffle(&mut order, seed, &mut counter);
        let mut acc = SubsetMask::EMPTY;
        let mut hit = target_set.contains(&acc);
        for &e in &order {
            acc = acc.union(SubsetMask::from_elements(&[e]));
            if target_set.contains(&acc) {
                hit = true;
                break;
            }
        }
        if hit {
            hits += 1;
        }
    }
    Ok((hits as f64 / samples as f64, samples))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LevelWindow;

    fn m(elems: &[usize]) -> SubsetMask {
        SubsetMask::from_elements(elems)
    }

    #[test]
    fn chain_counts() {
        assert_eq!(full_chains(3).unwrap().count(), 6);
        assert_eq!(chains_through(m(&[1]), 3).unwrap().len(), 2);
        assert_eq!(chains_through(SubsetMask::EMPTY, 3).unwrap().len(), 6);
        assert!(full_chains_with_cap(9, 8).is_err());
    }

    #[test]
    fn chains_are_unique_and_contain_their_masks() {
        let mut seen = std::collections::HashSet::new();
        for chain in full_chains(4).unwrap() {
            assert!(seen.insert(chain.rank()));
            for k in 0..=4 {
                assert!(chain.contains(chain.prefix_mask(k)));
            }
        }
        assert_eq!(seen.len(), 24);
    }

    #[test]
    fn rank_roundtrip() {
        for chain in full_chains(5).unwrap() {
            let r = chain.rank();
            assert_eq!(FullChain::from_rank(5, r), chain);
        }
    }

    #[test]
    fn complement_is_an_involution_on_chains() {
        for chain in full_chains(4).unwrap() {
            let comp = chain.complemented();
            assert_eq!(comp.complemented(), chain);
            for k in 0..=4 {
                assert!(comp.contains(chain.prefix_mask(k).complement(4)));
            }
        }
    }

    #[test]
    fn strong_family_examples() {
        let t = build_strong_t(&Family::complete(2), 2).unwrap();
        assert_eq!(t.incidence_count(), 6);
        assert!(t.is_q_strong(2));

        let sparse = Family::new(2, vec![m(&[1]), m(&[2])]).unwrap();
        assert!(build_strong_t(&sparse, 2).unwrap().is_empty());
        assert!(build_strong_t(&Family::empty(3), 2).unwrap().is_empty());
    }

    #[test]
    fn count_q_marked_examples() {
        assert_eq!(count_q_marked(&Family::complete(2), 2).unwrap(), 6);
        // q = 1 recovers the incidence identity mu * n!
        let fam = Family::new(3, vec![m(&[1]), m(&[1, 2]), m(&[3])]).unwrap();
        let mu = fam.lubell_weight();
        let incidences = count_q_marked(&fam, 1).unwrap();
        assert_eq!(ratio(incidences, 1), mu * ratio(6, 1));
        // an antichain never carries two markers on one chain
        let anti = Family::levels(4, LevelWindow { lo: 2, hi: 2 });
        assert_eq!(count_q_marked(&anti, 2).unwrap(), 0);
    }

    #[test]
    fn power_view_counts() {
        let t = build_strong_t(&Family::complete(2), 2).unwrap();
        let view = power_view(&t, 2).unwrap();
        assert_eq!(view.count_q_chains(), 6);
        // every chain of B_2 carries 3 markers: binom(3,2) = 3 q-chains each
        for (_, list) in t.chains() {
            assert_eq!(list.len(), 3);
        }
    }

    #[test]
    fn power_view_requires_strength() {
        let mut markers = BTreeMap::new();
        markers.insert(0u64, vec![m(&[1])]);
        let t = MarkedChainFamily::new(2, markers);
        assert!(matches!(power_view(&t, 2), Err(Error::NotQStrong { .. })));
    }

    #[test]
    fn level_set_examples() {
        let t = build_strong_t(&Family::complete(2), 2).unwrap();
        let view = power_view(&t, 2).unwrap();
        let l1 = view.level_set(1).unwrap();
        assert_eq!(l1.members(), &[m(&[1]), m(&[2]), m(&[1, 2])]);
        let l2 = view.level_set(2).unwrap();
        assert_eq!(l2.members(), &[SubsetMask::EMPTY, m(&[1]), m(&[2])]);
        let empty = MarkedChainFamily::empty(2);
        let ev = power_view(&empty, 2).unwrap();
        assert!(ev.level_set(1).unwrap().is_empty());
        assert!(ev.level_set(3).is_err() || ev.q() != 2);
    }

    #[test]
    fn marked_at_examples() {
        let t = build_strong_t(&Family::complete(2), 2).unwrap();
        let view = power_view(&t, 2).unwrap();
        // {1} second: only the pair ({1,2},{1}) on the single chain through {1}
        let hits = view.marked_at(m(&[1]), 2);
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].members, vec![m(&[1, 2]), m(&[1])]);
        assert_eq!(view.count_marked_at(m(&[1]), 2), 1);
        // counts agree with materialization everywhere
        for f in view.mask_support() {
            for i in 1..=2 {
                assert_eq!(
                    view.count_marked_at(f, i),
                    view.marked_at(f, i).len() as u128
                );
            }
        }
    }

    #[test]
    fn single_q_chain_positions() {
        // a single chain with exactly q markers has one q-chain; position q
        // holds its smallest member only
        let fam = Family::new(3, vec![m(&[1]), m(&[1, 2]), m(&[1, 2, 3])]).unwrap();
        let t = build_strong_t(&fam, 3).unwrap();
        let view = power_view(&t, 3).unwrap();
        let l3 = view.level_set(3).unwrap();
        assert_eq!(l3.members(), &[m(&[1])]);
    }

    #[test]
    fn hit_probability_examples() {
        let f = m(&[1, 2, 3]);
        assert_eq!(
            hit_probability(f, &Family::empty(3), Side::Lower).unwrap(),
            ratio(0, 1)
        );
        let w_empty_set = Family::new(3, vec![SubsetMask::EMPTY]).unwrap();
        assert_eq!(
            hit_probability(f, &w_empty_set, Side::Lower).unwrap(),
            ratio(1, 1)
        );
        let w = Family::new(3, vec![m(&[1])]).unwrap();
        assert_eq!(hit_probability(f, &w, Side::Lower).unwrap(), ratio(1, 3));
    }

    #[test]
    fn hit_probability_rejects_mixed_sides() {
        let f = m(&[1]);
        let w = Family::new(3, vec![m(&[1, 2])]).unwrap();
        assert!(matches!(
            hit_probability(f, &w, Side::Lower),
            Err(Error::SidePrecondition { .. })
        ));
        let w2 = Family::new(3, vec![SubsetMask::EMPTY]).unwrap();
        assert!(matches!(
            hit_probability(f, &w2, Side::Upper),
            Err(Error::SidePrecondition { .. })
        ));
    }

    #[test]
    fn hit_probability_matches_chain_enumeration() {
        // exact equality against explicit enumeration on assorted instances
        let n = 5;
        for seed in 0..20u64 {
            let mut ctr = 0;
            let f = SubsetMask::new(rng::draw_below(seed, &mut ctr, 1 << n) as u32);
            let mut w_members = Vec::new();
            for b in 0..1u32 << n {
                let d = SubsetMask::new(b);
                if d.is_subset_of(f) && rng::draw(seed ^ 0xABCD, b as u64) % 3 == 0 {
                    w_members.push(d);
                }
            }
            let w = Family::new(n, w_members).unwrap();
            let exact = hit_probability(f, &w, Side::Lower).unwrap();
            let chains = chains_through(f, n).unwrap();
            let hits = chains
                .iter()
                .filter(|c| c.masks().iter().any(|mask| w.contains(*mask)))
                .count();
            assert_eq!(exact, ratio(hits as u128, chains.len() as u128));
            // and the relative Lubell bound dominates
            let bound = relative_lubell_bound(f, &w, Side::Lower).unwrap();
            assert!(exact <= bound);
        }
    }

    #[test]
    fn upper_side_via_involution_matches_enumeration() {
        let n = 4;
        let f = m(&[2]);
        let w = Family::new(n, vec![m(&[1, 2]), m(&[2, 3, 4])]).unwrap();
        let exact = hit_probability(f, &w, Side::Upper).unwrap();
        let chains = chains_through(f, n).unwrap();
        let hits = chains
            .iter()
            .filter(|c| c.masks().iter().any(|mask| w.contains(*mask)))
            .count();
        assert_eq!(exact, ratio(hits as u128, chains.len() as u128));
    }

    #[test]
    fn sampled_estimate_is_reported_with_count() {
        let f = m(&[1, 2, 3]);
        let w = Family::new(3, vec![m(&[1])]).unwrap();
        let (est, samples) = hit_probability_sampled(f, &w, Side::Lower, 2000, 7).unwrap();
        assert_eq!(samples, 2000);
        assert!((est - 1.0 / 3.0).abs() < 0.05);
    }
}
