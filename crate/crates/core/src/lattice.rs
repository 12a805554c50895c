//! Bit-level model of the Boolean lattice `B_n`.
//!
//! Subsets of the ground set `{1..n}` are n-bit masks; families carry cached
//! level statistics and host the Lubell weight, gappedness, the central slab,
//! and the comparability-neighborhood operators used by the embedder.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported ground set; masks are stored in a `u32`.
pub const MAX_GROUND: usize = 24;

/// A member of `B_n` as an n-bit mask. Element labels are 1-based: element
/// `e` occupies bit `e - 1`. The ground set size is implicit from context.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SubsetMask(u32);

impl SubsetMask {
    pub const EMPTY: SubsetMask = SubsetMask(0);

    pub fn new(bits: u32) -> Self {
        SubsetMask(bits)
    }

    pub fn full(n: usize) -> Self {
        assert!(n <= MAX_GROUND);
        SubsetMask(if n == 32 { u32::MAX } else { (1u32 << n) - 1 })
    }

    /// Builds a mask from 1-based element labels.
    pub fn from_elements(elems: &[usize]) -> Self {
        let mut bits = 0u32;
        for &e in elems {
            assert!((1..=MAX_GROUND).contains(&e), "element label out of range");
            bits |= 1 << (e - 1);
        }
        SubsetMask(bits)
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    /// Cardinality of the subset.
    pub fn card(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn has_element(self, e: usize) -> bool {
        (1..=MAX_GROUND).contains(&e) && self.0 & (1 << (e - 1)) != 0
    }

    pub fn is_subset_of(self, other: SubsetMask) -> bool {
        self.0 & other.0 == self.0
    }

    pub fn is_proper_subset_of(self, other: SubsetMask) -> bool {
        self != other && self.is_subset_of(other)
    }

    pub fn comparable(self, other: SubsetMask) -> bool {
        self.is_subset_of(other) || other.is_subset_of(self)
    }

    pub fn union(self, other: SubsetMask) -> SubsetMask {
        SubsetMask(self.0 | other.0)
    }

    pub fn intersection(self, other: SubsetMask) -> SubsetMask {
        SubsetMask(self.0 & other.0)
    }

    pub fn complement(self, n: usize) -> SubsetMask {
        SubsetMask(!self.0 & SubsetMask::full(n).0)
    }

    pub fn valid_for(self, n: usize) -> bool {
        n <= MAX_GROUND && self.is_subset_of(SubsetMask::full(n))
    }

    /// 1-based element labels in increasing order.
    pub fn elements(self) -> Vec<usize> {
        (1..=MAX_GROUND).filter(|&e| self.has_element(e)).collect()
    }
}

impl fmt::Display for SubsetMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 == 0 {
            return write!(f, "{{}}");
        }
        let elems: Vec<String> = self.elements().iter().map(|e| e.to_string()).collect();
        write!(f, "{{{}}}", elems.join(","))
    }
}

impl fmt::Debug for SubsetMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Exact containment relation between two masks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Equal,
    Subset,
    Superset,
    Incomparable,
}

pub fn compare(a: SubsetMask, b: SubsetMask) -> Relation {
    if a == b {
        Relation::Equal
    } else if a.is_subset_of(b) {
        Relation::Subset
    } else if b.is_subset_of(a) {
        Relation::Superset
    } else {
        Relation::Incomparable
    }
}

/// Exact binomial coefficient; panics on overflow (never at supported sizes).
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Exact factorial for `n <= 33`.
pub fn factorial(n: usize) -> u128 {
    assert!(n <= 33, "factorial overflows u128 beyond 33");
    (1..=n as u128).product()
}

pub fn big_binomial(n: usize, k: usize) -> BigUint {
    BigUint::from(binomial(n, k))
}

fn ratio(num: u128, den: u128) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Slab membership by level: `|l - n/2| < 2 sqrt(n ln n)`, strict. The
/// threshold is evaluated in double precision; boundary equality counts as
/// outside. `n = 0` is rejected. Works for any `n`, beyond mask width.
pub fn level_in_central_slab(level: usize, n: usize) -> bool {
    assert!(n >= 1, "central slab undefined for n = 0");
    let dev = (level as f64 - n as f64 / 2.0).abs();
    dev < 2.0 * ((n as f64) * (n as f64).ln()).sqrt()
}

/// Membership of a set in the central slab of `B_n`.
pub fn is_in_central_slab(f: SubsetMask, n: usize) -> bool {
    level_in_central_slab(f.card(), n)
}

/// An inclusive window `[lo, hi]` of levels of `B_n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LevelWindow {
    pub lo: usize,
    pub hi: usize,
}

impl LevelWindow {
    pub fn contains(&self, level: usize) -> bool {
        (self.lo..=self.hi).contains(&level)
    }

    pub fn len(&self) -> usize {
        self.hi - self.lo + 1
    }

    pub fn is_empty(&self) -> bool {
        false // lo <= hi always holds
    }
}

/// The `q` middle levels of `B_n`: the centered window rounded upward, i.e.
/// levels `ceil((n-q+1)/2) ..= ceil((n-q+1)/2) + q - 1`. Parity ties resolve
/// to the upper window.
pub fn middle_levels(n: usize, q: usize) -> Result<LevelWindow> {
    if q == 0 || q > n + 1 {
        return Err(Error::InvalidInput(format!(
            "q = {q} out of range 1..={} for n = {n}",
            n + 1
        )));
    }
    let lo = (n + 2 - q) / 2;
    Ok(LevelWindow { lo, hi: lo + q - 1 })
}

/// An ordered, deduplicated family of subsets of a fixed ground set, with
/// cached per-level counts.
#[derive(Clone, PartialEq, Eq)]
pub struct Family {
    n: usize,
    members: Vec<SubsetMask>,
    level_counts: Vec<usize>,
}

impl Family {
    pub fn new(n: usize, mut members: Vec<SubsetMask>) -> Result<Self> {
        if n > MAX_GROUND {
            return Err(Error::InvalidInput(format!(
                "ground set size {n} exceeds {MAX_GROUND}"
            )));
        }
        members.sort_unstable();
        members.dedup();
        if let Some(bad) = members.iter().find(|m| !m.valid_for(n)) {
            return Err(Error::InvalidInput(format!(
                "mask {bad} has elements outside the ground set of size {n}"
            )));
        }
        let mut level_counts = vec![0usize; n + 1];
        for m in &members {
            level_counts[m.card()] += 1;
        }
        Ok(Family {
            n,
            members,
            level_counts,
        })
    }

    pub fn empty(n: usize) -> Self {
        Family::new(n, Vec::new()).unwrap()
    }

    /// All of `B_n`.
    pub fn complete(n: usize) -> Self {
        assert!(n <= MAX_GROUND);
        let members = (0..1u64 << n).map(|b| SubsetMask::new(b as u32)).collect();
        Family::new(n, members).unwrap()
    }

    /// The union of the complete levels in `window`.
    pub fn levels(n: usize, window: LevelWindow) -> Self {
        assert!(window.hi <= n);
        let members = (0..1u64 << n)
            .map(|b| SubsetMask::new(b as u32))
            .filter(|m| window.contains(m.card()))
            .collect();
        Family::new(n, members).unwrap()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[SubsetMask] {
        &self.members
    }

    pub fn iter(&self) -> impl Iterator<Item = SubsetMask> + '_ {
        self.members.iter().copied()
    }

    pub fn contains(&self, m: SubsetMask) -> bool {
        self.members.binary_search(&m).is_ok()
    }

    pub fn level_counts(&self) -> &[usize] {
        &self.level_counts
    }

    pub fn union(&self, other: &Family) -> Result<Family> {
        assert_eq!(self.n, other.n);
        let mut members = self.members.clone();
        members.extend_from_slice(&other.members);
        Family::new(self.n, members)
    }

    pub fn without(&self, m: SubsetMask) -> Family {
        let members = self.members.iter().copied().filter(|&x| x != m).collect();
        Family::new(self.n, members).unwrap()
    }

    pub fn with(&self, m: SubsetMask) -> Result<Family> {
        let mut members = self.members.clone();
        members.push(m);
        Family::new(self.n, members)
    }

    /// The complement image `{[n] - F : F in self}`.
    pub fn complemented(&self) -> Family {
        let members = self.members.iter().map(|m| m.complement(self.n)).collect();
        Family::new(self.n, members).unwrap()
    }

    /// Lubell weight: the exact rational `sum 1/binom(n, |F|)`; equals the
    /// expected number of members on a uniform full chain.
    pub fn lubell_weight(&self) -> BigRational {
        let mut acc = BigRational::from(BigInt::from(0));
        for (level, &count) in self.level_counts.iter().enumerate() {
            if count > 0 {
                acc += ratio(count as u128, binomial(self.n, level));
            }
        }
        acc
    }

    /// `min_{F in self} binom(n, |F|)`; zero for the empty family.
    pub fn min_member_binomial(&self) -> u128 {
        self.members
            .iter()
            .map(|m| binomial(self.n, m.card()))
            .min()
            .unwrap_or(0)
    }

    /// True iff every strictly nested pair differs by at least `l` elements.
    pub fn is_l_gapped(&self, l: usize) -> bool {
        assert!(l >= 1);
        for (i, &a) in self.members.iter().enumerate() {
            for &b in &self.members[i + 1..] {
                if a.is_proper_subset_of(b) && b.card() - a.card() < l {
                    return false;
                }
                if b.is_proper_subset_of(a) && a.card() - b.card() < l {
                    return false;
                }
            }
        }
        true
    }

    pub fn is_within_central_slab(&self) -> bool {
        self.members.iter().all(|&m| is_in_central_slab(m, self.n))
    }

    /// Parses the family text format: a header `n=<int>`, then one set per
    /// line as `{1,3,4}`, `empty`, or a `0x`-prefixed hex mask. Lines starting
    /// with `#` are comments.
    pub fn parse(text: &str) -> Result<Family> {
        let mut n: Option<usize> = None;
        let mut members = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix("n=") {
                if n.is_some() {
                    return Err(Error::Parse(format!(
                        "line {}: duplicate header",
                        lineno + 1
                    )));
                }
                n = Some(rest.trim().parse().map_err(|_| {
                    Error::Parse(format!("line {}: bad ground set size", lineno + 1))
                })?);
                continue;
            }
            let mask = if line == "empty" {
                SubsetMask::EMPTY
            } else if let Some(hex) = line.strip_prefix("0x").or_else(|| line.strip_prefix("0X")) {
                SubsetMask::new(
                    u32::from_str_radix(hex, 16)
                        .map_err(|_| Error::Parse(format!("line {}: bad hex mask", lineno + 1)))?,
                )
            } else if line.starts_with('{') && line.ends_with('}') {
                let inner = &line[1..line.len() - 1];
                let mut elems = Vec::new();
                for part in inner.split(',') {
                    let part = part.trim();
                    if part.is_empty() {
                        continue;
                    }
                    elems.push(part.parse().map_err(|_| {
                        Error::Parse(format!("line {}: bad element '{part}'", lineno + 1))
                    })?);
                }
                SubsetMask::from_elements(&elems)
            } else {
                return Err(Error::Parse(format!(
                    "line {}: unrecognized set syntax '{line}'",
                    lineno + 1
                )));
            };
            members.push(mask);
        }
        let n = n.ok_or_else(|| Error::Parse("missing n=<int> header".into()))?;
        Family::new(n, members)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("n={}\n", self.n);
        for m in &self.members {
            if m.card() == 0 {
                out.push_str("empty\n");
            } else {
                out.push_str(&format!("{m}\n"));
            }
        }
        out
    }
}

impl fmt::Debug for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Family(n={}, {:?})", self.n, self.members)
    }
}

/// All members of `B_n` comparable to some member of `s` (including `s`).
pub fn comp_closure(s: &Family) -> Family {
    let n = s.n();
    let members: Vec<SubsetMask> = (0..1u64 << n)
        .map(|b| SubsetMask::new(b as u32))
        .filter(|&m| s.iter().any(|x| m.comparable(x)))
        .collect();
    Family::new(n, members).unwrap()
}

/// The lower forbidden neighborhood `(D(F) - {F}) ∩ Comp(S) ∩ slab`.
/// Requires `S` to avoid supersets of `F` (including `F` itself).
pub fn forbidden_down(f: SubsetMask, s: &Family) -> Result<Family> {
    if let Some(bad) = s.iter().find(|&m| f.is_subset_of(m)) {
        return Err(Error::SidePrecondition {
            what: format!("forbidden_down({f}, ..): S must avoid supersets of F"),
            member: bad.to_string(),
        });
    }
    let n = s.n();
    let mut members = Vec::new();
    // Enumerate proper submasks of f, including the empty set.
    let bits = f.bits();
    let mut sub = bits;
    loop {
        sub = sub.wrapping_sub(1) & bits;
        let m = SubsetMask::new(sub);
        if is_in_central_slab(m, n) && s.iter().any(|x| m.comparable(x)) {
            members.push(m);
        }
        if sub == 0 {
            break;
        }
    }
    Family::new(n, members)
}

/// The upper forbidden neighborhood `(U(F) - {F}) ∩ Comp(S) ∩ slab`.
/// Requires `S` to avoid subsets of `F` (including `F` itself).
pub fn forbidden_up(f: SubsetMask, s: &Family) -> Result<Family> {
    if let Some(bad) = s.iter().find(|&m| m.is_subset_of(f)) {
        return Err(Error::SidePrecondition {
            what: format!("forbidden_up({f}, ..): S must avoid subsets of F"),
            member: bad.to_string(),
        });
    }
    let n = s.n();
    let down = forbidden_down(f.complement(n), &s.complemented())?;
    Ok(down.complemented())
}
