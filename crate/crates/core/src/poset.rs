//! Finite posets, Hasse diagrams, tree-poset recognition, rank functions,
//! and induced-copy recognition.

use std::collections::VecDeque;
use std::fmt;

use crate::error::{Error, Result};
use crate::lattice::{Family, SubsetMask};

/// A finite poset on labels `0..size`, stored as its strict-order relation.
/// Irreflexivity, antisymmetry, and transitivity are checked on construction.
#[derive(Clone, PartialEq, Eq)]
pub struct Poset {
    size: usize,
    lt: Vec<bool>, // row-major: lt[x * size + y] means x < y
}

/// Directed cover edges: `(x, y)` means `y` covers `x`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HasseDiagram {
    pub covers: Vec<(usize, usize)>,
}

impl Poset {
    fn from_matrix(size: usize, lt: Vec<bool>) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidPoset("empty poset".into()));
        }
        let at = |x: usize, y: usize| lt[x * size + y];
        for x in 0..size {
            if at(x, x) {
                return Err(Error::InvalidPoset(format!(
                    "{x} < {x} violates irreflexivity"
                )));
            }
            for y in 0..size {
                if at(x, y) && at(y, x) {
                    return Err(Error::InvalidPoset(format!(
                        "{x} < {y} and {y} < {x} violate antisymmetry"
                    )));
                }
                for z in 0..size {
                    if at(x, y) && at(y, z) && !at(x, z) {
                        return Err(Error::InvalidPoset(format!(
                            "{x} < {y} < {z} but not {x} < {z}: not transitive"
                        )));
                    }
                }
            }
        }
        Ok(Poset { size, lt })
    }

    /// Builds a poset from strict-order pairs `x < y`, which must already be
    /// transitively closed.
    pub fn from_relation(size: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut lt = vec![false; size * size];
        for &(x, y) in pairs {
            if x >= size || y >= size {
                return Err(Error::InvalidPoset(format!(
                    "label {x} or {y} out of range"
                )));
            }
            lt[x * size + y] = true;
        }
        Poset::from_matrix(size, lt)
    }

    /// Builds a poset from cover edges; the transitive closure is computed.
    pub fn from_covers(size: usize, covers: &[(usize, usize)]) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidPoset("empty poset".into()));
        }
        let mut lt = vec![false; size * size];
        for &(x, y) in covers {
            if x >= size || y >= size {
                return Err(Error::InvalidPoset(format!(
                    "label {x} or {y} out of range"
                )));
            }
            lt[x * size + y] = true;
        }
        // Floyd-Warshall closure.
        for k in 0..size {
            for x in 0..size {
                if lt[x * size + k] {
                    for y in 0..size {
                        if lt[k * size + y] {
                            lt[x * size + y] = true;
                        }
                    }
                }
            }
        }
        Poset::from_matrix(size, lt)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn lt(&self, x: usize, y: usize) -> bool {
        self.lt[x * self.size + y]
    }

    pub fn comparable(&self, x: usize, y: usize) -> bool {
        self.lt(x, y) || self.lt(y, x)
    }

    /// The cover relation.
    pub fn hasse(&self) -> HasseDiagram {
        let mut covers = Vec::new();
        for x in 0..self.size {
            for y in 0..self.size {
                if self.lt(x, y) && !(0..self.size).any(|z| self.lt(x, z) && self.lt(z, y)) {
                    covers.push((x, y));
                }
            }
        }
        HasseDiagram { covers }
    }

    /// Undirected Hasse adjacency lists, ascending labels.
    pub fn hasse_neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.size];
        for (x, y) in self.hasse().covers {
            adj[x].push(y);
            adj[y].push(x);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    /// Longest chain, counted in elements.
    pub fn height(&self) -> usize {
        let mut best = vec![0usize; self.size];
        // Process in a topological-ish sweep: iterate until stable (size is tiny).
        let mut changed = true;
        while changed {
            changed = false;
            for x in 0..self.size {
                let h = (0..self.size)
                    .filter(|&y| self.lt(y, x))
                    .map(|y| best[y])
                    .max()
                    .unwrap_or(0)
                    + 1;
                if h > best[x] {
                    best[x] = h;
                    changed = true;
                }
            }
        }
        best.into_iter().max().unwrap_or(0)
    }

    /// True iff the undirected Hasse graph is connected and acyclic.
    pub fn is_tree(&self) -> bool {
        let adj = self.hasse_neighbors();
        let edge_count: usize = adj.iter().map(|l| l.len()).sum::<usize>() / 2;
        if edge_count != self.size - 1 {
            return false;
        }
        let mut seen = vec![false; self.size];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut reached = 1;
        while let Some(x) = queue.pop_front() {
            for &y in &adj[x] {
                if !seen[y] {
                    seen[y] = true;
                    reached += 1;
                    queue.push_back(y);
                }
            }
        }
        reached == self.size
    }

    /// Number of automorphisms; brute force, intended for `size <= 10`.
    pub fn automorphism_count(&self) -> u64 {
        let mut count = 0;
        let mut perm = vec![usize::MAX; self.size];
        let mut used = vec![false; self.size];
        self.count_isomorphisms_into(self, &mut perm, &mut used, 0, &mut count);
        count
    }

    /// True iff the two posets are isomorphic.
    pub fn is_isomorphic(&self, other: &Poset) -> bool {
        if self.size != other.size {
            return false;
        }
        let mut count = 0;
        let mut perm = vec![usize::MAX; self.size];
        let mut used = vec![false; self.size];
        self.count_isomorphisms_into(other, &mut perm, &mut used, 0, &mut count);
        count > 0
    }

    fn count_isomorphisms_into(
        &self,
        other: &Poset,
        perm: &mut Vec<usize>,
        used: &mut Vec<bool>,
        x: usize,
        count: &mut u64,
    ) {
        if x == self.size {
            *count += 1;
            return;
        }
        'target: for t in 0..self.size {
            if used[t] {
                continue;
            }
            for p in 0..x {
                let q = perm[p];
                if self.lt(p, x) != other.lt(q, t) || self.lt(x, p) != other.lt(t, q) {
                    continue 'target;
                }
            }
            perm[x] = t;
            used[t] = true;
            self.count_isomorphisms_into(other, perm, used, x + 1, count);
            used[t] = false;
            perm[x] = usize::MAX;
        }
    }

    // Named constructors for the posets used throughout the tests and docs.

    /// Totally ordered `0 < 1 < ... < k-1`.
    pub fn chain(k: usize) -> Poset {
        let covers: Vec<_> = (0..k.saturating_sub(1)).map(|i| (i, i + 1)).collect();
        Poset::from_covers(k, &covers).unwrap()
    }

    pub fn antichain(m: usize) -> Poset {
        Poset::from_covers(m, &[]).unwrap()
    }

    /// One bottom below two incomparable tops: `0 < 1`, `0 < 2`.
    pub fn vee() -> Poset {
        Poset::from_covers(3, &[(0, 1), (0, 2)]).unwrap()
    }

    /// Two incomparable bottoms below one top: `0 < 2`, `1 < 2`.
    pub fn wedge() -> Poset {
        Poset::from_covers(3, &[(0, 2), (1, 2)]).unwrap()
    }

    /// The three-element zigzag `0 < 1 > 2`.
    pub fn zigzag3() -> Poset {
        Poset::from_covers(3, &[(0, 1), (2, 1)]).unwrap()
    }

    /// One bottom below three incomparable tops.
    pub fn spider4() -> Poset {
        Poset::from_covers(4, &[(0, 1), (0, 2), (0, 3)]).unwrap()
    }

    /// Parses the poset file format: a header `poset <name> size=<k>`, then
    /// `cover <i> <j>` lines meaning `i < j` is a cover; 0-based labels.
    pub fn parse(text: &str) -> Result<(String, Poset)> {
        let mut name = String::new();
        let mut size: Option<usize> = None;
        let mut covers = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            match parts.next() {
                Some("poset") => {
                    name = parts
                        .next()
                        .ok_or_else(|| Error::Parse(format!("line {}: missing name", lineno + 1)))?
                        .to_string();
                    let sz = parts
                        .next()
                        .and_then(|s| s.strip_prefix("size="))
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| {
                            Error::Parse(format!("line {}: missing size=<k>", lineno + 1))
                        })?;
                    size = Some(sz);
                }
                Some("cover") => {
                    let x: usize = parts
                        .next()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| Error::Parse(format!("line {}: bad cover", lineno + 1)))?;
                    let y: usize = parts
                        .next()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| Error::Parse(format!("line {}: bad cover", lineno + 1)))?;
                    covers.push((x, y));
                }
                Some(other) => {
                    return Err(Error::Parse(format!(
                        "line {}: unknown directive '{other}'",
                        lineno + 1
                    )))
                }
                None => {}
            }
        }
        let size = size.ok_or_else(|| Error::Parse("missing poset header".into()))?;
        Ok((name, Poset::from_covers(size, &covers)?))
    }

    pub fn to_text(&self, name: &str) -> String {
        let mut out = format!("poset {name} size={}\n", self.size);
        for (x, y) in self.hasse().covers {
            out.push_str(&format!("cover {x} {y}\n"));
        }
        out
    }
}

impl fmt::Debug for Poset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Poset(size={}, covers={:?})",
            self.size,
            self.hasse().covers
        )
    }
}

/// An order-reversing map into `[q]`: `x < y` in the poset implies
/// `rank(x) > rank(y)`. Rank 1 is the position of the largest set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankFunction {
    ranks: Vec<usize>, // 1-based values
    q: usize,
}

impl RankFunction {
    pub fn new(poset: &Poset, ranks: Vec<usize>, q: usize) -> Result<Self> {
        if ranks.len() != poset.size() {
            return Err(Error::InvalidInput("rank vector length mismatch".into()));
        }
        if ranks.iter().any(|&r| r < 1 || r > q) {
            return Err(Error::InvalidInput("rank value out of [q]".into()));
        }
        for x in 0..poset.size() {
            for y in 0..poset.size() {
                if poset.lt(x, y) && ranks[x] <= ranks[y] {
                    return Err(Error::InvalidInput(format!(
                        "rank must strictly reverse the order: {x} < {y} but r({x}) <= r({y})"
                    )));
                }
            }
        }
        Ok(RankFunction { ranks, q })
    }

    pub fn rank(&self, x: usize) -> usize {
        self.ranks[x]
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }
}

/// All order-reversing maps from the poset into `[q]`, in lexicographic
/// order of the rank vector. Empty when `q < height`.
pub fn rank_functions(poset: &Poset, q: usize) -> Vec<RankFunction> {
    let mut out = Vec::new();
    let mut ranks = vec![0usize; poset.size()];
    fn rec(poset: &Poset, q: usize, ranks: &mut Vec<usize>, x: usize, out: &mut Vec<RankFunction>) {
        if x == poset.size() {
            out.push(RankFunction {
                ranks: ranks.clone(),
                q,
            });
            return;
        }
        'value: for r in 1..=q {
            for y in 0..x {
                if poset.lt(y, x) && ranks[y] <= r {
                    continue 'value;
                }
                if poset.lt(x, y) && r <= ranks[y] {
                    continue 'value;
                }
            }
            ranks[x] = r;
            rec(poset, q, ranks, x + 1, out);
            ranks[x] = 0;
        }
    }
    rec(poset, q, &mut ranks, 0, &mut out);
    out
}

/// A build order for a tree poset: a BFS ordering from the root in which
/// every later element has exactly one earlier Hasse neighbor, its parent.
#[derive(Clone, Debug)]
pub struct TreeOrder {
    pub order: Vec<usize>,
    pub parent: Vec<Option<usize>>,
}

pub fn tree_order(poset: &Poset, root: usize) -> Result<TreeOrder> {
    if !poset.is_tree() {
        return Err(Error::InvalidPoset(
            "tree order requires a tree poset".into(),
        ));
    }
    if root >= poset.size() {
        return Err(Error::InvalidInput(format!("root {root} out of range")));
    }
    let adj = poset.hasse_neighbors();
    let mut order = Vec::with_capacity(poset.size());
    let mut parent = vec![None; poset.size()];
    let mut seen = vec![false; poset.size()];
    let mut queue = VecDeque::from([root]);
    seen[root] = true;
    while let Some(x) = queue.pop_front() {
        order.push(x);
        for &y in &adj[x] {
            if !seen[y] {
                seen[y] = true;
                parent[y] = Some(x);
                queue.push_back(y);
            }
        }
    }
    Ok(TreeOrder { order, parent })
}

/// True iff assigning poset element `i` to `tuple[i]` is an injective induced
/// homomorphism: strict containment holds exactly where the poset order does.
/// Panics on duplicate masks.
pub fn is_induced_copy(tuple: &[SubsetMask], poset: &Poset) -> bool {
    assert_eq!(
        tuple.len(),
        poset.size(),
        "tuple length must match poset size"
    );
    for (i, &a) in tuple.iter().enumerate() {
        for &b in &tuple[i + 1..] {
            assert_ne!(a, b, "duplicate masks rejected");
        }
    }
    for x in 0..poset.size() {
        for y in 0..poset.size() {
            if x == y {
                continue;
            }
            let want = poset.lt(x, y);
            let have = tuple[x].is_proper_subset_of(tuple[y]);
            if want != have {
                return false;
            }
        }
    }
    true
}

/// The poset induced by inclusion on a nonempty family, with elements in the
/// family's sorted order.
pub fn induced_poset_of(fam: &Family) -> Result<Poset> {
    if fam.is_empty() {
        return Err(Error::InvalidInput(
            "induced poset of an empty family".into(),
        ));
    }
    let members = fam.members();
    let size = members.len();
    let mut pairs = Vec::new();
    for (i, &a) in members.iter().enumerate() {
        for (j, &b) in members.iter().enumerate() {
            if i != j && a.is_proper_subset_of(b) {
                pairs.push((i, j));
            }
        }
    }
    Poset::from_relation(size, &pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Family;

    fn m(elems: &[usize]) -> SubsetMask {
        SubsetMask::from_elements(elems)
    }

    #[test]
    fn hasse_of_chain_and_antichain() {
        assert_eq!(Poset::chain(3).hasse().covers, vec![(0, 1), (1, 2)]);
        assert!(Poset::antichain(3).hasse().covers.is_empty());
    }

    #[test]
    fn hasse_of_diamond_has_four_edges() {
        let diamond = induced_poset_of(&Family::complete(2)).unwrap();
        assert_eq!(diamond.hasse().covers.len(), 4);
        assert!(!diamond.is_tree());
        assert_eq!(diamond.height(), 3);
    }

    #[test]
    fn tree_recognition_and_height() {
        for k in 1..=4 {
            let c = Poset::chain(k);
            assert!(c.is_tree());
            assert_eq!(c.height(), k);
        }
        assert!(Poset::vee().is_tree());
        assert_eq!(Poset::vee().height(), 2);
        assert!(Poset::wedge().is_tree());
        assert!(Poset::zigzag3().is_tree());
        assert!(Poset::spider4().is_tree());
        assert_eq!(Poset::spider4().height(), 2);
        assert!(!Poset::antichain(3).is_tree());
    }

    #[test]
    fn tree_posets_have_size_minus_one_hasse_edges() {
        for p in [
            Poset::chain(4),
            Poset::vee(),
            Poset::spider4(),
            Poset::zigzag3(),
        ] {
            assert_eq!(p.hasse().covers.len(), p.size() - 1);
        }
    }

    #[test]
    fn tree_order_examples() {
        let two = Poset::chain(2);
        let ord = tree_order(&two, 0).unwrap();
        assert_eq!(ord.order, vec![0, 1]);
        assert_eq!(ord.parent[1], Some(0));

        let vee = Poset::vee();
        let ord = tree_order(&vee, 0).unwrap();
        assert_eq!(ord.order, vec![0, 1, 2]);
        assert_eq!((ord.parent[1], ord.parent[2]), (Some(0), Some(0)));

        let zig = Poset::zigzag3();
        let ord = tree_order(&zig, 1).unwrap();
        assert_eq!(ord.order, vec![1, 0, 2]);

        assert!(tree_order(&Poset::antichain(2), 0).is_err());
    }

    #[test]
    fn rank_function_counts() {
        assert_eq!(rank_functions(&Poset::chain(2), 3).len(), 3);
        let vee = rank_functions(&Poset::vee(), 2);
        assert_eq!(vee.len(), 1);
        assert_eq!(vee[0].ranks(), &[2, 1, 1]);
        assert_eq!(rank_functions(&Poset::chain(4), 4).len(), 1);
        assert!(rank_functions(&Poset::chain(3), 2).is_empty());
        // binom(q, k) strictly decreasing maps for chains
        for q in 1..=6 {
            for k in 1..=4usize.min(q) {
                let got = rank_functions(&Poset::chain(k), q).len() as u128;
                assert_eq!(got, crate::lattice::binomial(q, k));
            }
        }
    }

    #[test]
    fn rank_functions_are_order_reversing() {
        for p in [Poset::chain(3), Poset::vee(), Poset::spider4()] {
            for r in rank_functions(&p, 4) {
                for x in 0..p.size() {
                    for y in 0..p.size() {
                        if p.lt(x, y) {
                            assert!(r.rank(x) > r.rank(y));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn induced_copy_examples() {
        let two = Poset::chain(2);
        assert!(is_induced_copy(&[m(&[1]), m(&[1, 2])], &two));
        assert!(!is_induced_copy(&[m(&[1]), m(&[2])], &two));
        let vee = Poset::vee();
        // reversed containment is not an induced copy
        assert!(!is_induced_copy(&[m(&[1, 2]), m(&[1]), m(&[2])], &vee));
        assert!(is_induced_copy(
            &[SubsetMask::EMPTY, m(&[1]), m(&[2])],
            &vee
        ));
    }

    #[test]
    #[should_panic]
    fn induced_copy_rejects_duplicates() {
        is_induced_copy(&[m(&[1]), m(&[1])], &Poset::chain(2));
    }

    #[test]
    fn induced_poset_examples() {
        let anti = Family::new(3, vec![m(&[1]), m(&[2]), m(&[3])]).unwrap();
        assert!(induced_poset_of(&anti)
            .unwrap()
            .is_isomorphic(&Poset::antichain(3)));
        let chain = Family::new(3, vec![SubsetMask::EMPTY, m(&[1]), m(&[1, 2])]).unwrap();
        assert!(induced_poset_of(&chain)
            .unwrap()
            .is_isomorphic(&Poset::chain(3)));
    }

    #[test]
    fn transitive_closure_recovers_relation() {
        // Rebuilding from Hasse covers recovers the original poset.
        for p in [
            Poset::chain(4),
            Poset::vee(),
            Poset::spider4(),
            induced_poset_of(&Family::complete(2)).unwrap(),
            induced_poset_of(&Family::complete(3)).unwrap(),
        ] {
            let back = Poset::from_covers(p.size(), &p.hasse().covers).unwrap();
            assert_eq!(p, back);
        }
        // and for seeded random posets up to size 8
        for seed in 0..40u64 {
            let size = 2 + (crate::rng::draw(seed, 0) % 7) as usize;
            let mut covers = Vec::new();
            for x in 0..size {
                for y in x + 1..size {
                    if crate::rng::draw(seed, (x * size + y) as u64 + 1) % 3 == 0 {
                        covers.push((x, y));
                    }
                }
            }
            let p = Poset::from_covers(size, &covers).unwrap();
            let back = Poset::from_covers(p.size(), &p.hasse().covers).unwrap();
            assert_eq!(p, back, "seed={seed}");
        }
    }

    #[test]
    fn isomorphism_and_automorphisms() {
        assert!(Poset::wedge().is_isomorphic(&Poset::zigzag3()));
        assert!(!Poset::wedge().is_isomorphic(&Poset::vee()));
        assert_eq!(Poset::chain(3).automorphism_count(), 1);
        assert_eq!(Poset::vee().automorphism_count(), 2);
        assert_eq!(Poset::spider4().automorphism_count(), 6);
        assert_eq!(Poset::antichain(3).automorphism_count(), 6);
    }

    #[test]
    fn induced_copy_agrees_with_induced_poset_isomorphism() {
        let fams = [
            Family::new(4, vec![m(&[1]), m(&[1, 2]), m(&[1, 3])]).unwrap(),
            Family::new(4, vec![m(&[1]), m(&[2]), m(&[3])]).unwrap(),
            Family::new(4, vec![SubsetMask::EMPTY, m(&[2]), m(&[2, 4])]).unwrap(),
        ];
        for p in [
            Poset::chain(3),
            Poset::vee(),
            Poset::wedge(),
            Poset::antichain(3),
        ] {
            for fam in &fams {
                let tuple: Vec<_> = fam.members().to_vec();
                let direct = is_induced_copy(&tuple, &p);
                // any labeling: try all permutations of the tuple
                let mut any = false;
                let mut idx: Vec<usize> = (0..tuple.len()).collect();
                loop {
                    let arranged: Vec<_> = idx.iter().map(|&i| tuple[i]).collect();
                    if is_induced_copy(&arranged, &p) {
                        any = true;
                    }
                    if !next_permutation(&mut idx) {
                        break;
                    }
                }
                let iso = induced_poset_of(fam).unwrap().is_isomorphic(&p);
                assert_eq!(any, iso);
                if direct {
                    assert!(iso);
                }
            }
        }
    }

    fn next_permutation(idx: &mut [usize]) -> bool {
        let n = idx.len();
        if n < 2 {
            return false;
        }
        let mut i = n - 1;
        while i > 0 && idx[i - 1] >= idx[i] {
            i -= 1;
        }
        if i == 0 {
            return false;
        }
        let mut j = n - 1;
        while idx[j] <= idx[i - 1] {
            j -= 1;
        }
        idx.swap(i - 1, j);
        idx[i..].reverse();
        true
    }

    #[test]
    fn poset_file_roundtrip() {
        let text = "poset vee size=3\ncover 0 1\ncover 0 2\n";
        let (name, p) = Poset::parse(text).unwrap();
        assert_eq!(name, "vee");
        assert_eq!(p, Poset::vee());
        assert_eq!(p.to_text("vee"), text);
    }

    #[test]
    fn invalid_posets_rejected() {
        assert!(Poset::from_covers(0, &[]).is_err());
        assert!(Poset::from_covers(2, &[(0, 1), (1, 0)]).is_err());
        assert!(Poset::from_relation(3, &[(0, 1), (1, 2)]).is_err()); // not closed
    }
}
