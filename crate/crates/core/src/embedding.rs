//! The greedy tree-poset embedder: grows partial embeddings through a nested
//! list of q-marked chain views, honoring rank positions, induced-ness, and a
//! forbidden family Γ.
//!
//! The `m`-th element of the build order extends through the view at index
//! `|P| - m`, so the first element is placed in the smallest family and each
//! extension searches a larger one; certificates recorded for earlier edges
//! survive automatically under the nesting. Each yielded map is audited with
//! the induced-copy checker rather than trusted from the construction.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use serde_json::json;

use crate::chains::QMarkedView;
use crate::error::{Error, Result};
use crate::lattice::{is_in_central_slab, Family, SubsetMask};
use crate::poset::{is_induced_copy, rank_functions, tree_order, Poset, RankFunction};

/// Membership test for a forbidden collection Γ over images of partial
/// embeddings. Images are passed sorted ascending and deduplicated.
pub trait Forbidden {
    fn contains(&self, image: &[SubsetMask]) -> bool;
}

/// The empty forbidden family.
pub struct NoForbidden;

impl Forbidden for NoForbidden {
    fn contains(&self, _image: &[SubsetMask]) -> bool {
        false
    }
}

/// An explicit forbidden family: a finite list of sets, optionally taken
/// together with everything above them.
pub struct ExplicitForbidden {
    exact: BTreeSet<Vec<SubsetMask>>,
    upward_bases: Vec<Vec<SubsetMask>>,
}

impl ExplicitForbidden {
    pub fn exact(sets: Vec<Vec<SubsetMask>>) -> Self {
        let exact = sets.into_iter().map(sorted).collect();
        ExplicitForbidden {
            exact,
            upward_bases: Vec::new(),
        }
    }

    /// Γ = all supersets of any base (including the bases themselves).
    pub fn upward_closure(bases: Vec<Vec<SubsetMask>>) -> Self {
        ExplicitForbidden {
            exact: BTreeSet::new(),
            upward_bases: bases.into_iter().map(sorted).collect(),
        }
    }
}

fn sorted(mut v: Vec<SubsetMask>) -> Vec<SubsetMask> {
    v.sort_unstable();
    v.dedup();
    v
}

impl Forbidden for ExplicitForbidden {
    fn contains(&self, image: &[SubsetMask]) -> bool {
        if self.exact.contains(image) {
            return true;
        }
        self.upward_bases
            .iter()
            .any(|base| base.iter().all(|m| image.contains(m)))
    }
}

/// Checks the two bounded-family properties by enumeration: no singleton of
/// `fam` lies in Γ, and every `D ⊆ fam` with `|D| <= depth` outside Γ has a
/// one-step extension frontier smaller than `gamma * n^ell`.
pub fn check_bounded<G: Forbidden>(
    gamma_fam: &G,
    fam: &Family,
    gamma: &BigRational,
    ell: usize,
    depth: usize,
) -> Result<bool> {
    const FRONTIER_ENUM_CAP: u128 = 2_000_000;
    let members = fam.members();
    for &f in members {
        if gamma_fam.contains(&[f]) {
            return Ok(false);
        }
    }
    let mut total: u128 = 0;
    for d in 0..=depth {
        total += crate::lattice::binomial(members.len(), d);
    }
    if total > FRONTIER_ENUM_CAP {
        return Err(Error::CapExceeded {
            what: "bounded-family frontier enumeration",
            size: total.min(usize::MAX as u128) as usize,
            cap: FRONTIER_ENUM_CAP as usize,
        });
    }
    let n_pow = BigRational::from(BigInt::from(fam.n() as u64).pow(ell as u32));
    let budget = gamma * n_pow;
    let mut stack: Vec<usize> = Vec::new();
    fn rec<G: Forbidden>(
        gamma_fam: &G,
        members: &[SubsetMask],
        stack: &mut Vec<usize>,
        start: usize,
        depth_left: usize,
        budget: &BigRational,
    ) -> bool {
        let image: Vec<SubsetMask> = stack.iter().map(|&i| members[i]).collect();
        if !gamma_fam.contains(&image) {
            let mut frontier: u64 = 0;
            for (i, &f) in members.iter().enumerate() {
                if stack.contains(&i) {
                    continue;
                }
                let mut ext = image.clone();
                ext.push(f);
                ext.sort_unstable();
                if gamma_fam.contains(&ext) {
                    frontier += 1;
                }
            }
            if &BigRational::from(BigInt::from(frontier)) >= budget {
                return false;
            }
        }
        if depth_left == 0 {
            return true;
        }
        for i in start..members.len() {
            stack.push(i);
            if !rec(gamma_fam, members, stack, i + 1, depth_left - 1, budget) {
                return false;
            }
            stack.pop();
        }
        true
    }
    Ok(rec(gamma_fam, members, &mut stack, 0, depth, &budget))
}

/// A partially built embedding: poset elements mapped so far.
#[derive(Clone, Debug, Default)]
pub struct PartialEmbedding {
    pub images: BTreeMap<usize, SubsetMask>,
}

impl PartialEmbedding {
    pub fn sorted_image(&self) -> Vec<SubsetMask> {
        sorted(self.images.values().copied().collect())
    }
}

fn unique_embedded_hasse_neighbor(
    poset: &Poset,
    images: &BTreeMap<usize, SubsetMask>,
    x: usize,
) -> Result<usize> {
    let neighbors = &poset.hasse_neighbors()[x];
    let embedded: Vec<usize> = neighbors
        .iter()
        .copied()
        .filter(|z| images.contains_key(z))
        .collect();
    match embedded.as_slice() {
        [y] => Ok(*y),
        [] => Err(Error::InvalidInput(format!(
            "element {x} has no embedded neighbor to extend from"
        ))),
        _ => Err(Error::InvalidInput(format!(
            "element {x} has several embedded neighbors; not a tree build order"
        ))),
    }
}

/// Candidate images for the next element `x` together with one certifying
/// chain each: masks in position `rank(x)` of some q-chain of the view that
/// carries the parent's image at the parent's rank, minus the forbidden
/// neighborhood of the already-embedded elements not beyond the parent.
fn candidates_with_certs(
    poset: &Poset,
    rank: &RankFunction,
    images: &BTreeMap<usize, SubsetMask>,
    x: usize,
    view: &QMarkedView<'_>,
) -> Result<Vec<(SubsetMask, u64)>> {
    let y = unique_embedded_hasse_neighbor(poset, images, x)?;
    let fy = images[&y];
    let (ry, rx) = (rank.rank(y), rank.rank(x));
    let q = view.q();
    let n = view.n();
    let below = poset.lt(x, y);
    debug_assert!(below || poset.lt(y, x), "parent must be a Hasse neighbor");
    debug_assert!(if below { rx > ry } else { rx < ry });

    let mut found: BTreeMap<SubsetMask, u64> = BTreeMap::new();
    for &(chain, idx) in view.occurrences(fy) {
        let list = view.markers_on(chain);
        let t = list.len();
        if below {
            // enough markers above the parent, between, and below the child
            if idx < ry - 1 {
                continue;
            }
            let lo = idx + (rx - ry);
            let hi_excl = t.saturating_sub(q - rx);
            for jg in lo..hi_excl {
                found.entry(list[jg]).or_insert(chain);
            }
        } else {
            if t - 1 - idx < q - ry {
                continue;
            }
            let lo = rx - 1;
            let Some(hi_incl) = idx.checked_sub(ry - rx) else {
                continue;
            };
            for jg in lo..=hi_incl {
                if jg >= idx {
                    break;
                }
                found.entry(list[jg]).or_insert(chain);
            }
        }
    }

    // images of embedded elements other than the parent that must stay
    // incomparable to the child's image
    let blockers: Vec<SubsetMask> = images
        .iter()
        .filter(|&(&z, _)| {
            z != y
                && if below {
                    !poset.lt(y, z)
                } else {
                    !poset.lt(z, y)
                }
        })
        .map(|(_, &m)| m)
        .collect();

    Ok(found
        .into_iter()
        .filter(|&(g, _)| !(is_in_central_slab(g, n) && blockers.iter().any(|&b| g.comparable(b))))
        .collect())
}

/// Eligible images for the next element `x`, as a family.
pub fn candidate_set(
    poset: &Poset,
    rank: &RankFunction,
    phi: &PartialEmbedding,
    x: usize,
    view: &QMarkedView<'_>,
) -> Result<Family> {
    let cands = candidates_with_certs(poset, rank, &phi.images, x, view)?;
    Family::new(view.n(), cands.into_iter().map(|(g, _)| g).collect())
}

/// A completed embedding: the image of each poset element, plus one
/// certificate chain per tree edge.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Embedding {
    pub images: Vec<SubsetMask>,
    /// `(element, parent, chain rank)` per non-root element, in build order.
    pub certificates: Vec<(usize, usize, u64)>,
}

impl Embedding {
    pub fn sorted_image(&self) -> Vec<SubsetMask> {
        sorted(self.images.clone())
    }

    /// One JSON line: element-to-mask map plus certificate chain ranks.
    pub fn to_json_line(&self) -> String {
        let map: BTreeMap<String, u32> = self
            .images
            .iter()
            .enumerate()
            .map(|(e, m)| (e.to_string(), m.bits()))
            .collect();
        let certs: Vec<_> = self
            .certificates
            .iter()
            .map(|&(e, p, c)| json!({"element": e, "parent": p, "chain": c}))
            .collect();
        json!({"images": map, "certificates": certs}).to_string()
    }
}

fn validate_embed_inputs(
    poset: &Poset,
    rank: &RankFunction,
    views: &[QMarkedView<'_>],
    root: usize,
    f0: SubsetMask,
) -> Result<()> {
    if !poset.is_tree() {
        return Err(Error::InvalidPoset(
            "embedding requires a tree poset".into(),
        ));
    }
    if views.len() != poset.size() + 1 {
        return Err(Error::InvalidInput(format!(
            "nested view list must have |P| + 1 = {} entries, got {}",
            poset.size() + 1,
            views.len()
        )));
    }
    let q = rank.q();
    if views.iter().any(|v| v.q() != q) {
        return Err(Error::InvalidInput(
            "view strength differs from rank range".into(),
        ));
    }
    if rank.ranks().len() != poset.size() {
        return Err(Error::InvalidInput("rank function size mismatch".into()));
    }
    let top = views.last().unwrap();
    if top.eligible_spots(f0, rank.rank(root)).is_empty() {
        return Err(Error::InvalidInput(format!(
            "start mask {f0} is not in level {} of the innermost family",
            rank.rank(root)
        )));
    }
    Ok(())
}

/// Depth-first enumeration of complete embeddings rooted at `root` with
/// `phi(root) = f0`, following the candidate sets level by level and
/// filtering extensions whose image lands in Γ. Yields are audited as
/// injective induced homomorphisms.
pub fn embed_enumerate<G: Forbidden>(
    poset: &Poset,
    rank: &RankFunction,
    gamma: &G,
    views: &[QMarkedView<'_>],
    root: usize,
    f0: SubsetMask,
) -> Result<Vec<Embedding>> {
    embed_enumerate_limited(poset, rank, gamma, views, root, f0, usize::MAX)
}

pub fn embed_enumerate_limited<G: Forbidden>(
    poset: &Poset,
    rank: &RankFunction,
    gamma: &G,
    views: &[QMarkedView<'_>],
    root: usize,
    f0: SubsetMask,
    limit: usize,
) -> Result<Vec<Embedding>> {
    validate_embed_inputs(poset, rank, views, root, f0)?;
    if gamma.contains(&[f0]) {
        return Ok(Vec::new());
    }
    let order = tree_order(poset, root)?;
    let mut images: BTreeMap<usize, SubsetMask> = BTreeMap::new();
    images.insert(root, f0);
    let mut certs: Vec<(usize, usize, u64)> = Vec::new();
    let mut out = Vec::new();
    extend(
        poset,
        rank,
        gamma,
        views,
        &order.order,
        1,
        &mut images,
        &mut certs,
        &mut out,
        limit,
    )?;
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn extend<G: Forbidden>(
    poset: &Poset,
    rank: &RankFunction,
    gamma: &G,
    views: &[QMarkedView<'_>],
    order: &[usize],
    step: usize,
    images: &mut BTreeMap<usize, SubsetMask>,
    certs: &mut Vec<(usize, usize, u64)>,
    out: &mut Vec<Embedding>,
    limit: usize,
) -> Result<()> {
    if out.len() >= limit {
        return Ok(());
    }
    if step == order.len() {
        let tuple: Vec<SubsetMask> = (0..poset.size()).map(|e| images[&e]).collect();
        assert!(
            is_induced_copy(&tuple, poset),
            "embedder yielded a non-induced tuple"
        );
        out.push(Embedding {
            images: tuple,
            certificates: certs.clone(),
        });
        return Ok(());
    }
    let x = order[step];
    let view = &views[poset.size() - step];
    let cands = candidates_with_certs(poset, rank, images, x, view)?;
    let y = unique_embedded_hasse_neighbor(poset, images, x)?;
    for (g, chain) in cands {
        if images.values().any(|&m| m == g) {
            continue;
        }
        let mut image_set: Vec<SubsetMask> = images.values().copied().collect();
        image_set.push(g);
        image_set.sort_unstable();
        if gamma.contains(&image_set) {
            continue;
        }
        images.insert(x, g);
        certs.push((x, y, chain));
        extend(
            poset,
            rank,
            gamma,
            views,
            order,
            step + 1,
            images,
            certs,
            out,
            limit,
        )?;
        certs.pop();
        images.remove(&x);
        if out.len() >= limit {
            break;
        }
    }
    Ok(())
}

/// Census of the embedder over every root, rank function, and start mask.
#[derive(Debug)]
pub struct CensusEntry {
    pub root: usize,
    pub ranks: Vec<usize>,
    pub count: u64,
}

#[derive(Debug, Default)]
pub struct EmbedCensus {
    pub entries: Vec<CensusEntry>,
    pub max_per_choice: u64,
    pub total: u64,
    /// Distinct image sets found across all choices.
    pub images: BTreeSet<Vec<SubsetMask>>,
}

/// Runs `embed_enumerate` over all roots, all rank functions into `[q]`, and
/// all eligible start masks, reporting per-choice counts, their max, and
/// their sum. The independent (root, rank) search trees run concurrently and
/// are merged in choice order, so the census is deterministic.
pub fn embed_census<G: Forbidden + Sync>(
    poset: &Poset,
    q: usize,
    gamma: &G,
    views: &[QMarkedView<'_>],
) -> Result<EmbedCensus> {
    use rayon::prelude::*;

    let top = views
        .last()
        .ok_or_else(|| Error::InvalidInput("empty view list".into()))?;
    let mut choices = Vec::new();
    for root in 0..poset.size() {
        for rank in rank_functions(poset, q) {
            choices.push((root, rank));
        }
    }
    let per_choice: Vec<(CensusEntry, BTreeSet<Vec<SubsetMask>>)> = choices
        .into_par_iter()
        .map(
            |(root, rank)| -> Result<(CensusEntry, BTreeSet<Vec<SubsetMask>>)> {
                let mut count = 0u64;
                let mut images = BTreeSet::new();
                for f0 in top.level_set(rank.rank(root))?.iter() {
                    let found = embed_enumerate(poset, &rank, gamma, views, root, f0)?;
                    count += found.len() as u64;
                    for emb in found {
                        images.insert(emb.sorted_image());
                    }
                }
                Ok((
                    CensusEntry {
                        root,
                        ranks: rank.ranks().to_vec(),
                        count,
                    },
                    images,
                ))
            },
        )
        .collect::<Result<_>>()?;
    let mut census = EmbedCensus::default();
    for (entry, images) in per_choice {
        census.max_per_choice = census.max_per_choice.max(entry.count);
        census.total += entry.count;
        census.entries.push(entry);
        census.images.extend(images);
    }
    Ok(census)
}
