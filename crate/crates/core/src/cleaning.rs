//! Badness deciders, canonical witnesses, and the iterative cleaning process
//! producing nested q-strong marked-chain families whose survivors are
//! δ-robust with respect to the previous level.
//!
//! A marker `F` is `(i, δ)-lower bad` when some family `W` of sets below `F`
//! hits every q-chain that uses `F` in position `i`, while a uniform full
//! chain through `F` meets `W` with probability at most `δ`. Any such witness
//! can be projected onto the pool of markers strictly below `F` without
//! raising its measure or losing the hitting property, which makes the
//! existential definition decidable: the search here is an exact
//! branch-and-bound over that pool. The upper side is the image of the lower
//! side under complementation and is implemented through that involution.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chains::{
    build_strong_t, hit_probability, power_view, MarkedChainFamily, QMarkedView, Side,
};
use crate::error::{Error, Result};
use crate::lattice::{Family, SubsetMask};

/// Default cap on the witness candidate pool; the exact search aborts with a
/// diagnostic beyond it rather than answering approximately. The default
/// admits every pool that can arise for n <= 6; lower it when running large
/// ground sets with high strength parameters.
pub const DEFAULT_POOL_CAP: usize = 64;

/// A witness certifying that an anchor marker is bad at some position: a
/// side-consistent family hitting every relevant q-chain, with its exact
/// conditional chain-hit measure.
#[derive(Clone, Debug)]
pub struct Witness {
    pub members: Family,
    pub side: Side,
    pub measure: BigRational,
}

/// The constants driving the cleaning process for given `(epsilon, q, |P|)`:
/// the chain-classification threshold `Delta = 12|P| + q + 2`, the profile
/// constant `K = Delta q^2 (Delta/(Delta-2))^{|P|}`, and the largest `delta`
/// for which the process guarantees its size bound,
/// `min(1 / (2^(K+2) K), epsilon / (18 |P| 2^(K+1) K q))`.
#[derive(Clone, Debug)]
pub struct CleaningConstants {
    pub delta_step: u32,
    pub k_const: BigRational,
    pub delta_max: BigRational,
}

/// `K` is rational, so `2^K` is evaluated with the exponent rounded up; that
/// only shrinks `delta_max`, staying on the guaranteed side.
pub fn cleaning_constants(epsilon: &BigRational, q: usize, poset_size: usize) -> CleaningConstants {
    assert!(q >= 1 && poset_size >= 1);
    assert!(epsilon.is_positive() && *epsilon <= BigRational::one());
    let delta_step = (12 * poset_size + q + 2) as u32;
    let d = BigRational::from(BigInt::from(delta_step));
    let d_minus_2 = BigRational::from(BigInt::from(delta_step - 2));
    let mut pow = BigRational::one();
    for _ in 0..poset_size {
        pow *= &d / &d_minus_2;
    }
    let k_const = &d * BigRational::from(BigInt::from((q * q) as u64)) * pow;
    let k_ceil = k_const.ceil().to_integer();
    let k_ceil_u = u32::try_from(&k_ceil).expect("ceil(K) fits u32 at supported sizes");
    let two_pow = |e: u32| BigRational::from(BigInt::from(2u32).pow(e));
    let first = BigRational::one() / (two_pow(k_ceil_u + 2) * &k_const);
    let second = epsilon.clone()
        / (BigRational::from(BigInt::from(18 * poset_size as u64))
            * two_pow(k_ceil_u + 1)
            * &k_const
            * BigRational::from(BigInt::from(q as u64)));
    let delta_max = first.min(second);
    CleaningConstants {
        delta_step,
        k_const,
        delta_max,
    }
}

/// The hitting structure of a lower-side search: per eligible chain, the
/// markers strictly below the anchor, plus the number of those that may stay
/// outside the witness.
struct LowerInstance {
    pool: Vec<SubsetMask>,
    tails: Vec<Vec<SubsetMask>>,
    /// `q - i - 1`, or `None` when `i = q` (nothing below the anchor can hit).
    allowed_misses: Option<usize>,
}

fn lower_instance(view: &QMarkedView<'_>, f: SubsetMask, i: usize) -> Option<LowerInstance> {
    let spots = view.lower_tail_sets(f, i);
    if spots.is_empty() {
        return None;
    }
    let mut pool: Vec<SubsetMask> = spots.iter().flat_map(|(_, t)| t.iter().copied()).collect();
    pool.sort_unstable();
    pool.dedup();
    Some(LowerInstance {
        pool,
        tails: spots.into_iter().map(|(_, t)| t).collect(),
        allowed_misses: (view.q() - i).checked_sub(1),
    })
}

/// W hits every q-chain of M(F, i) iff on each eligible chain at most
/// `q - i - 1` tail markers stay outside W.
fn hits_all(inst: &LowerInstance, w: &[SubsetMask]) -> bool {
    let Some(allowed) = inst.allowed_misses else {
        return false;
    };
    inst.tails
        .iter()
        .all(|tail| tail.iter().filter(|m| !w.contains(m)).count() <= allowed)
}

type WitnessKey = (BigRational, usize, Vec<SubsetMask>);

fn witness_order_key(measure: &BigRational, members: &[SubsetMask]) -> WitnessKey {
    (measure.clone(), members.len(), members.to_vec())
}

/// Exact minimum-measure lower witness via branch-and-bound over the tail
/// pool; ties broken by cardinality and then lexicographically on the sorted
/// member list, realizing a canonical choice.
fn find_lower_witness_capped(
    view: &QMarkedView<'_>,
    f: SubsetMask,
    i: usize,
    delta: &BigRational,
    pool_cap: usize,
) -> Result<Option<Witness>> {
    assert!((1..=view.q()).contains(&i));
    let Some(inst) = lower_instance(view, f, i) else {
        return Ok(None); // M(F, i) empty: not bad by definition
    };
    if inst.allowed_misses.is_none() {
        return Ok(None);
    }
    if !delta.is_positive() {
        // a witness hits q-chains living on chains through the anchor, so
        // its measure is strictly positive
        return Ok(None);
    }
    if inst.pool.len() > pool_cap {
        return Err(Error::PoolCapExceeded {
            size: inst.pool.len(),
            cap: pool_cap,
        });
    }
    let n = view.n();
    let measure_of = |members: &[SubsetMask]| -> Result<BigRational> {
        let fam = Family::new(n, members.to_vec())?;
        hit_probability(f, &fam, Side::Lower)
    };

    struct Search<'s> {
        inst: &'s LowerInstance,
        delta: &'s BigRational,
        best: Option<(BigRational, Vec<SubsetMask>)>,
    }

    impl Search<'_> {
        fn feasible(&self, chosen: &[SubsetMask], next: usize) -> bool {
            let undecided = &self.inst.pool[next..];
            let allowed = self.inst.allowed_misses.unwrap();
            self.inst.tails.iter().all(|tail| {
                let missing = tail
                    .iter()
                    .filter(|m| !chosen.contains(m) && !undecided.contains(m))
                    .count();
                missing <= allowed
            })
        }

        fn consider(&mut self, measure: BigRational, chosen: &[SubsetMask]) {
            let better = match &self.best {
                None => true,
                Some((bm, bw)) => witness_order_key(&measure, chosen) < witness_order_key(bm, bw),
            };
            if better {
                self.best = Some((measure, chosen.to_vec()));
            }
        }
    }

    fn recurse(
        s: &mut Search<'_>,
        chosen: &mut Vec<SubsetMask>,
        next: usize,
        measure_of: &dyn Fn(&[SubsetMask]) -> Result<BigRational>,
    ) -> Result<()> {
        let measure = measure_of(chosen)?;
        if measure > *s.delta {
            return Ok(()); // measure is monotone under inclusion
        }
        if let Some((bm, bw)) = &s.best {
            if measure > *bm {
                return Ok(());
            }
            // an unfinished equal-measure branch needs at least one more
            // member, so it cannot beat the incumbent on cardinality
            if measure == *bm && chosen.len() >= bw.len() && !hits_all(s.inst, chosen) {
                return Ok(());
            }
        }
        if hits_all(s.inst, chosen) {
            // adding more members can only raise measure and cardinality
            s.consider(measure, chosen);
            return Ok(());
        }
        if next == s.inst.pool.len() || !s.feasible(chosen, next) {
            return Ok(());
        }
        let candidate = s.inst.pool[next];
        chosen.push(candidate);
        recurse(s, chosen, next + 1, measure_of)?;
        chosen.pop();
        recurse(s, chosen, next + 1, measure_of)
    }

    let mut search = Search {
        inst: &inst,
        delta,
        best: None,
    };
    recurse(&mut search, &mut Vec::new(), 0, &measure_of)?;
    Ok(search.best.map(|(measure, members)| Witness {
        members: Family::new(n, members).expect("pool members are valid"),
        side: Side::Lower,
        measure,
    }))
}

/// Minimum-measure witness at `(F, i)` on the given side if one of measure at
/// most `delta` exists. Upper-side searches run the lower-side search on the
/// complemented view at position `q + 1 - i`.
pub fn find_witness(
    f: SubsetMask,
    i: usize,
    delta: &BigRational,
    view: &QMarkedView<'_>,
    side: Side,
) -> Result<Option<Witness>> {
    find_witness_capped(f, i, delta, view, side, DEFAULT_POOL_CAP)
}

pub fn find_witness_capped(
    f: SubsetMask,
    i: usize,
    delta: &BigRational,
    view: &QMarkedView<'_>,
    side: Side,
    pool_cap: usize,
) -> Result<Option<Witness>> {
    match side {
        Side::Lower => find_lower_witness_capped(view, f, i, delta, pool_cap),
        Side::Upper => {
            let comp = view.base().complemented();
            let comp_view = power_view(&comp, view.q())?;
            let n = view.n();
            let mirrored = find_lower_witness_capped(
                &comp_view,
                f.complement(n),
                view.q() + 1 - i,
                delta,
                pool_cap,
            )?;
            Ok(mirrored.map(|w| Witness {
                members: w.members.complemented(),
                side: Side::Upper,
                measure: w.measure,
            }))
        }
    }
}

/// True iff `f` admits no witness of measure at most `delta` at any position
/// on either side.
pub fn is_delta_robust(f: SubsetMask, view: &QMarkedView<'_>, delta: &BigRational) -> Result<bool> {
    is_delta_robust_capped(f, view, delta, DEFAULT_POOL_CAP)
}

pub fn is_delta_robust_capped(
    f: SubsetMask,
    view: &QMarkedView<'_>,
    delta: &BigRational,
    pool_cap: usize,
) -> Result<bool> {
    let comp_base = view.base().complemented();
    let comp_view = power_view(&comp_base, view.q())?;
    let n = view.n();
    for i in 1..=view.q() {
        if find_lower_witness_capped(view, f, i, delta, pool_cap)?.is_some() {
            return Ok(false);
        }
        if find_lower_witness_capped(
            &comp_view,
            f.complement(n),
            view.q() + 1 - i,
            delta,
            pool_cap,
        )?
        .is_some()
        {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Why a chain was discarded wholesale at a cleaning step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChainDiscard {
    LowerHeavy,
    UpperHeavy,
    BothHeavy,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RemovedChain {
    pub chain: u64,
    pub reason: ChainDiscard,
    pub marker_count: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RemovedMember {
    pub chain: u64,
    pub mask: SubsetMask,
    /// The positions and sides at which the member was bad.
    pub bad_at: Vec<(usize, Side)>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StepLog {
    pub removed_chains: Vec<RemovedChain>,
    pub removed_members: Vec<RemovedMember>,
}

/// Parameters of a cleaning run; `delta` serialized as an exact fraction.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CleanParams {
    pub q: usize,
    #[serde(with = "rational_string")]
    pub delta: BigRational,
    pub delta_step: u32,
    pub steps: usize,
    pub pool_cap: usize,
}

pub(crate) mod rational_string {
    use num_rational::BigRational;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use std::str::FromStr;

    pub fn serialize<S: Serializer>(v: &BigRational, s: S) -> Result<S::Ok, S::Error> {
        v.to_string().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigRational, D::Error> {
        let text = String::deserialize(d)?;
        BigRational::from_str(&text).map_err(serde::de::Error::custom)
    }
}

/// The result of a cleaning run: the nested levels `T^0 ⊇ T^1 ⊇ ... ⊇ T^s`,
/// all q-strong, plus a per-step log accounting exactly for the removals.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CleaningTrace {
    pub params: CleanParams,
    pub levels: Vec<MarkedChainFamily>,
    pub steps: Vec<StepLog>,
}

impl CleaningTrace {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn final_level(&self) -> &MarkedChainFamily {
        self.levels.last().expect("at least the initial level")
    }

    /// Nestedness of consecutive levels.
    pub fn verify_nested(&self) -> bool {
        self.levels.windows(2).all(|w| w[1].is_nested_in(&w[0]))
    }

    pub fn verify_q_strong(&self) -> bool {
        self.levels.iter().all(|t| t.is_q_strong(self.params.q))
    }

    /// Every chain retained at step j kept at least a `(1 - 2/Delta)`
    /// fraction of its markers.
    pub fn verify_per_chain_shrink(&self) -> bool {
        let d = self.params.delta_step as u64;
        self.levels.windows(2).all(|w| {
            w[1].chains().all(|(chain, list)| {
                let prev = w[0].markers_on(chain).len() as u64;
                d * list.len() as u64 >= (d - 2) * prev
            })
        })
    }

    /// The removal log accounts exactly for the difference between
    /// consecutive levels.
    pub fn verify_log_consistency(&self) -> bool {
        for (j, log) in self.steps.iter().enumerate() {
            let prev = &self.levels[j];
            let next = &self.levels[j + 1];
            let mut expected: BTreeMap<u64, Vec<SubsetMask>> = BTreeMap::new();
            for (chain, list) in prev.chains() {
                expected.insert(chain, list.to_vec());
            }
            for rc in &log.removed_chains {
                if expected.remove(&rc.chain).map(|l| l.len()) != Some(rc.marker_count) {
                    return false;
                }
            }
            for rm in &log.removed_members {
                let Some(list) = expected.get_mut(&rm.chain) else {
                    return false;
                };
                let Some(pos) = list.iter().position(|&m| m == rm.mask) else {
                    return false;
                };
                list.remove(pos);
            }
            expected.retain(|_, l| !l.is_empty());
            let mut got: BTreeMap<u64, Vec<SubsetMask>> = BTreeMap::new();
            for (chain, list) in next.chains() {
                got.insert(chain, list.to_vec());
            }
            if expected != got {
                return false;
            }
        }
        true
    }
}

/// One cleaning step: classify chains by their share of bad markers, drop
/// heavy chains entirely, and drop bad markers from the rest.
///
/// Badness of a marker is a global property of the level (its witness pools
/// span all chains), so a marker found bad at any position is removed from
/// every retained chain; this is what makes every survivor δ-robust with
/// respect to the previous level.
fn clean_step(
    prev: &MarkedChainFamily,
    q: usize,
    delta: &BigRational,
    delta_step: u32,
    pool_cap: usize,
    step_index: usize,
) -> Result<(MarkedChainFamily, StepLog)> {
    let view = power_view(prev, q)?;
    let comp_base = prev.complemented();
    let comp_view = power_view(&comp_base, q)?;
    let n = prev.n();

    // Badness checks for distinct (F, i) are independent pure computations
    // and run concurrently; the discard phase below is a single-threaded
    // deterministic reduction over the sorted chain index.
    let per_mask: Vec<(SubsetMask, Vec<(usize, Side)>)> = view
        .mask_support()
        .into_par_iter()
        .map(|f| -> Result<(SubsetMask, Vec<(usize, Side)>)> {
            let mut positions = Vec::new();
            for i in 1..=q {
                if find_lower_witness_capped(&view, f, i, delta, pool_cap)?.is_some() {
                    positions.push((i, Side::Lower));
                }
                if find_lower_witness_capped(
                    &comp_view,
                    f.complement(n),
                    q + 1 - i,
                    delta,
                    pool_cap,
                )?
                .is_some()
                {
                    positions.push((i, Side::Upper));
                }
            }
            Ok((f, positions))
        })
        .collect::<Result<_>>()?;
    let bad_at: BTreeMap<SubsetMask, Vec<(usize, Side)>> = per_mask
        .into_iter()
        .filter(|(_, positions)| !positions.is_empty())
        .collect();

    let mut next: BTreeMap<u64, Vec<SubsetMask>> = BTreeMap::new();
    let mut log = StepLog {
        removed_chains: Vec::new(),
        removed_members: Vec::new(),
    };
    for (chain, list) in prev.chains() {
        let lower_bad = list
            .iter()
            .filter(|m| {
                bad_at
                    .get(m)
                    .is_some_and(|p| p.iter().any(|&(_, s)| s == Side::Lower))
            })
            .count();
        let upper_bad = list
            .iter()
            .filter(|m| {
                bad_at
                    .get(m)
                    .is_some_and(|p| p.iter().any(|&(_, s)| s == Side::Upper))
            })
            .count();
        let t = list.len();
        let heavy_lower = (delta_step as usize) * lower_bad > t;
        let heavy_upper = (delta_step as usize) * upper_bad > t;
        if heavy_lower || heavy_upper {
            let reason = match (heavy_lower, heavy_upper) {
                (true, true) => ChainDiscard::BothHeavy,
                (true, false) => ChainDiscard::LowerHeavy,
                _ => ChainDiscard::UpperHeavy,
            };
            log.removed_chains.push(RemovedChain {
                chain,
                reason,
                marker_count: t,
            });
            continue;
        }
        let mut kept = Vec::with_capacity(t);
        for &m in list {
            if let Some(positions) = bad_at.get(&m) {
                log.removed_members.push(RemovedMember {
                    chain,
                    mask: m,
                    bad_at: positions.clone(),
                });
            } else {
                kept.push(m);
            }
        }
        if kept.is_empty() {
            continue;
        }
        if kept.len() < q {
            return Err(Error::QStrengthLost {
                q,
                chain,
                step: step_index,
            });
        }
        next.insert(chain, kept);
    }
    Ok((MarkedChainFamily::new(n, next), log))
}

/// Runs the iterative cleaning process for `steps` rounds starting from a
/// q-strong family `t0`.
pub fn clean(
    t0: &MarkedChainFamily,
    q: usize,
    delta: &BigRational,
    delta_step: u32,
    steps: usize,
) -> Result<CleaningTrace> {
    clean_capped(t0, q, delta, delta_step, steps, DEFAULT_POOL_CAP)
}

pub fn clean_capped(
    t0: &MarkedChainFamily,
    q: usize,
    delta: &BigRational,
    delta_step: u32,
    steps: usize,
    pool_cap: usize,
) -> Result<CleaningTrace> {
    if steps == 0 {
        return Err(Error::InvalidInput(
            "cleaning needs at least one step".into(),
        ));
    }
    if delta.is_negative() {
        return Err(Error::InvalidInput("delta must be nonnegative".into()));
    }
    if delta_step < 3 {
        return Err(Error::InvalidInput("Delta must be at least 3".into()));
    }
    if !t0.is_q_strong(q) {
        let offending = t0
            .chains()
            .find(|(_, l)| l.len() < q)
            .map(|(c, _)| c)
            .unwrap_or_default();
        return Err(Error::NotQStrong {
            q,
            chain: offending,
        });
    }
    let mut levels = vec![t0.clone()];
    let mut logs = Vec::new();
    for j in 1..=steps {
        let (next, log) = clean_step(&levels[j - 1], q, delta, delta_step, pool_cap, j)?;
        levels.push(next);
        logs.push(log);
    }
    Ok(CleaningTrace {
        params: CleanParams {
            q,
            delta: delta.clone(),
            delta_step,
            steps,
            pool_cap,
        },
        levels,
        steps: logs,
    })
}

/// Summary of a full pipeline run over a family: the trace, per-level
/// incidence counts, and per-level level-set sizes.
#[derive(Debug)]
pub struct PipelineReport {
    pub trace: CleaningTrace,
    pub mu: BigRational,
    /// `mu - (q - 1)` when positive.
    pub epsilon: Option<BigRational>,
    pub incidence_counts: Vec<u64>,
    /// `level_set_sizes[j][i-1] = |L^i(T^j[q])|`
    pub level_set_sizes: Vec<Vec<usize>>,
}

impl PipelineReport {
    pub fn views(&self) -> Result<Vec<QMarkedView<'_>>> {
        self.trace
            .levels
            .iter()
            .map(|t| power_view(t, self.trace.params.q))
            .collect()
    }
}

/// Builds the strong family over `fam`, cleans it for `steps` rounds with
/// `Delta = 12 * steps + q + 2`, and reports level statistics. Requires the
/// family to live in the central slab.
pub fn clean_pipeline(
    fam: &Family,
    q: usize,
    delta: &BigRational,
    steps: usize,
) -> Result<PipelineReport> {
    clean_pipeline_capped(
        fam,
        q,
        delta,
        steps,
        crate::chains::DEFAULT_CHAIN_CAP,
        DEFAULT_POOL_CAP,
    )
}

pub fn clean_pipeline_capped(
    fam: &Family,
    q: usize,
    delta: &BigRational,
    steps: usize,
    chain_cap: usize,
    pool_cap: usize,
) -> Result<PipelineReport> {
    if let Some(bad) = fam
        .iter()
        .find(|&m| !crate::lattice::is_in_central_slab(m, fam.n()))
    {
        return Err(Error::SidePrecondition {
            what: "clean_pipeline: family must lie in the central slab".into(),
            member: bad.to_string(),
        });
    }
    let t0 = crate::chains::build_strong_t_with_cap(fam, q, chain_cap)?;
    let delta_step = (12 * steps + q + 2) as u32;
    let trace = clean_capped(&t0, q, delta, delta_step, steps, pool_cap)?;
    let mu = fam.lubell_weight();
    let qm1 = BigRational::from(BigInt::from(q as u64 - 1));
    let epsilon = if mu > qm1 { Some(&mu - &qm1) } else { None };
    let incidence_counts = trace.levels.iter().map(|t| t.incidence_count()).collect();
    let mut level_set_sizes = Vec::new();
    for t in &trace.levels {
        let view = power_view(t, q)?;
        let mut sizes = Vec::new();
        for i in 1..=q {
            sizes.push(view.level_set(i)?.len());
        }
        level_set_sizes.push(sizes);
    }
    Ok(PipelineReport {
        trace,
        mu,
        epsilon,
        incidence_counts,
        level_set_sizes,
    })
}

/// The greedy lower-bad profile of a chain discarded as lower-heavy at the
/// given step: alternating 1-based indices into the chain's initial marker
/// list of (bad member, member of its canonical witness among the next
/// `q - i` markers). Diagnostic only.
pub fn lower_bad_profile(
    trace: &CleaningTrace,
    step: usize,
    chain: u64,
    i: usize,
) -> Result<Vec<usize>> {
    if step == 0 || step > trace.steps.len() {
        return Err(Error::InvalidInput(format!("step {step} out of range")));
    }
    let log = &trace.steps[step - 1];
    let was_lower_heavy = log.removed_chains.iter().any(|rc| {
        rc.chain == chain
            && matches!(
                rc.reason,
                ChainDiscard::LowerHeavy | ChainDiscard::BothHeavy
            )
    });
    if !was_lower_heavy {
        return Err(Error::InvalidInput(format!(
            "chain {chain} was not discarded as lower-heavy at step {step}"
        )));
    }
    let q = trace.params.q;
    let delta = &trace.params.delta;
    let t0_list = trace.levels[0].markers_on(chain);
    let prev = &trace.levels[step - 1];
    let prev_list = prev.markers_on(chain);
    let view = power_view(prev, q)?;

    // 0-based indices into the T^0 list of the markers still present before
    // the step
    let alive: Vec<usize> = t0_list
        .iter()
        .enumerate()
        .filter(|(_, m)| prev_list.contains(m))
        .map(|(idx, _)| idx)
        .collect();

    // markers bad at position i on the lower side AND eligible at i on this
    // very chain (the profile walks this chain's q-chains)
    let mut bad_here: Vec<usize> = Vec::new(); // positions into `alive`
    for (a_pos, &t0_idx) in alive.iter().enumerate() {
        let f = t0_list[t0_idx];
        let on_chain_eligible = view.eligible_spots(f, i).iter().any(|&(c, _)| c == chain);
        if !on_chain_eligible {
            continue;
        }
        if find_witness_capped(f, i, delta, &view, Side::Lower, trace.params.pool_cap)?.is_some() {
            bad_here.push(a_pos);
        }
    }
    if bad_here.is_empty() {
        return Err(Error::InvalidInput(format!(
            "chain {chain} has no eligible lower-bad member at position {i}"
        )));
    }

    let mut profile = Vec::new();
    let mut cursor = 0usize; // minimum allowed position into `alive`
    loop {
        let Some(&a_pos) = bad_here.iter().find(|&&p| p >= cursor) else {
            break;
        };
        let f = t0_list[alive[a_pos]];
        let witness = find_witness_capped(f, i, delta, &view, Side::Lower, trace.params.pool_cap)?
            .expect("member was just determined bad");
        // a witness member must occur among the next q - i markers
        let next_slice = &alive[a_pos + 1..(a_pos + 1 + (q - i)).min(alive.len())];
        let Some(&hit_idx) = next_slice
            .iter()
            .find(|&&t0_idx| witness.members.contains(t0_list[t0_idx]))
        else {
            return Err(Error::InvalidInput(format!(
                "no witness member among the next {} markers below index {}",
                q - i,
                alive[a_pos] + 1
            )));
        };
        profile.push(alive[a_pos] + 1); // 1-based
        profile.push(hit_idx + 1);
        let hit_pos = alive.iter().position(|&x| x == hit_idx).expect("alive");
        cursor = hit_pos + 1;
    }
    Ok(profile)
}

/// For a fixed exclusion family `W1` (with no member above `F`), the minimal
/// `W2` completing the two-part hitting condition at positions `(i, s)`:
/// exactly the `s`-th members of the q-chains through `(F, i)` missed by the
/// lower forbidden neighborhood of `W1`. The case `i > s` mirrors through
/// complementation.
pub fn gamma_tail_deficit(
    f: SubsetMask,
    i: usize,
    s: usize,
    view: &QMarkedView<'_>,
    w1: &Family,
) -> Result<Family> {
    if i == s {
        return Err(Error::InvalidInput("positions i and s must differ".into()));
    }
    let n = view.n();
    if i < s {
        let dstar = crate::lattice::forbidden_down(f, w1)?;
        let mut members = Vec::new();
        for qchain in view.marked_at(f, i) {
            if qchain.members.iter().any(|m| dstar.contains(*m)) {
                continue;
            }
            members.push(qchain.members[s - 1]);
        }
        Family::new(n, members)
    } else {
        let comp_base = view.base().complemented();
        let comp_view = power_view(&comp_base, view.q())?;
        let mirrored = gamma_tail_deficit(
            f.complement(n),
            view.q() + 1 - i,
            view.q() + 1 - s,
            &comp_view,
            &w1.complemented(),
        )?;
        Ok(mirrored.complemented())
    }
}

/// The q-strong 1-marked family over `fam`; re-exported here because the
/// cleaning entry points consume it directly.
pub fn strong_family(fam: &Family, q: usize) -> Result<MarkedChainFamily> {
    build_strong_t(fam, q)
}
