//! Property tests for the structural invariants: containment relations,
//! family round trips, gappedness monotonicity, window placement, and the
//! hit-probability bound.

use proptest::prelude::*;

use treesat::chains::{hit_probability, relative_lubell_bound, Side};
use treesat::lattice::{
    comp_closure, compare, forbidden_down, middle_levels, Family, Relation, SubsetMask,
};

fn family_strategy(n: usize) -> impl Strategy<Value = Family> {
    prop::collection::vec(0u32..(1 << n), 0..20).prop_map(move |bits| {
        Family::new(n, bits.into_iter().map(SubsetMask::new).collect()).unwrap()
    })
}

proptest! {
    #[test]
    fn compare_is_coherent(a in 0u32..64, b in 0u32..64) {
        let (x, y) = (SubsetMask::new(a), SubsetMask::new(b));
        match compare(x, y) {
            Relation::Equal => prop_assert_eq!(x, y),
            Relation::Subset => {
                prop_assert!(x.is_proper_subset_of(y));
                prop_assert_eq!(compare(y, x), Relation::Superset);
            }
            Relation::Superset => {
                prop_assert!(y.is_proper_subset_of(x));
                prop_assert_eq!(compare(y, x), Relation::Subset);
            }
            Relation::Incomparable => {
                prop_assert!(!x.comparable(y));
                prop_assert_eq!(compare(y, x), Relation::Incomparable);
            }
        }
    }

    #[test]
    fn family_text_roundtrip(fam in family_strategy(5)) {
        let back = Family::parse(&fam.to_text()).unwrap();
        prop_assert_eq!(back, fam);
    }

    #[test]
    fn gappedness_is_downward_monotone(fam in family_strategy(6), l in 2usize..6) {
        if fam.is_l_gapped(l) {
            prop_assert!(fam.is_l_gapped(l - 1));
        }
    }

    #[test]
    fn middle_window_is_centered(n in 1usize..12, offset in 0usize..12) {
        let q = 1 + offset % (n + 1);
        let w = middle_levels(n, q).unwrap();
        prop_assert_eq!(w.len(), q);
        prop_assert!(w.hi <= n);
        prop_assert!(w.contains(n / 2) || w.contains((n + 1) / 2));
    }

    #[test]
    fn comp_closure_contains_its_seed(fam in family_strategy(4)) {
        let closure = comp_closure(&fam);
        for m in fam.iter() {
            prop_assert!(closure.contains(m));
        }
        for g in closure.iter() {
            prop_assert!(fam.iter().any(|m| g.comparable(m)));
        }
    }

    #[test]
    fn forbidden_down_members_are_below_and_comparable(
        f_bits in 0u32..32,
        fam in family_strategy(5),
    ) {
        let f = SubsetMask::new(f_bits);
        let s = Family::new(
            5,
            fam.iter().filter(|m| !f.is_subset_of(*m)).collect(),
        ).unwrap();
        let down = forbidden_down(f, &s).unwrap();
        for g in down.iter() {
            prop_assert!(g.is_proper_subset_of(f));
            prop_assert!(s.iter().any(|m| g.comparable(m)));
        }
    }

    #[test]
    fn hit_probability_within_unit_and_bound(f_bits in 0u32..64, picks in prop::collection::vec(0u32..64, 0..8)) {
        let n = 6;
        let f = SubsetMask::new(f_bits);
        let members: Vec<SubsetMask> = picks
            .into_iter()
            .map(|b| SubsetMask::new(b & f_bits)) // force below the anchor
            .collect();
        let w = Family::new(n, members).unwrap();
        let p = hit_probability(f, &w, Side::Lower).unwrap();
        prop_assert!(p >= num_rational::BigRational::from(num_bigint::BigInt::from(0)));
        prop_assert!(p <= num_rational::BigRational::from(num_bigint::BigInt::from(1)));
        let bound = relative_lubell_bound(f, &w, Side::Lower).unwrap();
        prop_assert!(p <= bound);
    }
}
