use std::collections::BTreeSet;
use std::sync::Arc;

use proptest::prelude::*;
use symsearch_core::group::CayleyTable;
use symsearch_core::lattice::{
    cyclic_chain_lattice, d4_lattice, full_subgroup_lattice, icosahedral_axes, klein_four_lattice,
    sl3_extended_lattice, so3_axes_lattice, Lattice,
};

/// Every subset of the table closed under products, by plain enumeration.
fn subgroups_by_subsets(t: &CayleyTable) -> Vec<BTreeSet<usize>> {
    let n = t.order();
    assert!(n <= 16);
    let mut out = Vec::new();
    for mask in 0u32..(1 << n) {
        if mask & (1 << t.identity()) == 0 {
            continue;
        }
        let has = |i: usize| mask & (1 << i) != 0;
        let closed = (0..n).filter(|&a| has(a)).all(|a| (0..n).filter(|&b| has(b)).all(|b| has(t.mul(a, b))));
        if closed {
            out.push((0..n).filter(|&i| has(i)).collect());
        }
    }
    out
}

/// Covers of set inclusion on `sets`, by definition.
fn inclusion_covers(sets: &[BTreeSet<usize>]) -> BTreeSet<(BTreeSet<usize>, BTreeSet<usize>)> {
    let lt = |a: &BTreeSet<usize>, b: &BTreeSet<usize>| a != b && a.is_subset(b);
    let mut out = BTreeSet::new();
    for a in sets {
        for b in sets {
            if lt(a, b) && !sets.iter().any(|c| lt(a, c) && lt(c, b)) {
                out.insert((a.clone(), b.clone()));
            }
        }
    }
    out
}

fn members(lat: &Lattice, id: usize) -> BTreeSet<usize> {
    lat.node(id).group.finite_members().expect("finite node").1.clone()
}

fn tables() -> Vec<CayleyTable> {
    let mut out: Vec<CayleyTable> = [1, 2, 3, 4, 6, 8, 9, 12, 16].iter().map(|&n| CayleyTable::cyclic(n).unwrap()).collect();
    for orders in [&[2, 2][..], &[2, 4], &[2, 2, 2], &[4, 4], &[2, 2, 4], &[2, 2, 2, 2], &[3, 3], &[2, 6]] {
        out.push(CayleyTable::abelian_product(orders).unwrap());
    }
    out.push(CayleyTable::dihedral4());
    out
}

fn check_lattice_laws(lat: &Lattice) {
    let n = lat.len();
    for a in 0..n {
        assert!(lat.leq(a, a));
        assert!(lat.leq(lat.bottom(), a) && lat.leq(a, lat.top()));
        for b in 0..n {
            if a != b {
                assert!(!(lat.leq(a, b) && lat.leq(b, a)), "antisymmetry {a} {b}");
            }
            for c in 0..n {
                if lat.leq(a, b) && lat.leq(b, c) {
                    assert!(lat.leq(a, c));
                }
            }
            let (m, j) = (lat.meet(a, b), lat.join(a, b));
            assert!(lat.leq(m, a) && lat.leq(m, b) && lat.leq(a, j) && lat.leq(b, j));
            for c in 0..n {
                if lat.leq(c, a) && lat.leq(c, b) {
                    assert!(lat.leq(c, m));
                }
                if lat.leq(a, c) && lat.leq(b, c) {
                    assert!(lat.leq(j, c));
                }
            }
            assert_eq!(lat.meet(a, lat.join(a, b)), a);
            assert_eq!(lat.join(a, lat.meet(a, b)), a);
        }
    }
    let lt = |a: usize, b: usize| a != b && lat.leq(a, b);
    let reduction: BTreeSet<(usize, usize)> = (0..n)
        .flat_map(|a| (0..n).map(move |b| (a, b)))
        .filter(|&(a, b)| lt(a, b) && !(0..n).any(|c| lt(a, c) && lt(c, b)))
        .collect();
    let covers: BTreeSet<(usize, usize)> = lat.covers().iter().copied().collect();
    assert_eq!(covers, reduction);
    for node in lat.nodes() {
        assert_eq!(node.height == 0, node.id == lat.bottom());
    }
    for &(lo, hi) in lat.covers() {
        assert!(lat.node(lo).height < lat.node(hi).height);
    }
    let levels = lat.enumerate_by_height();
    let mut seen: Vec<usize> = levels.iter().flatten().copied().collect();
    seen.sort_unstable();
    assert_eq!(seen, (0..n).collect::<Vec<_>>());
}

#[test]
fn brute_force_lattices_match_subset_enumeration() {
    for t in tables() {
        let t = Arc::new(t);
        let lat = full_subgroup_lattice(&t).unwrap();
        let expected = subgroups_by_subsets(&t);
        let got: BTreeSet<BTreeSet<usize>> = (0..lat.len()).map(|i| members(&lat, i)).collect();
        assert_eq!(got, expected.iter().cloned().collect::<BTreeSet<_>>(), "order {}", t.order());
        check_lattice_laws(&lat);
        let covers: BTreeSet<_> = lat.covers().iter().map(|&(a, b)| (members(&lat, a), members(&lat, b))).collect();
        assert_eq!(covers, inclusion_covers(&expected));
        for a in 0..lat.len() {
            for b in 0..lat.len() {
                let (ma, mb) = (members(&lat, a), members(&lat, b));
                assert_eq!(lat.leq(a, b), ma.is_subset(&mb));
                let inter: BTreeSet<usize> = ma.intersection(&mb).copied().collect();
                assert_eq!(members(&lat, lat.meet(a, b)), inter);
                let smallest = expected
                    .iter()
                    .filter(|s| ma.is_subset(s) && mb.is_subset(s))
                    .min_by_key(|s| s.len())
                    .unwrap();
                assert_eq!(&members(&lat, lat.join(a, b)), smallest);
            }
        }
    }
}

#[test]
fn d4_builder_matches_brute_force() {
    let d4 = d4_lattice().unwrap();
    let t = Arc::new(CayleyTable::dihedral4());
    let sets = subgroups_by_subsets(&t);
    assert_eq!(d4.len(), 10);
    let got: BTreeSet<BTreeSet<usize>> = (0..10).map(|i| members(&d4, i)).collect();
    assert_eq!(got, sets.iter().cloned().collect());
    let covers: BTreeSet<_> = d4.covers().iter().map(|&(a, b)| (members(&d4, a), members(&d4, b))).collect();
    assert_eq!(covers, inclusion_covers(&sets));
}

#[test]
fn builder_lattices_obey_the_laws() {
    let lats = [
        d4_lattice().unwrap(),
        klein_four_lattice().unwrap(),
        cyclic_chain_lattice(&[1, 2, 4, 8]).unwrap(),
        cyclic_chain_lattice(&[1, 3, 9]).unwrap(),
        so3_axes_lattice(&icosahedral_axes(), true).unwrap(),
        sl3_extended_lattice().unwrap(),
    ];
    for lat in &lats {
        check_lattice_laws(lat);
    }
    assert_eq!(lats[4].len(), 8);
    assert_eq!(lats[4].height(), 2);
    assert_eq!(lats[5].len(), 9);
}

#[test]
fn order_implies_membership_on_finite_lattices() {
    for t in tables() {
        let t = Arc::new(t);
        let lat = full_subgroup_lattice(&t).unwrap();
        for a in 0..lat.len() {
            for b in 0..lat.len() {
                if lat.leq(a, b) {
                    for g in lat.node(a).group.elements().unwrap() {
                        assert!(lat.node(b).group.contains(&g));
                    }
                }
            }
        }
    }
}

#[test]
fn text_round_trip_preserves_structure() {
    for lat in [d4_lattice().unwrap(), sl3_extended_lattice().unwrap(), klein_four_lattice().unwrap()] {
        let back = Lattice::from_text(&lat.to_text()).unwrap();
        assert_eq!(back.len(), lat.len());
        assert_eq!(back.covers(), lat.covers());
        for i in 0..lat.len() {
            assert_eq!(back.node(i).label, lat.node(i).label);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Frontier nodes lie outside the down-set, and everything strictly below them lies inside.
    #[test]
    fn frontier_definition(which in 0usize..10) {
        let lat = d4_lattice().unwrap();
        let f = lat.frontier(which).unwrap();
        for &h in &f {
            prop_assert!(!lat.leq(h, which));
            for c in 0..lat.len() {
                if c != h && lat.leq(c, h) {
                    prop_assert!(lat.leq(c, which));
                }
            }
        }
        if which == lat.top() {
            prop_assert!(f.is_empty());
        }
    }

    #[test]
    fn sublattice_above_keeps_the_order(which in 0usize..10) {
        let lat = d4_lattice().unwrap();
        let up = lat.sublattice_above(which).unwrap();
        let origin = up.origin();
        prop_assert_eq!(origin[up.bottom()], which);
        for a in 0..up.len() {
            for b in 0..up.len() {
                prop_assert_eq!(up.leq(a, b), lat.leq(origin[a], origin[b]));
            }
        }
    }
}
