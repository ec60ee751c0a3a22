use std::collections::BTreeSet;
use std::sync::Arc;

use proptest::prelude::*;
use symsearch_core::group::CayleyTable;
use symsearch_core::lattice::{
    cyclic_chain_lattice, d4_lattice, full_subgroup_lattice, icosahedral_axes, klein_four_lattice,
    sl3_extended_lattice, so3_axes_lattice, Lattice,
};
use symsearch_core::search::{
    estimate, Algorithm, NodeStatus, PerfectOracle, ScriptedTester, SearchConfig, SearchResult,
};

fn lattices() -> Vec<Lattice> {
    let mut out = vec![
        d4_lattice().unwrap(),
        klein_four_lattice().unwrap(),
        so3_axes_lattice(&icosahedral_axes(), true).unwrap(),
        sl3_extended_lattice().unwrap(),
        full_subgroup_lattice(&Arc::new(CayleyTable::abelian_product(&[2, 2, 2]).unwrap())).unwrap(),
        full_subgroup_lattice(&Arc::new(CayleyTable::cyclic(12).unwrap())).unwrap(),
    ];
    for orders in [&[1, 2][..], &[1, 2, 4], &[1, 2, 4, 8], &[1, 4, 8], &[1, 8]] {
        out.push(cyclic_chain_lattice(orders).unwrap());
    }
    out
}

const ALGORITHMS: [Algorithm; 3] = [Algorithm::Breadth, Algorithm::BreadthGreedy, Algorithm::Depth];

fn run(lat: &Lattice, alg: Algorithm, tester: &dyn symsearch_core::search::NodeTester) -> SearchResult {
    estimate(lat, &SearchConfig::new(alg, 0.05), tester).unwrap()
}

#[test]
fn perfect_oracle_recovers_every_node() {
    for lat in lattices() {
        for gmax in 0..lat.len() {
            for alg in ALGORITHMS {
                let res = run(&lat, alg, &PerfectOracle { gmax });
                assert_eq!(res.estimate, gmax, "{alg:?} on {} with gmax {}", lat.node(lat.top()).label, gmax);
                if alg == Algorithm::Depth {
                    assert!(res.depth <= lat.height());
                }
            }
        }
    }
}

#[test]
fn greedy_never_tests_more() {
    for lat in lattices() {
        for gmax in 0..lat.len() {
            let plain = run(&lat, Algorithm::Breadth, &PerfectOracle { gmax });
            let greedy = run(&lat, Algorithm::BreadthGreedy, &PerfectOracle { gmax });
            assert_eq!(plain.estimate, greedy.estimate);
            assert!(greedy.tests_performed <= plain.tests_performed);
            assert!(greedy.computation_units <= plain.computation_units);
        }
    }
}

fn check_result(lat: &Lattice, res: &SearchResult, rejects: &BTreeSet<usize>, alg: Algorithm) {
    let n = lat.len();
    let below_rejected = |h: usize| (0..n).any(|r| r != h && lat.leq(r, h) && res.statuses[r] == NodeStatus::Rejected);
    let mut units = 0;
    for h in 0..n {
        let tested = res.p_values[h].is_some();
        if tested {
            assert!(!below_rejected(h), "{alg:?} tested {h} above a rejection");
            units += lat.node(h).group.order().unwrap_or(0);
        }
        match res.statuses[h] {
            NodeStatus::Rejected => assert!(tested && rejects.contains(&h)),
            NodeStatus::Pruned => assert!(below_rejected(h)),
            NodeStatus::Accepted => assert!(h == lat.bottom() || tested),
            _ => {}
        }
    }
    assert_eq!(units, res.computation_units);
    assert_eq!(res.tests_performed, res.p_values.iter().flatten().count());
    for &a in &res.tilde {
        assert!(res.statuses[a].survives());
        for &b in &res.tilde {
            assert!(a == b || !lat.leq(a, b));
        }
    }
    if alg != Algorithm::Depth {
        let survivors: Vec<usize> = (0..n).filter(|&h| res.statuses[h].survives()).collect();
        let maxima: BTreeSet<usize> = survivors
            .iter()
            .copied()
            .filter(|&a| !survivors.iter().any(|&b| b != a && lat.leq(a, b)))
            .collect();
        assert_eq!(res.tilde.iter().copied().collect::<BTreeSet<_>>(), maxima);
        assert!(res.tilde.contains(&res.estimate) || res.tilde.iter().all(|&t| lat.leq(res.estimate, t)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn scripted_searches_are_sound(which in 0usize..11, mask in any::<u32>()) {
        let lat = &lattices()[which];
        let rejects: BTreeSet<usize> = (1..lat.len()).filter(|&i| mask & (1 << (i % 32)) != 0).collect();
        let tester = ScriptedTester::rejecting(rejects.iter().copied());
        for alg in ALGORITHMS {
            let res = run(lat, alg, &tester);
            check_result(lat, &res, &rejects, alg);
        }
    }
}
