use std::sync::Arc;

use nalgebra::Vector3;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use symsearch_core::group::{ActionKind, CayleyTable, GroupAction, GroupDescriptor, RotationAxis, SamplerSpec};
use symsearch_core::invariance::{NoiseModel, RegressionDataset, TestConfig, TestKind, VariationBound};
use symsearch_core::lattice::{cyclic_chain_lattice, sl3_extended_lattice};
use symsearch_core::regression::{
    symmetrized_estimator, Bandwidth, EstimatorVariant, KernelRegressor, Predictor, ProjectionMap,
};
use symsearch_core::search::{Algorithm, SearchConfig};

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

fn r3() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-4.0..4.0f64, 3).prop_filter("away from the origin", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-6)
}

fn matrix_action(group: GroupDescriptor) -> GroupAction {
    GroupAction::new(group, 3, ActionKind::MatrixMultiply).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn radial_projection_is_rotation_invariant(seed in any::<u64>(), x in r3()) {
        let g = SamplerSpec::HaarSO3.sample(&mut ChaCha8Rng::seed_from_u64(seed));
        let gx = matrix_action(GroupDescriptor::so3("SO(3)")).act(&g, &x).unwrap();
        prop_assert!(close(&ProjectionMap::Radial.apply(&gx), &ProjectionMap::Radial.apply(&x), 1e-9));
    }

    #[test]
    fn indicator_is_special_linear_invariant(seed in any::<u64>(), x in r3()) {
        let g = SamplerSpec::SpecialLinearGaussian { scale: 0.5 }.sample(&mut ChaCha8Rng::seed_from_u64(seed));
        let gx = matrix_action(GroupDescriptor::sl3("SL(3)")).act(&g, &x).unwrap();
        let p = ProjectionMap::NonzeroIndicator;
        prop_assert_eq!(p.apply(&gx), p.apply(&x));
        prop_assert_eq!(p.apply(&[0.0, 0.0, 0.0]), vec![0.0]);
    }

    #[test]
    fn colatitude_is_axis_rotation_invariant(seed in any::<u64>(), x in r3(), u in r3()) {
        let u = Vector3::new(u[0], u[1], u[2]).normalize();
        let about = RotationAxis::axis(u).unwrap();
        let g = SamplerSpec::HaarCircle(about.clone()).sample(&mut ChaCha8Rng::seed_from_u64(seed));
        let gx = matrix_action(GroupDescriptor::circle(about, "S1")).act(&g, &x).unwrap();
        let p = ProjectionMap::AxisColatitude(u);
        prop_assert!(close(&p.apply(&gx), &p.apply(&x), 1e-9));
    }

    #[test]
    fn planar_radius_is_planar_rotation_invariant(angle in 0.0..7.0f64, x in prop::collection::vec(-4.0..4.0f64, 4)) {
        let about = RotationAxis::plane(1, 3).unwrap();
        let act = GroupAction::new(GroupDescriptor::circle(about.clone(), "S1"), 4, ActionKind::PlanarRotation { power: 1 }).unwrap();
        let gx = act.act(&about.rotation(angle), &x).unwrap();
        let p = ProjectionMap::PlanarRadius(1, 3);
        prop_assert!(close(&p.apply(&gx), &p.apply(&x), 1e-9));
    }

    #[test]
    fn orbit_canonical_is_exactly_invariant(g in 0usize..8, x in prop::collection::vec(-4.0..4.0f64, 2)) {
        let d4 = Arc::new(CayleyTable::dihedral4());
        let act = GroupAction::dihedral4_plane(&d4).unwrap();
        let p = ProjectionMap::orbit_canonical(&act).unwrap();
        let elems = act.group().elements().unwrap();
        let gx = act.act(&elems[g], &x).unwrap();
        prop_assert_eq!(p.apply(&gx), p.apply(&x));
    }

    #[test]
    fn kernel_predictions_stay_in_range(
        seed in any::<u64>(),
        n in 2usize..40,
        q in prop::collection::vec(-50.0..50.0f64, 2),
        h in prop::option::of(0.001..5.0f64),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)]).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
        let (lo, hi) = y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        let data = RegressionDataset::from_rows(&rows, y).unwrap();
        let bw = h.map_or(Bandwidth::Auto, |h| Bandwidth::Fixed(vec![h, h]));
        let fit = KernelRegressor::fit(&data, &bw).unwrap();
        prop_assert!(fit.bandwidths().iter().all(|&b| b > 0.0));
        let v = fit.predict(&q);
        prop_assert!(v >= lo && v <= hi, "{} outside [{}, {}]", v, lo, hi);
    }
}

fn asym(sigma: f64, m: usize) -> TestConfig {
    TestConfig {
        kind: TestKind::Asymmetric {
            bound: VariationBound::lipschitz(1.0),
            noise: NoiseModel::GaussianIid { sigma },
            thresholds: None,
        },
        m,
        alpha: 0.05,
    }
}

fn sample_data(n: usize, seed: u64, f: impl Fn(&[f64]) -> f64, dim: usize) -> RegressionDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = rand_distr::Normal::new(0.0, 1.5).unwrap();
    let noise = rand_distr::Normal::new(0.0, 0.01).unwrap();
    let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| rng.sample(normal)).collect()).collect();
    let y = rows.iter().map(|r| f(r) + rng.sample(noise)).collect();
    RegressionDataset::from_rows(&rows, y).unwrap()
}

#[test]
fn symmetrized_predictor_is_invariant_to_its_estimate() {
    let lat = sl3_extended_lattice().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for seed in 0..4 {
        let data = sample_data(150, seed, |x| -(x.iter().map(|v| v * v).sum::<f64>()).sqrt().sin(), 3);
        let est = symmetrized_estimator(
            &data,
            &lat,
            &SearchConfig::new(Algorithm::Breadth, 0.05),
            &asym(0.01, 150),
            EstimatorVariant::FullData,
            &Bandwidth::Auto,
            None,
        )
        .unwrap();
        let action = lat.node_action(est.node).unwrap();
        let sampler = lat.node(est.node).group.default_sampler().unwrap();
        for _ in 0..50 {
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(-3.0..3.0)).collect();
            let gx = action.act(&sampler.sample(&mut rng), &x).unwrap();
            let (a, b) = (est.predict(&x), est.predict(&gx));
            assert!((a - b).abs() <= 1e-9, "{} at {}: {a} vs {b}", est.label, seed);
        }
    }
}

#[test]
fn finite_symmetrized_predictor_is_exactly_invariant() {
    let c4 = Arc::new(CayleyTable::cyclic(4).unwrap());
    let lat = cyclic_chain_lattice(&[1, 2, 4])
        .unwrap()
        .with_action(GroupAction::cyclic_planar(&c4, 2, (0, 1), 1).unwrap());
    let data = sample_data(200, 9, |x| (-(x[0].abs() + x[1].abs())).exp(), 2);
    let est = symmetrized_estimator(
        &data,
        &lat,
        &SearchConfig::new(Algorithm::Breadth, 0.05),
        &asym(0.01, 200),
        EstimatorVariant::FullData,
        &Bandwidth::Auto,
        None,
    )
    .unwrap();
    assert_eq!(est.label, "C4");
    let action = lat.node_action(est.node).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for g in lat.node(est.node).group.elements().unwrap() {
        for _ in 0..20 {
            let x = vec![rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
            assert_eq!(est.predict(&x), est.predict(&action.act(&g, &x).unwrap()));
        }
    }
}

#[test]
fn split_variant_uses_disjoint_halves() {
    let lat = sl3_extended_lattice().unwrap();
    for n in [11, 40] {
        let data = sample_data(n, 2, |x| x[0], 3);
        let est = symmetrized_estimator(
            &data,
            &lat,
            &SearchConfig::new(Algorithm::Breadth, 0.05),
            &asym(0.01, n),
            EstimatorVariant::SplitData,
            &Bandwidth::Auto,
            None,
        )
        .unwrap();
        assert_eq!(est.search_rows.len(), n / 2);
        assert_eq!(est.fit_rows.len(), n - n / 2);
        assert!(est.search_rows.iter().all(|r| !est.fit_rows.contains(r)));
    }
}
