use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use symsearch_core::group::{CayleyTable, GroupAction, GroupElement, SamplerSpec};
use symsearch_core::invariance::{
    binom_tail, run_test, Decision, NeighborIndex, NoiseModel, RegressionDataset, TestConfig, TestKind, VariationBound,
};

/// `P(Binom(m, p) >= k)` for every `k`, as suffix sums of exact terms.
fn exact_tails(m: u64, p: &BigRational) -> Vec<BigRational> {
    let q = BigRational::one() - p;
    let mut p_pow = vec![BigRational::one()];
    let mut q_pow = vec![BigRational::one()];
    for j in 0..m as usize {
        p_pow.push(&p_pow[j] * p);
        q_pow.push(&q_pow[j] * &q);
    }
    let mut choose = BigInt::one();
    let mut terms = Vec::new();
    for j in 0..=m {
        terms.push(BigRational::from_integer(choose.clone()) * &p_pow[j as usize] * &q_pow[(m - j) as usize]);
        choose = choose * BigInt::from(m - j) / BigInt::from(j + 1);
    }
    let mut tails = vec![BigRational::zero(); m as usize + 2];
    for j in (0..=m as usize).rev() {
        tails[j] = &tails[j + 1] + &terms[j];
    }
    tails.truncate(m as usize + 1);
    tails
}

#[test]
fn binomial_tail_matches_rational_sums() {
    for tenths in 0..=10u64 {
        let p_exact = BigRational::new(BigInt::from(tenths), BigInt::from(10));
        let p = tenths as f64 / 10.0;
        for m in 0..=50u64 {
            for (k, exact) in exact_tails(m, &p_exact).iter().enumerate() {
                let want = exact.to_f64().unwrap();
                let got = binom_tail(m, k as u64, p).unwrap();
                let rel = if want == 0.0 { got.abs() } else { ((got - want) / want).abs() };
                assert!(rel <= 1e-12, "m={m} k={k} p={p}: {got} vs {want}");
            }
        }
    }
}

fn brute_nearest(rows: &[Vec<f64>], q: &[f64]) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, r) in rows.iter().enumerate() {
        let d: f64 = r.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
        if d < best.1 {
            best = (i, d);
        }
    }
    best.0
}

#[test]
fn neighbour_index_matches_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut rows: Vec<Vec<f64>> = (0..1000).map(|_| (0..5).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    // Duplicates exercise the smallest-index tie rule.
    for i in 0..20 {
        rows[500 + i] = rows[i].clone();
    }
    let data = RegressionDataset::from_rows(&rows, vec![0.0; 1000]).unwrap();
    let index = NeighborIndex::build(&data);
    let queries = rows.iter().cloned().chain((0..2000).map(|_| (0..5).map(|_| rng.random_range(-1.5..1.5)).collect()));
    for q in queries {
        assert_eq!(index.nearest(&q).unwrap().0, brute_nearest(&rows, &q));
    }
}

fn dataset(n: usize, seed: u64, invariant: bool) -> RegressionDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = rand_distr::Normal::new(0.0, 2.0).unwrap();
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| vec![rng.sample(normal), rng.sample(normal)])
        .collect();
    let y = rows
        .iter()
        .map(|r| {
            let f = if invariant { (-(r[0].abs() + r[1].abs())).exp() } else { (-r[0].abs()).exp() };
            f + rng.sample(rand_distr::Normal::new(0.0, 0.05).unwrap())
        })
        .collect();
    RegressionDataset::from_rows(&rows, y).unwrap()
}

fn configs(m: usize) -> [TestConfig; 2] {
    let bound = VariationBound::lipschitz(1.0);
    [
        TestConfig {
            kind: TestKind::Asymmetric {
                bound: bound.clone(),
                noise: NoiseModel::GaussianIid { sigma: 0.05 },
                thresholds: None,
            },
            m,
            alpha: 0.05,
        },
        TestConfig {
            kind: TestKind::Permutation {
                bound,
                q: 0.95,
                replicates: 30,
            },
            m,
            alpha: 0.05,
        },
    ]
}

fn c4() -> (Arc<CayleyTable>, GroupAction, SamplerSpec) {
    let t = Arc::new(CayleyTable::cyclic(4).unwrap());
    let act = GroupAction::cyclic_planar(&t, 2, (0, 1), 1).unwrap();
    let s = SamplerSpec::UniformOver((1..4).map(|i| GroupElement::finite(&t, i).unwrap()).collect());
    (t, act, s)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn outcomes_are_valid_and_reproducible(seed in any::<u64>(), invariant in any::<bool>(), n in 20usize..80) {
        let data = dataset(n, seed, invariant);
        let index = NeighborIndex::build(&data);
        let (_, act, sampler) = c4();
        for cfg in configs(n) {
            let a = run_test(&data, &index, &act, &sampler, &cfg, seed ^ 1).unwrap();
            let b = run_test(&data, &index, &act, &sampler, &cfg, seed ^ 1).unwrap();
            prop_assert!((0.0..=1.0).contains(&a.p_value));
            prop_assert_eq!(a.decision == Decision::Reject, a.p_value <= cfg.alpha);
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn tail_decreases_in_the_count(m in 1u64..400, k in 0u64..400, p in 0.0..1.0f64) {
        let k = k.min(m - 1);
        prop_assert!(binom_tail(m, k + 1, p).unwrap() <= binom_tail(m, k, p).unwrap());
    }

    #[test]
    fn noise_tail_is_a_probability(t in 1e-6..10.0f64, dt in 0.0..1.0f64, sigma in 0.0..2.0f64) {
        for noise in [NoiseModel::GaussianIid { sigma }, NoiseModel::GaussianExact { sigma }] {
            let (a, b) = (noise.p_t(t), noise.p_t(t + dt));
            prop_assert!((0.0..=1.0).contains(&a));
            prop_assert!(b <= a);
        }
    }

    #[test]
    fn variation_bound_is_a_premetric(x in prop::collection::vec(-5.0..5.0f64, 3), y in prop::collection::vec(-5.0..5.0f64, 3), e in 0.1..1.0f64) {
        let v = VariationBound::Known { scale: 2.0, exponent: e };
        prop_assert_eq!(v.eval(&x, &x), 0.0);
        prop_assert_eq!(v.eval(&x, &y), v.eval(&y, &x));
        prop_assert!(v.eval(&x, &y) >= 0.0);
    }
}
