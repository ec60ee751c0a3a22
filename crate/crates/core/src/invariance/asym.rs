use rand::Rng;

use super::{
    binom_tail, check_dims, check_thresholds, Diagnostics, NeighborIndex, NoiseModel, RegressionDataset,
    TestConfig, TestError, TestKind, TestOutcome, TestWarning, VariationBound,
};
use crate::group::{GroupAction, GroupElement, SamplerSpec};
use crate::seed;

/// Sampled triples `(g_j, I(j), J(j))` with `J(j)` the nearest row to `g_j . X_I(j)`,
/// and the statistics `D_j = |Y_I - Y_J| - V(g_j . X_I, X_J)`.
#[derive(Clone, Debug)]
pub struct AsymDraws {
    pub elements: Vec<GroupElement>,
    pub rows: Vec<usize>,
    pub neighbors: Vec<usize>,
    pub d_values: Vec<f64>,
}

/// Draw phase of the asymmetric variation test.
pub fn draw_asym(
    data: &RegressionDataset,
    index: &NeighborIndex,
    action: &GroupAction,
    sampler: &SamplerSpec,
    bound: &VariationBound,
    m: usize,
    seed: u64,
) -> Result<AsymDraws, TestError> {
    check_dims(data, action)?;
    sampler.validate()?;
    if index.len() != data.len() {
        return Err(TestError::InvalidData("neighbour index was built on other data".into()));
    }
    let mut rng = seed::stream(seed, &[]);
    let n = data.len();
    let mut moved = vec![0.0; data.dim()];
    let mut out = AsymDraws {
        elements: Vec::with_capacity(m),
        rows: Vec::with_capacity(m),
        neighbors: Vec::with_capacity(m),
        d_values: Vec::with_capacity(m),
    };
    for _ in 0..m {
        let g = sampler.sample(&mut rng);
        let i = rng.random_range(0..n);
        action.act_into(&g, data.row(i), &mut moved)?;
        let (j, _) = index.nearest(&moved).expect("nonempty index");
        let d = (data.response(i) - data.response(j)).abs() - bound.eval(&moved, data.row(j));
        out.elements.push(g);
        out.rows.push(i);
        out.neighbors.push(j);
        out.d_values.push(d);
    }
    Ok(out)
}

/// Evaluation phase over the draws with `keep[j]` set (all draws when `None`).
pub(crate) fn evaluate_asym(
    draws: &AsymDraws,
    keep: Option<&[bool]>,
    noise: &NoiseModel,
    thresholds: &[f64],
    alpha: f64,
) -> Result<TestOutcome, TestError> {
    let stats: Vec<f64> = match keep {
        None => draws.d_values.clone(),
        Some(k) => draws
            .d_values
            .iter()
            .zip(k)
            .filter(|(_, &kept)| kept)
            .map(|(&d, _)| d)
            .collect(),
    };
    let m = stats.len();
    if m == 0 {
        return Ok(TestOutcome::insufficient(alpha));
    }
    let probs: Vec<f64> = thresholds.iter().map(|&t| noise.p_t(t)).collect();
    let counts: Vec<usize> = thresholds
        .iter()
        .map(|&t| stats.iter().filter(|&&d| d >= t).count())
        .collect();
    let tails = counts
        .iter()
        .zip(&probs)
        .map(|(&c, &p)| binom_tail(m as u64, c as u64, p))
        .collect::<Result<Vec<f64>, _>>()?;
    let p_value = tails.iter().copied().fold(1.0, f64::min);
    let uninformative = probs.iter().all(|&p| p >= 1.0);
    let mut out = TestOutcome::new(
        p_value,
        alpha,
        m,
        Diagnostics {
            thresholds: thresholds.to_vec(),
            threshold_probs: probs,
            counts,
            threshold_p_values: tails,
            statistics: stats,
            ..Diagnostics::default()
        },
    );
    if uninformative {
        out.warnings.push(TestWarning::UninformativeThresholds);
    }
    Ok(out)
}

pub(crate) fn asym_parts(config: &TestConfig) -> Result<(&VariationBound, &NoiseModel, Vec<f64>), TestError> {
    match &config.kind {
        TestKind::Asymmetric {
            bound,
            noise,
            thresholds,
        } => {
            let ts = thresholds.clone().unwrap_or_else(|| noise.default_thresholds());
            check_thresholds(&ts)?;
            Ok((bound, noise, ts))
        }
        TestKind::Permutation { .. } => Err(TestError::InvalidParameter(
            "configuration is not an asymmetric variation test".into(),
        )),
    }
}

/// Asymmetric variation test of invariance under the law `sampler`.
///
/// The p-value is the smallest binomial tail `P(Binom(m, p_t) >= N_t)` over the
/// threshold grid.
pub fn asym_var_test(
    data: &RegressionDataset,
    index: &NeighborIndex,
    action: &GroupAction,
    sampler: &SamplerSpec,
    config: &TestConfig,
    seed: u64,
) -> Result<TestOutcome, TestError> {
    config.validate()?;
    let (bound, noise, thresholds) = asym_parts(config)?;
    let draws = draw_asym(data, index, action, sampler, bound, config.m, seed)?;
    evaluate_asym(&draws, None, noise, &thresholds, config.alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{CayleyTable, GroupDescriptor, RotationAxis};
    use crate::invariance::Decision;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};
    use std::sync::Arc;

    fn data(n: usize, f: impl Fn(&[f64]) -> f64, sigma: f64, seed: u64) -> RegressionDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xd = Normal::new(0.0, 2.0).unwrap();
        let rows: Vec<Vec<f64>> = (0..n).map(|_| vec![xd.sample(&mut rng), xd.sample(&mut rng)]).collect();
        let y = rows
            .iter()
            .map(|r| f(r) + if sigma > 0.0 { Normal::new(0.0, sigma).unwrap().sample(&mut rng) } else { 0.0 })
            .collect();
        RegressionDataset::from_rows(&rows, y).unwrap()
    }

    fn config(sigma: f64, scale: f64) -> TestConfig {
        TestConfig {
            kind: TestKind::Asymmetric {
                bound: VariationBound::lipschitz(scale),
                noise: NoiseModel::GaussianIid { sigma },
                thresholds: None,
            },
            m: 200,
            alpha: 0.05,
        }
    }

    fn c4_action() -> (Arc<CayleyTable>, GroupAction) {
        let c4 = Arc::new(CayleyTable::cyclic(4).unwrap());
        let act = GroupAction::cyclic_planar(&c4, 2, (0, 1), 1).unwrap();
        (c4, act)
    }

    #[test]
    fn noiseless_violation_gives_zero_p_value() {
        let d = data(100, |x| (-x[0].abs()).exp(), 0.0, 1);
        let idx = NeighborIndex::build(&d);
        let (c4, act) = c4_action();
        let sampler = SamplerSpec::UniformOver(vec![GroupElement::finite(&c4, 1).unwrap()]);
        let out = asym_var_test(&d, &idx, &act, &sampler, &config(0.0, 1.0 / std::f64::consts::E), 3).unwrap();
        assert!(out.diagnostics.counts[0] > 0);
        assert_eq!(out.p_value, 0.0);
        assert_eq!(out.decision, Decision::Reject);
    }

    #[test]
    fn exactly_invariant_noiseless_data_accepts() {
        let d = data(100, |x| (x[0] * x[0] + x[1] * x[1]).sqrt().sin(), 0.0, 2);
        let idx = NeighborIndex::build(&d);
        let about = RotationAxis::plane(0, 1).unwrap();
        let act = GroupAction::new(
            GroupDescriptor::circle(about.clone(), "S1"),
            2,
            crate::group::ActionKind::PlanarRotation { power: 1 },
        )
        .unwrap();
        let out = asym_var_test(&d, &idx, &act, &SamplerSpec::HaarCircle(about), &config(0.0, 1.0), 5).unwrap();
        assert!(out.diagnostics.statistics.iter().all(|&v| v <= 1e-12));
        assert_eq!(out.p_value, 1.0);
    }

    #[test]
    fn same_seed_same_outcome() {
        let d = data(80, |x| x[0], 0.1, 4);
        let idx = NeighborIndex::build(&d);
        let (c4, act) = c4_action();
        let sampler = SamplerSpec::UniformOver((1..4).map(|i| GroupElement::finite(&c4, i).unwrap()).collect());
        let a = asym_var_test(&d, &idx, &act, &sampler, &config(0.1, 1.0), 9).unwrap();
        let b = asym_var_test(&d, &idx, &act, &sampler, &config(0.1, 1.0), 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn uninformative_grid_warns() {
        let d = data(30, |x| x[0], 0.1, 4);
        let idx = NeighborIndex::build(&d);
        let (c4, act) = c4_action();
        let sampler = SamplerSpec::PointMass(GroupElement::finite(&c4, 0).unwrap());
        let mut cfg = config(1.0, 1.0);
        if let TestKind::Asymmetric { thresholds, .. } = &mut cfg.kind {
            *thresholds = Some(vec![1e-6, 1e-5]);
        }
        let out = asym_var_test(&d, &idx, &act, &sampler, &cfg, 1).unwrap();
        assert_eq!(out.p_value, 1.0);
        assert!(out.warnings.contains(&TestWarning::UninformativeThresholds));
        if let TestKind::Asymmetric { thresholds, .. } = &mut cfg.kind {
            *thresholds = Some(vec![]);
        }
        assert!(matches!(asym_var_test(&d, &idx, &act, &sampler, &cfg, 1), Err(TestError::InvalidThresholds)));
    }
}
