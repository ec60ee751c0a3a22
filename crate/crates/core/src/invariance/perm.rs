use rand::Rng;
use rayon::prelude::*;

use super::stats::quantile_sorted;
use super::{
    check_dims, Diagnostics, RegressionDataset, TestConfig, TestError, TestKind, TestOutcome, VariationBound,
};
use crate::group::{GroupAction, GroupElement, SamplerSpec};
use crate::seed;

/// Ratio draws for the permutation variant.
///
/// Replicate `k` (1-based) uses the stream `seed / [k]`; the identity draws use `seed / [0]`.
#[derive(Clone, Debug)]
pub struct PermDraws {
    /// `replicates x m` sampled elements, replicate-major.
    pub elements: Vec<GroupElement>,
    /// `S = |Y_I - Y_J| / V(g . X_I, X_J)` for each entry of `elements`.
    pub ratios: Vec<f64>,
    /// Ratios with `g = e`.
    pub identity_ratios: Vec<f64>,
    pub m: usize,
}

fn draw_ratio<R: Rng>(
    rng: &mut R,
    data: &RegressionDataset,
    action: Option<&GroupAction>,
    sampler: Option<&SamplerSpec>,
    bound: &VariationBound,
    max_redraws: usize,
    moved: &mut [f64],
) -> Result<(Option<GroupElement>, f64), TestError> {
    let n = data.len();
    for _ in 0..=max_redraws {
        let g = sampler.map(|s| s.sample(rng));
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        let v = match (&g, action) {
            (Some(g), Some(a)) => {
                a.act_into(g, data.row(i), moved)?;
                bound.eval(moved, data.row(j))
            }
            _ => bound.eval(data.row(i), data.row(j)),
        };
        if v > 0.0 {
            return Ok((g, (data.response(i) - data.response(j)).abs() / v));
        }
    }
    Err(TestError::DegenerateMetric {
        attempts: max_redraws + 1,
    })
}

/// Draw phase of the permutation variant. Pairs with `V = 0` are redrawn up to
/// `replicates` times before giving up.
pub fn draw_perm(
    data: &RegressionDataset,
    action: &GroupAction,
    sampler: &SamplerSpec,
    bound: &VariationBound,
    m: usize,
    replicates: usize,
    seed: u64,
) -> Result<PermDraws, TestError> {
    check_dims(data, action)?;
    sampler.validate()?;
    let per_rep: Vec<(Vec<GroupElement>, Vec<f64>)> = (1..=replicates)
        .into_par_iter()
        .map(|k| {
            let mut rng = seed::stream(seed, &[k as u64]);
            let mut moved = vec![0.0; data.dim()];
            let mut elems = Vec::with_capacity(m);
            let mut ratios = Vec::with_capacity(m);
            for _ in 0..m {
                let (g, s) = draw_ratio(&mut rng, data, Some(action), Some(sampler), bound, replicates, &mut moved)?;
                elems.push(g.expect("sampled"));
                ratios.push(s);
            }
            Ok((elems, ratios))
        })
        .collect::<Result<_, TestError>>()?;
    let mut rng = seed::stream(seed, &[0]);
    let mut moved = vec![0.0; data.dim()];
    let identity_ratios = (0..m)
        .map(|_| draw_ratio(&mut rng, data, None, None, bound, replicates, &mut moved).map(|(_, s)| s))
        .collect::<Result<Vec<_>, _>>()?;
    let mut elements = Vec::with_capacity(m * replicates);
    let mut ratios = Vec::with_capacity(m * replicates);
    for (e, r) in per_rep {
        elements.extend(e);
        ratios.extend(r);
    }
    Ok(PermDraws {
        elements,
        ratios,
        identity_ratios,
        m,
    })
}

/// Evaluation phase: replicates with no kept draw are dropped.
pub(crate) fn evaluate_perm(
    draws: &PermDraws,
    keep: Option<&[bool]>,
    q: f64,
    alpha: f64,
) -> Result<TestOutcome, TestError> {
    let mut ident = draws.identity_ratios.clone();
    ident.sort_by(f64::total_cmp);
    let a0 = quantile_sorted(&ident, q);
    let mut ak = Vec::new();
    let mut pooled = Vec::new();
    for (k, chunk) in draws.ratios.chunks(draws.m).enumerate() {
        let mut kept: Vec<f64> = match keep {
            None => chunk.to_vec(),
            Some(mask) => chunk
                .iter()
                .zip(&mask[k * draws.m..(k + 1) * draws.m])
                .filter(|(_, &b)| b)
                .map(|(&s, _)| s)
                .collect(),
        };
        if kept.is_empty() {
            continue;
        }
        pooled.extend_from_slice(&kept);
        kept.sort_by(f64::total_cmp);
        ak.push(quantile_sorted(&kept, q));
    }
    if ak.is_empty() {
        return Ok(TestOutcome::insufficient(alpha));
    }
    let below = ak.iter().filter(|&&a| a <= a0).count();
    let p_value = below as f64 / ak.len() as f64;
    Ok(TestOutcome::new(
        p_value,
        alpha,
        pooled.len(),
        Diagnostics {
            statistics: pooled,
            a0: Some(a0),
            ak,
            ..Diagnostics::default()
        },
    ))
}

pub(crate) fn perm_parts(config: &TestConfig) -> Result<(&VariationBound, f64, usize), TestError> {
    match &config.kind {
        TestKind::Permutation { bound, q, replicates } => Ok((bound, *q, *replicates)),
        TestKind::Asymmetric { .. } => Err(TestError::InvalidParameter(
            "configuration is not a permutation test".into(),
        )),
    }
}

/// Permutation variant of the asymmetric variation test.
///
/// The p-value is the fraction of replicate quantiles `A_k` at or below the
/// identity quantile `A_0`.
pub fn perm_var_test(
    data: &RegressionDataset,
    action: &GroupAction,
    sampler: &SamplerSpec,
    config: &TestConfig,
    seed: u64,
) -> Result<TestOutcome, TestError> {
    config.validate()?;
    let (bound, q, replicates) = perm_parts(config)?;
    let draws = draw_perm(data, action, sampler, bound, config.m, replicates, seed)?;
    evaluate_perm(&draws, None, q, config.alpha)
}
