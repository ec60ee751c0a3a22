use super::asym::{asym_parts, evaluate_asym};
use super::perm::{evaluate_perm, perm_parts};
use super::{draw_asym, draw_perm, NeighborIndex, RegressionDataset, TestConfig, TestError, TestKind, TestOutcome};
use crate::group::{GroupAction, GroupDescriptor, SamplerSpec};

/// Tests several subgroups from one shared draw.
///
/// `sampler` should range over a group containing every node. Each node keeps
/// only the draws whose element it contains and is tested on that subsample;
/// a node with no kept draws is accepted with a warning.
pub fn batch_test(
    data: &RegressionDataset,
    index: &NeighborIndex,
    action: &GroupAction,
    sampler: &SamplerSpec,
    nodes: &[&GroupDescriptor],
    config: &TestConfig,
    seed: u64,
) -> Result<Vec<TestOutcome>, TestError> {
    config.validate()?;
    match &config.kind {
        TestKind::Asymmetric { .. } => {
            let (bound, noise, thresholds) = asym_parts(config)?;
            let draws = draw_asym(data, index, action, sampler, bound, config.m, seed)?;
            nodes
                .iter()
                .map(|h| {
                    let keep: Vec<bool> = draws.elements.iter().map(|g| h.contains(g)).collect();
                    evaluate_asym(&draws, Some(&keep), noise, &thresholds, config.alpha)
                })
                .collect()
        }
        TestKind::Permutation { .. } => {
            let (bound, q, replicates) = perm_parts(config)?;
            let draws = draw_perm(data, action, sampler, bound, config.m, replicates, seed)?;
            nodes
                .iter()
                .map(|h| {
                    let keep: Vec<bool> = draws.elements.iter().map(|g| h.contains(g)).collect();
                    evaluate_perm(&draws, Some(&keep), q, config.alpha)
                })
                .collect()
        }
    }
}
