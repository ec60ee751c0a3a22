//! Regression on quotient spaces: projections, kernel smoothing, symmetrised
//! estimators, orbit averaging and prediction error.

mod kernel;
mod projection;

pub use kernel::{Bandwidth, KernelRegressor, BANDWIDTH_GRID};
pub use projection::{project, Projected, ProjectionMap, ZERO_TOL};

use std::io::Write;

use rayon::prelude::*;

use crate::group::{GroupAction, GroupElement, GroupError};
use crate::invariance::{RegressionDataset, TestConfig, TestError};
use crate::lattice::Lattice;
use crate::search::{estimate, InvarianceTester, SearchConfig, SearchError, SearchResult};

#[derive(Debug, thiserror::Error)]
pub enum RegressionError {
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Test(#[from] TestError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("bandwidths must be positive and one per dimension, got {0:?}")]
    InvalidBandwidth(Vec<f64>),
    #[error("invalid data: {0}")]
    InvalidData(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub trait Predictor: Sync {
    fn predict(&self, x: &[f64]) -> f64;
}

impl<F: Fn(&[f64]) -> f64 + Sync> Predictor for F {
    fn predict(&self, x: &[f64]) -> f64 {
        self(x)
    }
}

/// Mean squared prediction error over `test`.
pub fn mspe(predictor: &dyn Predictor, test: &RegressionDataset) -> f64 {
    let preds: Vec<f64> = (0..test.len())
        .into_par_iter()
        .map(|i| predictor.predict(test.row(i)))
        .collect();
    preds
        .iter()
        .zip(test.responses())
        .map(|(p, y)| (p - y) * (p - y))
        .sum::<f64>()
        / test.len() as f64
}

/// Writes `x_0,..,x_{d-1},prediction` rows with a header.
pub fn write_predictions_csv<W: Write>(
    predictor: &dyn Predictor,
    queries: &RegressionDataset,
    out: &mut W,
) -> std::io::Result<()> {
    let header: Vec<String> = (0..queries.dim()).map(|k| format!("x_{k}")).collect();
    writeln!(out, "{},prediction", header.join(","))?;
    for row in queries.rows() {
        let coords: Vec<String> = row.iter().map(f64::to_string).collect();
        writeln!(out, "{},{}", coords.join(","), predictor.predict(row))?;
    }
    Ok(())
}

/// How the data are split between the search and the fit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EstimatorVariant {
    /// Search and fit on all the data.
    FullData,
    /// Search on the first half (rounded down), fit on the rest.
    SplitData,
}

/// A kernel estimator fitted on the quotient by the estimated subgroup.
#[derive(Clone, Debug)]
pub struct SymmetrizedEstimator {
    pub node: usize,
    pub label: String,
    pub projection: ProjectionMap,
    pub regressor: KernelRegressor,
    pub search: SearchResult,
    /// Rows used by the search and by the fit.
    pub search_rows: Vec<usize>,
    pub fit_rows: Vec<usize>,
}

impl Predictor for SymmetrizedEstimator {
    fn predict(&self, x: &[f64]) -> f64 {
        self.regressor.predict(&self.projection.apply(x))
    }
}

impl SymmetrizedEstimator {
    /// Writes `node,label,bandwidths,train_size` with a header; bandwidths are `;`-separated.
    pub fn write_summary_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "node,label,bandwidths,train_size")?;
        let h: Vec<String> = self.regressor.bandwidths().iter().map(f64::to_string).collect();
        let label = if self.label.contains([',', '"']) {
            format!("\"{}\"", self.label.replace('"', "\"\""))
        } else {
            self.label.clone()
        };
        writeln!(out, "{},{label},{},{}", self.node, h.join(";"), self.regressor.train_size())
    }
}

/// Searches `lattice` for a symmetry of the data, projects by the estimate
/// and fits a kernel estimator on the quotient.
///
/// `projections` gives one map per node; by default each node uses
/// [`ProjectionMap::for_node`].
pub fn symmetrized_estimator(
    data: &RegressionDataset,
    lattice: &Lattice,
    search: &SearchConfig,
    test: &TestConfig,
    variant: EstimatorVariant,
    bandwidth: &Bandwidth,
    projections: Option<&[ProjectionMap]>,
) -> Result<SymmetrizedEstimator, RegressionError> {
    let n = data.len();
    let (search_rows, fit_rows): (Vec<usize>, Vec<usize>) = match variant {
        EstimatorVariant::FullData => ((0..n).collect(), (0..n).collect()),
        EstimatorVariant::SplitData => ((0..n / 2).collect(), (n / 2..n).collect()),
    };
    let search_data = data.subset(&search_rows)?;
    let fit_data = data.subset(&fit_rows)?;
    let tester = InvarianceTester::new(&search_data, test.clone(), search.seed);
    let result = estimate(lattice, search, &tester)?;
    let node = result.estimate;
    let projection = match projections {
        Some(maps) => maps
            .get(node)
            .cloned()
            .ok_or_else(|| RegressionError::InvalidData(format!("no projection for node {node}")))?,
        None => ProjectionMap::for_node(lattice, node)?,
    };
    let projected = project(&fit_data, &projection)?;
    let regressor = KernelRegressor::fit(&projected.data, bandwidth)?;
    Ok(SymmetrizedEstimator {
        node,
        label: lattice.node(node).label.clone(),
        projection,
        regressor,
        search: result,
        search_rows,
        fit_rows,
    })
}

/// Orbit average `x -> |G|^-1 sum_g f(g . x)` over a finite group.
pub struct FeatureAverage<P> {
    inner: P,
    action: GroupAction,
    elements: Vec<GroupElement>,
}

/// Averages `predictor` over the orbits of the finite group of `action`.
pub fn feature_average<P: Predictor>(predictor: P, action: &GroupAction) -> Result<FeatureAverage<P>, RegressionError> {
    if !action.group().is_finite() {
        return Err(RegressionError::Unsupported(format!(
            "feature averaging over the continuous group '{}'",
            action.group().label()
        )));
    }
    Ok(FeatureAverage {
        inner: predictor,
        elements: action.group().elements()?,
        action: action.clone(),
    })
}

impl<P: Predictor> Predictor for FeatureAverage<P> {
    fn predict(&self, x: &[f64]) -> f64 {
        let mut moved = vec![0.0; x.len()];
        let total: f64 = self
            .elements
            .iter()
            .map(|g| {
                self.action.act_into(g, x, &mut moved).expect("element of the action's group");
                self.inner.predict(&moved)
            })
            .sum();
        total / self.elements.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{CayleyTable, SamplerSpec};
    use crate::invariance::{NoiseModel, TestKind, VariationBound};
    use crate::lattice::{so3_axes_lattice, cyclic_chain_lattice};
    use crate::search::Algorithm;
    use nalgebra::{Rotation3, Vector3};
    use rand::Rng;
    use rand_distr::{Distribution, Normal};
    use std::sync::Arc;

    fn c4_action() -> GroupAction {
        let c4 = Arc::new(CayleyTable::cyclic(4).unwrap());
        GroupAction::cyclic_planar(&c4, 2, (0, 1), 1).unwrap()
    }

    #[test]
    fn mspe_identities() {
        let rows: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64]).collect();
        let d = RegressionDataset::from_rows(&rows, vec![3.0; 5]).unwrap();
        assert_eq!(mspe(&|_: &[f64]| 0.0, &d), 9.0);
        assert_eq!(mspe(&|_: &[f64]| 3.0, &d), 0.0);
        let y = vec![1.0, 4.0, 2.0, 8.0, 5.0];
        let d = RegressionDataset::from_rows(&rows, y.clone()).unwrap();
        let mean = y.iter().sum::<f64>() / 5.0;
        let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 5.0;
        assert!((mspe(&move |_: &[f64]| mean, &d) - var).abs() < 1e-12);
    }

    #[test]
    fn orbit_average_is_invariant() {
        let act = c4_action();
        let avg = feature_average(|x: &[f64]| x[0] * 3.0 + x[1] * x[1] * x[0], &act).unwrap();
        let elems = act.group().elements().unwrap();
        let x = [0.7, -1.3];
        for g in &elems {
            let gx = act.act(g, &x).unwrap();
            assert!((avg.predict(&gx) - avg.predict(&x)).abs() < 1e-12);
        }
        let inv = |x: &[f64]| x[0] * x[0] + x[1] * x[1];
        let again = feature_average(inv, &act).unwrap();
        assert!((again.predict(&x) - inv(&x)).abs() < 1e-12);
    }

    #[test]
    fn trivial_average_is_identity() {
        let c1 = Arc::new(CayleyTable::cyclic(1).unwrap());
        let act = GroupAction::cyclic_planar(&c1, 2, (0, 1), 1).unwrap();
        let f = |x: &[f64]| x[0] - 2.0 * x[1];
        assert_eq!(feature_average(f, &act).unwrap().predict(&[1.5, 0.25]), f(&[1.5, 0.25]));
    }

    #[test]
    fn continuous_average_unsupported() {
        let lat = so3_axes_lattice(&[Vector3::z()], true).unwrap();
        let act = lat.node_action(lat.top()).unwrap();
        assert!(matches!(feature_average(|_: &[f64]| 0.0, &act), Err(RegressionError::Unsupported(_))));
    }

    fn ball_data(n: usize, seed: u64) -> RegressionDataset {
        let mut rng = crate::seed::stream(seed, &[]);
        let nd = Normal::new(0.0, 2f64.sqrt()).unwrap();
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..3).map(|_| nd.sample(&mut rng)).collect()).collect();
        let y = rows
            .iter()
            .map(|r| (-(r.iter().map(|v| v * v).sum::<f64>()).sqrt()).sin() + 0.01 * rng.random::<f64>())
            .collect();
        RegressionDataset::from_rows(&rows, y).unwrap()
    }

    fn test_config() -> TestConfig {
        TestConfig {
            kind: TestKind::Asymmetric {
                bound: VariationBound::lipschitz(1.0),
                noise: NoiseModel::GaussianIid { sigma: 0.01 },
                thresholds: None,
            },
            m: 100,
            alpha: 0.05,
        }
    }

    #[test]
    fn radial_estimator_is_rotation_invariant() {
        let d = ball_data(60, 3);
        let lat = so3_axes_lattice(&[Vector3::z()], true).unwrap();
        let maps: Vec<ProjectionMap> = (0..lat.len())
            .map(|h| if h == lat.top() { ProjectionMap::Radial } else { ProjectionMap::Identity })
            .collect();
        let mut est = symmetrized_estimator(
            &d,
            &lat,
            &SearchConfig::new(Algorithm::Breadth, 0.05),
            &test_config(),
            EstimatorVariant::SplitData,
            &Bandwidth::Auto,
            Some(&maps),
        )
        .unwrap();
        assert_eq!(est.search_rows.len(), 30);
        assert_eq!(est.fit_rows, (30..60).collect::<Vec<_>>());
        est.projection = ProjectionMap::Radial;
        let mut rng = crate::seed::stream(5, &[]);
        let x = [0.3, -1.2, 0.8];
        for _ in 0..10 {
            let r = match SamplerSpec::HaarSO3.sample(&mut rng) {
                GroupElement::RotationMatrix(m) => m,
                _ => unreachable!(),
            };
            let gx = Rotation3::from_matrix_unchecked(r) * Vector3::from_column_slice(&x);
            let a = est.predict(gx.as_slice());
            let b = est.predict(&x);
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "{a} {b}");
        }
    }

    #[test]
    fn identity_estimate_matches_plain_lce() {
        let d = ball_data(40, 8);
        let lat = cyclic_chain_lattice(&[1, 2]).unwrap();
        let c2 = Arc::new(CayleyTable::cyclic(2).unwrap());
        let lat = lat.with_action(GroupAction::cyclic_planar(&c2, 3, (0, 1), 1).unwrap());
        let mut cfg = test_config();
        if let TestKind::Asymmetric { noise, .. } = &mut cfg.kind {
            *noise = NoiseModel::GaussianIid { sigma: 0.0 };
        }
        let est = symmetrized_estimator(
            &d,
            &lat,
            &SearchConfig::new(Algorithm::Breadth, 0.05),
            &cfg,
            EstimatorVariant::FullData,
            &Bandwidth::Auto,
            Some(&[ProjectionMap::Identity, ProjectionMap::Identity]),
        )
        .unwrap();
        let plain = KernelRegressor::fit(&d, &Bandwidth::Auto).unwrap();
        assert_eq!(est.regressor.bandwidths(), plain.bandwidths());
        let q = [0.1, 0.2, -0.4];
        assert_eq!(est.predict(&q), plain.predict(&q));
    }
}
