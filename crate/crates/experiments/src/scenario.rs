//! Synthetic regression problems.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use symsearch_core::invariance::RegressionDataset;

use crate::ExperimentError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TargetFunction {
    /// `exp(-|x_1|)`.
    ExpAbsFirst,
    /// `sin(-|x|)`.
    SinNegNorm,
    /// `sin(-|x_3|)`.
    SinNegAbsThird,
    /// `sin(-|x_1|)`.
    SinNegAbsFirst,
}

impl TargetFunction {
    pub fn eval(self, x: &[f64]) -> f64 {
        match self {
            Self::ExpAbsFirst => (-x[0].abs()).exp(),
            Self::SinNegNorm => (-x.iter().map(|v| v * v).sum::<f64>().sqrt()).sin(),
            Self::SinNegAbsThird => (-x[2].abs()).sin(),
            Self::SinNegAbsFirst => (-x[0].abs()).sin(),
        }
    }
}

/// Centred Gaussian features with a diagonal covariance.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureLaw {
    pub variances: Vec<f64>,
}

impl FeatureLaw {
    pub fn isotropic(dim: usize, variance: f64) -> Self {
        Self {
            variances: vec![variance; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.variances.len()
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        self.variances
            .iter()
            .map(|v| Normal::new(0.0, v.sqrt()).expect("finite variance").sample(rng))
            .collect()
    }
}

/// Training and test laws for `Y = f(X) + e`, `e ~ N(0, sigma^2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioGenerator {
    pub name: String,
    pub target: TargetFunction,
    pub train: FeatureLaw,
    pub test: FeatureLaw,
    pub sigma: f64,
}

impl ScenarioGenerator {
    /// `exp(-|x_1|)` on `N(0, 4 I_d)` with noise `0.05`.
    pub fn exp_abs(dim: usize) -> Self {
        let law = FeatureLaw::isotropic(dim, 4.0);
        Self {
            name: format!("f{dim}"),
            target: TargetFunction::ExpAbsFirst,
            train: law.clone(),
            test: law,
            sigma: 0.05,
        }
    }

    /// The four three-dimensional estimator scenarios, `1..=4`, with noise `0.01`.
    pub fn estimator(id: u8) -> Result<Self, ExperimentError> {
        let iso = FeatureLaw::isotropic(3, 2.0);
        let narrow = FeatureLaw {
            variances: vec![0.1, 0.1, 2.0],
        };
        let (target, train) = match id {
            1 => (TargetFunction::SinNegNorm, iso.clone()),
            2 => (TargetFunction::SinNegNorm, narrow),
            3 => (TargetFunction::SinNegAbsThird, narrow),
            4 => (TargetFunction::SinNegAbsFirst, narrow),
            _ => return Err(ExperimentError::config(format!("unknown estimator scenario {id}"))),
        };
        Ok(Self {
            name: format!("scenario{id}"),
            target,
            train,
            test: iso,
            sigma: 0.01,
        })
    }

    /// Parses `f<d>` or `1`..`4` (also `scenario<k>`).
    pub fn by_name(name: &str) -> Result<Self, ExperimentError> {
        if let Some(d) = name.strip_prefix('f') {
            let dim: usize = d
                .parse()
                .map_err(|_| ExperimentError::config(format!("bad scenario '{name}'")))?;
            if dim < 2 {
                return Err(ExperimentError::config("scenario f<d> needs d >= 2"));
            }
            return Ok(Self::exp_abs(dim));
        }
        let id = name.strip_prefix("scenario").unwrap_or(name);
        match id.parse::<u8>() {
            Ok(k) => Self::estimator(k),
            Err(_) => Err(ExperimentError::config(format!("unknown scenario '{name}'"))),
        }
    }

    pub fn dim(&self) -> usize {
        self.train.dim()
    }

    fn draw<R: Rng>(&self, law: &FeatureLaw, n: usize, rng: &mut R) -> RegressionDataset {
        let noise = Normal::new(0.0, self.sigma).expect("finite sigma");
        let mut x = Vec::with_capacity(n * law.dim());
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let row = law.sample(rng);
            y.push(self.target.eval(&row) + noise.sample(rng));
            x.extend(row);
        }
        RegressionDataset::from_flat(x, law.dim(), y).expect("generated data are finite")
    }

    pub fn training<R: Rng>(&self, n: usize, rng: &mut R) -> RegressionDataset {
        self.draw(&self.train, n, rng)
    }

    pub fn testing<R: Rng>(&self, n: usize, rng: &mut R) -> RegressionDataset {
        self.draw(&self.test, n, rng)
    }
}
