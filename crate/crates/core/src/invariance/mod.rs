//! Hypothesis tests of `H0: f is G-invariant` from paired data.
//!
//! Both tests split into a draw phase (sampling group elements and row
//! indices from a seeded stream) and an evaluation phase. Batch testing reuses
//! one draw for several subgroups by keeping only the draws that fall in each.

mod asym;
mod batch;
mod binomial;
mod dataset;
mod kdtree;
mod perm;
mod stats;

pub use asym::{asym_var_test, draw_asym, AsymDraws};
pub use batch::batch_test;
pub use binomial::{binom_tail, ln_choose};
pub use dataset::{euclidean, squared_distance, RegressionDataset};
pub use kdtree::{brute_force_nearest, NeighborIndex};
pub use perm::{draw_perm, perm_var_test, PermDraws};
pub use stats::{quantile, NoiseModel};

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use crate::group::{GroupAction, GroupError, SamplerSpec};

#[derive(Debug, thiserror::Error)]
pub enum TestError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("invalid data: {0}")]
    InvalidData(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("threshold grid must be nonempty, positive and strictly increasing")]
    InvalidThresholds,
    #[error("variation bound was zero on {attempts} consecutive draws")]
    DegenerateMetric { attempts: usize },
    #[error("feature dimension {data} does not match action dimension {action}")]
    DimensionMismatch { data: usize, action: usize },
}

/// Bound on how much a function in the class can vary between two points.
#[derive(Clone)]
pub enum VariationBound {
    /// `L d(x, y)^alpha` with Euclidean `d`.
    Known { scale: f64, exponent: f64 },
    /// `d(x, y)^alpha`, known only up to a constant.
    OrderOnly { exponent: f64 },
    /// Caller-supplied symmetric, nonnegative function with `V(x, x) = 0`.
    Custom(Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>),
}

impl fmt::Debug for VariationBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Known { scale, exponent } => f
                .debug_struct("Known")
                .field("scale", scale)
                .field("exponent", exponent)
                .finish(),
            Self::OrderOnly { exponent } => f.debug_struct("OrderOnly").field("exponent", exponent).finish(),
            Self::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl VariationBound {
    pub fn lipschitz(scale: f64) -> Self {
        Self::Known {
            scale,
            exponent: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), TestError> {
        let exp_ok = |a: f64| a > 0.0 && a <= 1.0;
        match self {
            Self::Known { scale, exponent } if !(*scale > 0.0 && scale.is_finite()) || !exp_ok(*exponent) => Err(
                TestError::InvalidParameter("bound needs scale > 0 and exponent in (0, 1]".into()),
            ),
            Self::OrderOnly { exponent } if !exp_ok(*exponent) => {
                Err(TestError::InvalidParameter("exponent must lie in (0, 1]".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            Self::Known { scale, exponent } => scale * pow(euclidean(x, y), *exponent),
            Self::OrderOnly { exponent } => pow(euclidean(x, y), *exponent),
            Self::Custom(f) => f(x, y),
        }
    }
}

fn pow(d: f64, a: f64) -> f64 {
    if a == 1.0 {
        d
    } else {
        d.powf(a)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Decision {
    Accept,
    Reject,
}

impl Decision {
    /// `+1` for accept, `-1` for reject.
    pub fn sign(self) -> i8 {
        match self {
            Self::Accept => 1,
            Self::Reject => -1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TestWarning {
    /// Every threshold had `p_t >= 1`, so the p-value is 1.
    UninformativeThresholds,
    /// No draw fell in the tested group; accepted for lack of evidence.
    InsufficientSamples,
}

/// Per-test diagnostics.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Diagnostics {
    pub thresholds: Vec<f64>,
    /// `p_t` at each threshold.
    pub threshold_probs: Vec<f64>,
    /// Exceedance counts `N_t` at each threshold.
    pub counts: Vec<usize>,
    /// Binomial tail p-value at each threshold.
    pub threshold_p_values: Vec<f64>,
    /// The sampled statistics (`D` values, or the ratios `S` pooled across replicates).
    pub statistics: Vec<f64>,
    /// Quantile of the identity-only ratios.
    pub a0: Option<f64>,
    /// Quantile of each replicate.
    pub ak: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TestOutcome {
    pub p_value: f64,
    pub decision: Decision,
    pub alpha: f64,
    /// Number of draws the statistic was computed from.
    pub effective_m: usize,
    pub diagnostics: Diagnostics,
    pub warnings: Vec<TestWarning>,
}

impl TestOutcome {
    fn new(p_value: f64, alpha: f64, effective_m: usize, diagnostics: Diagnostics) -> Self {
        let p_value = p_value.clamp(0.0, 1.0);
        Self {
            p_value,
            decision: if p_value <= alpha { Decision::Reject } else { Decision::Accept },
            alpha,
            effective_m,
            diagnostics,
            warnings: Vec::new(),
        }
    }

    fn insufficient(alpha: f64) -> Self {
        let mut out = Self::new(1.0, alpha, 0, Diagnostics::default());
        out.warnings.push(TestWarning::InsufficientSamples);
        out
    }

    /// An outcome carrying only a p-value, for externally decided tests.
    pub fn from_p_value(p_value: f64, alpha: f64) -> Self {
        Self::new(p_value, alpha, 0, Diagnostics::default())
    }

    pub fn rejected(&self) -> bool {
        self.decision == Decision::Reject
    }

    /// Writes `replicate,t_or_k,statistic,count` rows.
    ///
    /// Threshold tests give one row per `t` (statistic = tail p-value, count =
    /// `N_t`). Permutation tests give `k = 0` for `A_0` and one row per replicate
    /// (count = 1 when `A_k <= A_0`).
    pub fn write_diagnostics_csv<W: Write>(&self, replicate: usize, out: &mut W) -> std::io::Result<()> {
        let d = &self.diagnostics;
        for ((t, p), c) in d.thresholds.iter().zip(&d.threshold_p_values).zip(&d.counts) {
            writeln!(out, "{replicate},{t},{p},{c}")?;
        }
        if let Some(a0) = d.a0 {
            writeln!(out, "{replicate},0,{a0},1")?;
            for (k, a) in d.ak.iter().enumerate() {
                writeln!(out, "{replicate},{},{a},{}", k + 1, u8::from(*a <= a0))?;
            }
        }
        Ok(())
    }
}

pub const DIAGNOSTICS_HEADER: &str = "replicate,t_or_k,statistic,count";

/// Which test to run and its parameters.
#[derive(Clone, Debug)]
pub enum TestKind {
    /// Nearest-neighbour exceedance counts against a binomial bound.
    Asymmetric {
        bound: VariationBound,
        noise: NoiseModel,
        /// `None` uses the noise model's default grid.
        thresholds: Option<Vec<f64>>,
    },
    /// Quantiles of random-pair ratios, compared against the identity.
    Permutation {
        bound: VariationBound,
        q: f64,
        replicates: usize,
    },
}

#[derive(Clone, Debug)]
pub struct TestConfig {
    pub kind: TestKind,
    /// Draws per test (per replicate for the permutation test).
    pub m: usize,
    pub alpha: f64,
}

impl TestConfig {
    pub fn validate(&self) -> Result<(), TestError> {
        if self.m == 0 {
            return Err(TestError::InvalidParameter("m must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(TestError::InvalidParameter("alpha must lie in (0, 1)".into()));
        }
        match &self.kind {
            TestKind::Asymmetric {
                bound,
                noise,
                thresholds,
            } => {
                bound.validate()?;
                noise.validate()?;
                if let Some(ts) = thresholds {
                    check_thresholds(ts)?;
                }
            }
            TestKind::Permutation { bound, q, replicates } => {
                bound.validate()?;
                if !(*q > 0.0 && *q <= 1.0) {
                    return Err(TestError::InvalidParameter("q must lie in (0, 1]".into()));
                }
                if *replicates == 0 {
                    return Err(TestError::InvalidParameter("need at least one replicate".into()));
                }
            }
        }
        Ok(())
    }

    pub fn with_alpha(&self, alpha: f64) -> Self {
        Self {
            alpha,
            ..self.clone()
        }
    }
}

pub(crate) fn check_thresholds(ts: &[f64]) -> Result<(), TestError> {
    if ts.is_empty() || ts.iter().any(|t| !(*t > 0.0)) || ts.windows(2).any(|w| w[1] <= w[0]) {
        return Err(TestError::InvalidThresholds);
    }
    Ok(())
}

/// Runs the configured test of invariance under the law `sampler`.
pub fn run_test(
    data: &RegressionDataset,
    index: &NeighborIndex,
    action: &GroupAction,
    sampler: &SamplerSpec,
    config: &TestConfig,
    seed: u64,
) -> Result<TestOutcome, TestError> {
    match &config.kind {
        TestKind::Asymmetric { .. } => asym_var_test(data, index, action, sampler, config, seed),
        TestKind::Permutation { .. } => perm_var_test(data, action, sampler, config, seed),
    }
}

pub(crate) fn check_dims(data: &RegressionDataset, action: &GroupAction) -> Result<(), TestError> {
    if data.dim() != action.dim() {
        return Err(TestError::DimensionMismatch {
            data: data.dim(),
            action: action.dim(),
        });
    }
    Ok(())
}
