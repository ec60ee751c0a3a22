//! Monte Carlo experiments over sample sizes and replicates.
//!
//! Replicate `r` at sample size `n` of experiment `e` draws everything from
//! seeds derived from `(master, hash(e), n, r)`, so output does not depend on
//! scheduling or on the number of worker threads.

use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use symsearch_core::group::{CayleyTable, GroupAction};
use symsearch_core::invariance::{run_test, NeighborIndex, NoiseModel, TestConfig, TestKind, VariationBound};
use symsearch_core::lattice::Lattice;
use symsearch_core::regression::{
    mspe, symmetrized_estimator, Bandwidth, EstimatorVariant, KernelRegressor,
};
use symsearch_core::search::{estimate, InvarianceTester, SearchConfig};
use symsearch_core::seed;

use crate::scenario::ScenarioGenerator;
use crate::ExperimentError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TestChoice {
    Asymmetric,
    Permutation,
}

impl TestChoice {
    pub fn name(self) -> &'static str {
        match self {
            Self::Asymmetric => "asym",
            Self::Permutation => "perm",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NoiseChoice {
    /// The closed-form Gaussian bound `(2 sigma / t) exp(-t^2 / 4 sigma^2) / sqrt(2 pi)`.
    Bound,
    /// The exact Gaussian difference tail `erfc(t / 2 sigma)`.
    Exact,
}

/// Parameters shared by every test an experiment runs.
#[derive(Clone, Debug, PartialEq)]
pub struct TestSettings {
    pub alpha: f64,
    /// Draws per test; `None` uses the sample size.
    pub m: Option<usize>,
    /// `None` uses the noise model's default grid.
    pub thresholds: Option<Vec<f64>>,
    pub sigma: f64,
    pub noise: NoiseChoice,
    pub lipschitz: f64,
    pub exponent: f64,
    pub q: f64,
    pub permutations: usize,
}

impl TestSettings {
    /// `alpha = 0.05`, `m = n`, the closed-form noise bound, `q = 0.95` with 100
    /// permutations. For `exp(-|x_1|)`: Lipschitz constant `1/e` and one
    /// threshold at `2 sigma`. Otherwise: Lipschitz constant 1 and the default
    /// threshold grid.
    pub fn for_scenario(s: &ScenarioGenerator) -> Self {
        let (lipschitz, thresholds) = match s.target {
            crate::scenario::TargetFunction::ExpAbsFirst => ((-1f64).exp(), Some(vec![2.0 * s.sigma])),
            _ => (1.0, None),
        };
        Self {
            alpha: 0.05,
            m: None,
            thresholds,
            sigma: s.sigma,
            noise: NoiseChoice::Bound,
            lipschitz,
            exponent: 1.0,
            q: 0.95,
            permutations: 100,
        }
    }

    pub fn config(&self, test: TestChoice, n: usize) -> TestConfig {
        let bound = VariationBound::Known {
            scale: self.lipschitz,
            exponent: self.exponent,
        };
        let kind = match test {
            TestChoice::Asymmetric => TestKind::Asymmetric {
                bound,
                noise: match self.noise {
                    NoiseChoice::Bound => NoiseModel::GaussianIid { sigma: self.sigma },
                    NoiseChoice::Exact => NoiseModel::GaussianExact { sigma: self.sigma },
                },
                thresholds: self.thresholds.clone(),
            },
            TestChoice::Permutation => TestKind::Permutation {
                bound,
                q: self.q,
                replicates: self.permutations,
            },
        };
        TestConfig {
            kind,
            m: self.m.unwrap_or(n),
            alpha: self.alpha,
        }
    }
}

fn replicate_seed(master: u64, experiment: &str, n: usize, rep: usize) -> u64 {
    seed::derive_seed(master, &[seed::label_hash(experiment), n as u64, rep as u64])
}

fn runtime<E: std::fmt::Display>(e: E) -> ExperimentError {
    ExperimentError::Runtime(e.to_string())
}

/// Runs `body` for every `(n, replicate)` in parallel, grouped by `n`.
fn per_replicate<T: Send>(
    sizes: &[usize],
    replicates: usize,
    body: impl Fn(usize, usize) -> Result<T, ExperimentError> + Sync,
) -> Result<Vec<(usize, Vec<T>)>, ExperimentError> {
    sizes
        .iter()
        .map(|&n| {
            let reps = (0..replicates)
                .into_par_iter()
                .map(|r| body(n, r))
                .collect::<Result<Vec<T>, _>>()?;
            Ok((n, reps))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct PowerRow {
    pub test: TestChoice,
    /// `invariant` for the half-turn action, `non-invariant` for the quarter-turn action.
    pub hypothesis: &'static str,
    pub n: usize,
    pub rejection_rate: f64,
    pub replicates: usize,
}

pub const POWER_HEADER: &str = "test,hypothesis,n,rejection_rate,replicates";

/// Rejection rates for `C_4` invariance of `exp(-|x_1|)` under two actions on
/// the `(x_1, x_2)` plane: the generator acting as a half turn (the function is
/// invariant) and as a quarter turn (it is not). Elements are drawn uniformly
/// from the non-identity elements.
pub fn power_curve(
    scenario: &ScenarioGenerator,
    sizes: &[usize],
    replicates: usize,
    tests: &[TestChoice],
    settings: &TestSettings,
    master: u64,
) -> Result<Vec<PowerRow>, ExperimentError> {
    let c4 = Arc::new(CayleyTable::cyclic(4).map_err(runtime)?);
    let dim = scenario.dim();
    let hypotheses = [
        ("invariant", GroupAction::cyclic_planar(&c4, dim, (0, 1), 2).map_err(runtime)?),
        ("non-invariant", GroupAction::cyclic_planar(&c4, dim, (0, 1), 1).map_err(runtime)?),
    ];
    let sampler = hypotheses[0].1.group().default_sampler().map_err(runtime)?;
    let results = per_replicate(sizes, replicates, |n, r| {
        let s = replicate_seed(master, "power-curve", n, r);
        let data = scenario.training(n, &mut seed::stream(s, &[0]));
        let index = NeighborIndex::build(&data);
        let mut rejected = Vec::with_capacity(tests.len() * 2);
        for (ti, &test) in tests.iter().enumerate() {
            for (hi, (_, action)) in hypotheses.iter().enumerate() {
                let out = run_test(
                    &data,
                    &index,
                    action,
                    &sampler,
                    &settings.config(test, n),
                    seed::derive_seed(s, &[1 + ti as u64, hi as u64]),
                )
                .map_err(runtime)?;
                rejected.push(out.rejected());
            }
        }
        Ok(rejected)
    })?;
    let mut rows = Vec::new();
    for (n, reps) in results {
        for (ti, &test) in tests.iter().enumerate() {
            for (hi, (name, _)) in hypotheses.iter().enumerate() {
                let count = reps.iter().filter(|r| r[ti * 2 + hi]).count();
                rows.push(PowerRow {
                    test,
                    hypothesis: name,
                    n,
                    rejection_rate: count as f64 / replicates as f64,
                    replicates,
                });
            }
        }
    }
    Ok(rows)
}

pub fn write_power_csv<W: Write>(rows: &[PowerRow], out: &mut W) -> std::io::Result<()> {
    writeln!(out, "{POWER_HEADER}")?;
    for r in rows {
        writeln!(out, "{},{},{},{},{}", r.test.name(), r.hypothesis, r.n, r.rejection_rate, r.replicates)?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct RecoveryRow {
    pub test: TestChoice,
    pub n: usize,
    /// Proportion of replicates estimating each node, by node id.
    pub proportions: Vec<f64>,
}

/// Proportions of each estimated node over replicates.
pub fn group_recovery(
    scenario: &ScenarioGenerator,
    lattice: &Lattice,
    sizes: &[usize],
    replicates: usize,
    tests: &[TestChoice],
    settings: &TestSettings,
    search: &SearchConfig,
    batch: bool,
    master: u64,
) -> Result<Vec<RecoveryRow>, ExperimentError> {
    let results = per_replicate(sizes, replicates, |n, r| {
        let s = replicate_seed(master, "group-recovery", n, r);
        let data = scenario.training(n, &mut seed::stream(s, &[0]));
        tests
            .iter()
            .enumerate()
            .map(|(ti, &test)| {
                let ts = seed::derive_seed(s, &[1 + ti as u64]);
                let tester = InvarianceTester::new(&data, settings.config(test, n), ts).batched(batch);
                let cfg = SearchConfig { seed: ts, ..search.clone() };
                estimate(lattice, &cfg, &tester).map(|res| res.estimate).map_err(runtime)
            })
            .collect::<Result<Vec<usize>, _>>()
    })?;
    let mut rows = Vec::new();
    for (n, reps) in results {
        for (ti, &test) in tests.iter().enumerate() {
            let mut counts = vec![0usize; lattice.len()];
            for r in &reps {
                counts[r[ti]] += 1;
            }
            rows.push(RecoveryRow {
                test,
                n,
                proportions: counts.iter().map(|&c| c as f64 / replicates as f64).collect(),
            });
        }
    }
    Ok(rows)
}

pub fn write_recovery_csv<W: Write>(lattice: &Lattice, rows: &[RecoveryRow], out: &mut W) -> std::io::Result<()> {
    let labels: Vec<String> = lattice
        .nodes()
        .iter()
        .map(|node| format!("prop_{}", csv_safe(&node.label)))
        .collect();
    writeln!(out, "test,n,{}", labels.join(","))?;
    for r in rows {
        let props: Vec<String> = r.proportions.iter().map(f64::to_string).collect();
        writeln!(out, "{},{},{}", r.test.name(), r.n, props.join(","))?;
    }
    Ok(())
}

/// Labels used in column names, with separators replaced.
pub fn csv_safe(label: &str) -> String {
    label.replace([',', '"', ' '], "_")
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimatorRow {
    pub scenario: String,
    pub n: usize,
    pub replicate: usize,
    pub mspe_a: f64,
    pub mspe_b: f64,
    pub mspe_c: f64,
    pub ghat_b: String,
    pub ghat_c: String,
}

pub const ESTIMATOR_HEADER: &str = "scenario,n,replicate,mspe_A,mspe_B,mspe_C,ghat_B,ghat_C";

/// Held-out prediction error of the plain kernel estimator (A) and of the
/// symmetrised estimators fitted on all the data (B) or on the half not used
/// by the search (C). The test set has `test_size` points, `n` by default.
pub fn estimator_comparison(
    scenario: &ScenarioGenerator,
    lattice: &Lattice,
    sizes: &[usize],
    replicates: usize,
    settings: &TestSettings,
    search: &SearchConfig,
    test_size: Option<usize>,
    master: u64,
) -> Result<Vec<EstimatorRow>, ExperimentError> {
    let results = per_replicate(sizes, replicates, |n, r| {
        let s = replicate_seed(master, "estimator-compare", n, r);
        let train = scenario.training(n, &mut seed::stream(s, &[0]));
        let test = scenario.testing(test_size.unwrap_or(n), &mut seed::stream(s, &[1]));
        let plain = KernelRegressor::fit(&train, &Bandwidth::Auto).map_err(runtime)?;
        let cfg = settings.config(TestChoice::Asymmetric, n);
        let fit = |variant, k: u64| {
            let sc = SearchConfig {
                seed: seed::derive_seed(s, &[k]),
                ..search.clone()
            };
            symmetrized_estimator(&train, lattice, &sc, &cfg, variant, &Bandwidth::Auto, None).map_err(runtime)
        };
        let b = fit(EstimatorVariant::FullData, 2)?;
        let c = fit(EstimatorVariant::SplitData, 3)?;
        Ok(EstimatorRow {
            scenario: scenario.name.clone(),
            n,
            replicate: r,
            mspe_a: mspe(&plain, &test),
            mspe_b: mspe(&b, &test),
            mspe_c: mspe(&c, &test),
            ghat_b: b.label,
            ghat_c: c.label,
        })
    })?;
    Ok(results.into_iter().flat_map(|(_, rows)| rows).collect())
}

pub fn write_estimator_csv<W: Write>(rows: &[EstimatorRow], out: &mut W) -> std::io::Result<()> {
    writeln!(out, "{ESTIMATOR_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.scenario,
            r.n,
            r.replicate,
            r.mspe_a,
            r.mspe_b,
            r.mspe_c,
            csv_safe(&r.ghat_b),
            csv_safe(&r.ghat_c)
        )?;
    }
    Ok(())
}

/// Per-`n` means of the three errors: `scenario,n,mean_A,mean_B,mean_C`.
pub fn estimator_means(rows: &[EstimatorRow]) -> Vec<(String, usize, [f64; 3])> {
    let mut out: Vec<(String, usize, [f64; 3], usize)> = Vec::new();
    for r in rows {
        match out.iter_mut().find(|(s, n, ..)| *s == r.scenario && *n == r.n) {
            Some(entry) => {
                entry.2[0] += r.mspe_a;
                entry.2[1] += r.mspe_b;
                entry.2[2] += r.mspe_c;
                entry.3 += 1;
            }
            None => out.push((r.scenario.clone(), r.n, [r.mspe_a, r.mspe_b, r.mspe_c], 1)),
        }
    }
    out.into_iter()
        .map(|(s, n, sums, k)| (s, n, sums.map(|v| v / k as f64)))
        .collect()
}

pub fn write_estimator_means_csv<W: Write>(rows: &[EstimatorRow], out: &mut W) -> std::io::Result<()> {
    writeln!(out, "scenario,n,mean_A,mean_B,mean_C")?;
    for (s, n, m) in estimator_means(rows) {
        writeln!(out, "{s},{n},{},{},{}", m[0], m[1], m[2])?;
    }
    Ok(())
}
