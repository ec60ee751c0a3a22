//! Experiment configuration files.
//!
//! A configuration is a TOML document with the sections `[experiment]`,
//! `[test]`, `[lattice]`, `[search]` and `[data]`; only `[experiment]` is
//! required. Unknown keys are errors. Every error carries the line number of
//! the offending key when one can be found.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::runners::{NoiseChoice, TestChoice, TestSettings};
use crate::scenario::ScenarioGenerator;
use crate::ExperimentError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    PowerCurve,
    GroupRecovery,
    EstimatorCompare,
    Search,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub scenario: Option<String>,
    #[serde(default)]
    pub sample_sizes: Vec<usize>,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub test_size: Option<usize>,
}

fn default_replicates() -> usize {
    100
}

/// Either an explicit list or the word `grid` for the noise model's default grid.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum ThresholdSpec {
    List(Vec<f64>),
    Named(String),
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestSection {
    #[serde(default)]
    pub tests: Option<Vec<String>>,
    pub alpha: Option<f64>,
    pub m: Option<usize>,
    pub thresholds: Option<ThresholdSpec>,
    pub sigma: Option<f64>,
    pub noise: Option<String>,
    pub lipschitz: Option<f64>,
    pub exponent: Option<f64>,
    pub q: Option<f64>,
    pub permutations: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSection {
    pub builder: Option<String>,
    pub orders: Option<Vec<usize>>,
    pub dim: Option<usize>,
    pub plane: Option<[usize; 2]>,
    pub axes: Option<Vec<[f64; 3]>>,
    pub include_top: Option<bool>,
    pub cyclic_order: Option<usize>,
    pub image_side: Option<usize>,
    pub power: Option<i32>,
    pub action: Option<String>,
    pub path: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSection {
    pub algorithm: Option<String>,
    pub tie_rule: Option<String>,
    #[serde(default)]
    pub batch: bool,
    pub oracle_gmax: Option<String>,
    pub oracle_rejects: Option<Vec<String>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub path: PathBuf,
    pub format: Option<String>,
    pub labels: Option<PathBuf>,
    pub response: Option<String>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub test: TestSection,
    #[serde(default)]
    pub lattice: LatticeSection,
    #[serde(default)]
    pub search: SearchSection,
    pub data: Option<DataSection>,
    /// Source text, for locating keys in error messages.
    #[serde(skip)]
    source: String,
}

fn line_at(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ExperimentError> {
        let mut cfg: Self = toml::from_str(text).map_err(|e| ExperimentError::Config {
            line: e.span().map(|s| line_at(text, s.start)),
            msg: e.message().to_string(),
        })?;
        cfg.source = text.to_string();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ExperimentError::config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// A config error pointing at the first line that assigns `key`.
    pub fn error_at(&self, key: &str, msg: impl Into<String>) -> ExperimentError {
        let line = self.source.lines().position(|l| {
            let l = l.trim_start();
            l.strip_prefix(key).is_some_and(|rest| rest.trim_start().starts_with('='))
        });
        ExperimentError::Config {
            line: line.map(|l| l + 1),
            msg: msg.into(),
        }
    }

    fn validate(&self) -> Result<(), ExperimentError> {
        let e = &self.experiment;
        if e.replicates == 0 {
            return Err(self.error_at("replicates", "replicates must be at least 1"));
        }
        if e.sample_sizes.iter().any(|&n| n == 0) || e.sample_sizes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(self.error_at("sample_sizes", "sample sizes must be positive and strictly ascending"));
        }
        let needs_sizes = matches!(
            e.kind,
            ExperimentKind::PowerCurve | ExperimentKind::GroupRecovery | ExperimentKind::EstimatorCompare
        );
        if needs_sizes && e.sample_sizes.is_empty() {
            return Err(self.error_at("kind", "this experiment needs sample_sizes"));
        }
        if needs_sizes && e.scenario.is_none() {
            return Err(self.error_at("kind", "this experiment needs a scenario"));
        }
        if e.kind == ExperimentKind::Search && e.scenario.is_none() && self.data.is_none() {
            let has_oracle = self.search.oracle_gmax.is_some() || self.search.oracle_rejects.is_some();
            if !has_oracle {
                return Err(self.error_at("kind", "a search needs a scenario, a [data] section or an oracle"));
            }
        }
        if let Some(s) = &e.scenario {
            ScenarioGenerator::by_name(s).map_err(|err| self.error_at("scenario", err.to_string()))?;
        }
        if self.search.oracle_gmax.is_some() && self.search.oracle_rejects.is_some() {
            return Err(self.error_at("oracle_gmax", "give oracle_gmax or oracle_rejects, not both"));
        }
        self.tests()?;
        self.search_config()?;
        if let Some(sc) = self.scenario()? {
            self.test_settings(&sc)?;
        }
        Ok(())
    }

    pub fn scenario(&self) -> Result<Option<ScenarioGenerator>, ExperimentError> {
        self.experiment
            .scenario
            .as_deref()
            .map(ScenarioGenerator::by_name)
            .transpose()
    }

    /// Tests to run; the asymmetric test by default.
    pub fn tests(&self) -> Result<Vec<TestChoice>, ExperimentError> {
        let Some(names) = &self.test.tests else {
            return Ok(vec![TestChoice::Asymmetric]);
        };
        if names.is_empty() {
            return Err(self.error_at("tests", "tests must name at least one test"));
        }
        names
            .iter()
            .map(|n| match n.as_str() {
                "asym" => Ok(TestChoice::Asymmetric),
                "perm" => Ok(TestChoice::Permutation),
                other => Err(self.error_at("tests", format!("unknown test '{other}' (use asym or perm)"))),
            })
            .collect()
    }

    /// Scenario defaults overridden by the `[test]` section.
    pub fn test_settings(&self, scenario: &ScenarioGenerator) -> Result<TestSettings, ExperimentError> {
        self.apply_overrides(TestSettings::for_scenario(scenario))
    }

    /// Settings for a dataset read from disk. `sigma` and `lipschitz` have no
    /// defaults there and must be given.
    pub fn data_test_settings(&self) -> Result<TestSettings, ExperimentError> {
        let (Some(sigma), Some(lipschitz)) = (self.test.sigma, self.test.lipschitz) else {
            return Err(ExperimentError::config("[test] needs sigma and lipschitz for a dataset read from disk"));
        };
        self.apply_overrides(TestSettings {
            alpha: 0.05,
            m: None,
            thresholds: None,
            sigma,
            noise: NoiseChoice::Bound,
            lipschitz,
            exponent: 1.0,
            q: 0.95,
            permutations: 100,
        })
    }

    fn apply_overrides(&self, mut s: TestSettings) -> Result<TestSettings, ExperimentError> {
        let t = &self.test;
        if let Some(a) = t.alpha {
            if !(a > 0.0 && a < 1.0) {
                return Err(self.error_at("alpha", "alpha must lie in (0, 1)"));
            }
            s.alpha = a;
        }
        if let Some(m) = t.m {
            if m == 0 {
                return Err(self.error_at("m", "m must be at least 1"));
            }
            s.m = Some(m);
        }
        if let Some(sigma) = t.sigma {
            if !(sigma >= 0.0 && sigma.is_finite()) {
                return Err(self.error_at("sigma", "sigma must be >= 0"));
            }
            s.sigma = sigma;
            if t.thresholds.is_none() && s.thresholds.is_some() {
                s.thresholds = Some(vec![2.0 * sigma]);
            }
        }
        match &t.thresholds {
            None => {}
            Some(ThresholdSpec::Named(name)) if name == "grid" => s.thresholds = None,
            Some(ThresholdSpec::Named(name)) => {
                return Err(self.error_at("thresholds", format!("unknown threshold set '{name}' (use a list or \"grid\")")))
            }
            Some(ThresholdSpec::List(ts)) => {
                if ts.is_empty() || ts.iter().any(|v| !(*v > 0.0)) || ts.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(self.error_at("thresholds", "thresholds must be positive and strictly ascending"));
                }
                s.thresholds = Some(ts.clone());
            }
        }
        if let Some(n) = &t.noise {
            s.noise = match n.as_str() {
                "bound" => NoiseChoice::Bound,
                "exact" => NoiseChoice::Exact,
                other => return Err(self.error_at("noise", format!("unknown noise model '{other}' (use bound or exact)"))),
            };
        }
        if let Some(l) = t.lipschitz {
            if !(l > 0.0 && l.is_finite()) {
                return Err(self.error_at("lipschitz", "lipschitz must be positive"));
            }
            s.lipschitz = l;
        }
        if let Some(a) = t.exponent {
            if !(a > 0.0 && a <= 1.0) {
                return Err(self.error_at("exponent", "exponent must lie in (0, 1]"));
            }
            s.exponent = a;
        }
        if let Some(q) = t.q {
            if !(q > 0.0 && q <= 1.0) {
                return Err(self.error_at("q", "q must lie in (0, 1]"));
            }
            s.q = q;
        }
        if let Some(b) = t.permutations {
            if b == 0 {
                return Err(self.error_at("permutations", "permutations must be at least 1"));
            }
            s.permutations = b;
        }
        Ok(s)
    }

    pub fn search_config(&self) -> Result<symsearch_core::search::SearchConfig, ExperimentError> {
        use symsearch_core::search::{Algorithm, SearchConfig, TieRule};
        let algorithm = match self.search.algorithm.as_deref().unwrap_or("breadth") {
            "breadth" => Algorithm::Breadth,
            "breadth-greedy" => Algorithm::BreadthGreedy,
            "depth" => Algorithm::Depth,
            other => {
                return Err(self.error_at(
                    "algorithm",
                    format!("unknown algorithm '{other}' (use breadth, breadth-greedy or depth)"),
                ))
            }
        };
        let tie_rule = match self.search.tie_rule.as_deref().unwrap_or("meet") {
            "meet" => TieRule::MeetOfMaxima,
            "uniform" => TieRule::UniformRandom,
            other => return Err(self.error_at("tie_rule", format!("unknown tie rule '{other}' (use meet or uniform)"))),
        };
        Ok(SearchConfig {
            algorithm,
            alpha: self.test.alpha.unwrap_or(0.05),
            tie_rule,
            seed: self.experiment.seed,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_power_curve() {
        let cfg = ExperimentConfig::parse(
            "[experiment]\nkind = \"power-curve\"\nscenario = \"f2\"\nsample_sizes = [20, 50]\n",
        )
        .unwrap();
        assert_eq!(cfg.experiment.replicates, 100);
        assert_eq!(cfg.tests().unwrap(), vec![TestChoice::Asymmetric]);
        let s = cfg.test_settings(&cfg.scenario().unwrap().unwrap()).unwrap();
        assert_eq!(s.thresholds, Some(vec![0.1]));
    }

    #[test]
    fn errors_name_lines() {
        let text = "[experiment]\nkind = \"power-curve\"\nscenario = \"f2\"\nsample_sizes = [50, 20]\n";
        match ExperimentConfig::parse(text) {
            Err(ExperimentError::Config { line, .. }) => assert_eq!(line, Some(4)),
            other => panic!("{other:?}"),
        }
        let text = "[experiment]\nkind = \"power-curve\"\n\n[test]\nalpah = 0.1\n";
        match ExperimentConfig::parse(text) {
            Err(ExperimentError::Config { line, .. }) => assert_eq!(line, Some(5)),
            other => panic!("{other:?}"),
        }
        let text = "[experiment]\nkind = \"group-recovery\"\nscenario = \"f2\"\nsample_sizes = [20]\nreplicates = 0\n";
        match ExperimentConfig::parse(text) {
            Err(ExperimentError::Config { line, .. }) => assert_eq!(line, Some(5)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn grid_and_overrides() {
        let cfg = ExperimentConfig::parse(
            "[experiment]\nkind = \"estimator-compare\"\nscenario = \"1\"\nsample_sizes = [100]\n\n[test]\nthresholds = \"grid\"\nnoise = \"exact\"\ntests = [\"asym\", \"perm\"]\n\n[search]\nalgorithm = \"depth\"\n",
        )
        .unwrap();
        let s = cfg.test_settings(&cfg.scenario().unwrap().unwrap()).unwrap();
        assert_eq!(s.thresholds, None);
        assert_eq!(s.noise, NoiseChoice::Exact);
        assert_eq!(cfg.tests().unwrap().len(), 2);
        assert_eq!(cfg.search_config().unwrap().algorithm, symsearch_core::search::Algorithm::Depth);
        assert!(ExperimentConfig::parse("[experiment]\nkind = \"nope\"\n").is_err());
    }
}
