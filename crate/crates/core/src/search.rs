//! Lattice search for the largest subgroup that passes an invariance test.
//!
//! Breadth-first search tests level by level and deletes everything above a
//! rejection. The greedy variant accepts, untested, any node generated by two
//! or more accepted nodes one level down. Depth-first search climbs from the
//! first acceptance in each level and never revisits a level.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::io::Write;

use rand::Rng;
use rayon::prelude::*;

use crate::group::{GroupError, SamplerSpec};
use crate::invariance::{batch_test, run_test, NeighborIndex, RegressionDataset, TestConfig, TestError, TestOutcome};
use crate::lattice::{Lattice, LatticeError};
use crate::seed;

#[derive(Debug, thiserror::Error)]
pub enum SearchError {
    #[error("testing node '{node}': {source}")]
    Test {
        node: String,
        #[source]
        source: TestError,
    },
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("invalid search configuration: {0}")]
    InvalidConfig(String),
}

/// Decides `H0: f is H-invariant` for nodes of a lattice.
///
/// Node ids refer to the lattice passed in, which is always the full lattice
/// being searched.
pub trait NodeTester: Sync {
    fn test(&self, lattice: &Lattice, node: usize, alpha: f64) -> Result<TestOutcome, TestError>;

    /// Tests the surviving nodes of one level. The default runs [`NodeTester::test`]
    /// on each node in parallel.
    fn test_level(&self, lattice: &Lattice, nodes: &[usize], alpha: f64) -> Result<Vec<TestOutcome>, SearchError> {
        nodes
            .par_iter()
            .map(|&h| self.test(lattice, h, alpha).map_err(|e| node_error(lattice, h, e)))
            .collect()
    }
}

fn node_error(lattice: &Lattice, node: usize, source: TestError) -> SearchError {
    SearchError::Test {
        node: lattice.node(node).label.clone(),
        source,
    }
}

/// Accepts exactly the nodes below a known `gmax`.
#[derive(Clone, Copy, Debug)]
pub struct PerfectOracle {
    pub gmax: usize,
}

impl NodeTester for PerfectOracle {
    fn test(&self, lattice: &Lattice, node: usize, alpha: f64) -> Result<TestOutcome, TestError> {
        let p = if lattice.leq(node, self.gmax) { 1.0 } else { 0.0 };
        Ok(TestOutcome::from_p_value(p, alpha))
    }
}

/// Rejects the listed nodes and accepts every other one.
#[derive(Clone, Debug, Default)]
pub struct ScriptedTester {
    pub rejects: BTreeSet<usize>,
}

impl ScriptedTester {
    pub fn rejecting(nodes: impl IntoIterator<Item = usize>) -> Self {
        Self {
            rejects: nodes.into_iter().collect(),
        }
    }
}

impl NodeTester for ScriptedTester {
    fn test(&self, _: &Lattice, node: usize, alpha: f64) -> Result<TestOutcome, TestError> {
        let p = if self.rejects.contains(&node) { 0.0 } else { 1.0 };
        Ok(TestOutcome::from_p_value(p, alpha))
    }
}

/// Runs a data-driven invariance test on each node.
///
/// Node `h` is tested under the lattice's action restricted to `h`, drawing
/// from the node's default sampler, with the seed `seed / [h]`. In batch mode
/// a level is tested from one shared draw of the uniform mixture of its
/// nodes' samplers, under the ambient action, with the seed `seed / [level ids..]`.
pub struct InvarianceTester<'a> {
    data: &'a RegressionDataset,
    index: NeighborIndex,
    config: TestConfig,
    seed: u64,
    batch: bool,
}

impl<'a> InvarianceTester<'a> {
    pub fn new(data: &'a RegressionDataset, config: TestConfig, seed: u64) -> Self {
        Self {
            data,
            index: NeighborIndex::build(data),
            config,
            seed,
            batch: false,
        }
    }

    pub fn batched(mut self, batch: bool) -> Self {
        self.batch = batch;
        self
    }

    fn missing_action() -> TestError {
        TestError::InvalidParameter("lattice has no action attached".into())
    }
}

impl NodeTester for InvarianceTester<'_> {
    fn test(&self, lattice: &Lattice, node: usize, alpha: f64) -> Result<TestOutcome, TestError> {
        let action = lattice.node_action(node).ok_or_else(Self::missing_action)?;
        let sampler = lattice.node(node).group.default_sampler()?;
        run_test(
            self.data,
            &self.index,
            &action,
            &sampler,
            &self.config.with_alpha(alpha),
            seed::derive_seed(self.seed, &[node as u64]),
        )
    }

    fn test_level(&self, lattice: &Lattice, nodes: &[usize], alpha: f64) -> Result<Vec<TestOutcome>, SearchError> {
        if !self.batch {
            return nodes
                .par_iter()
                .map(|&h| self.test(lattice, h, alpha).map_err(|e| node_error(lattice, h, e)))
                .collect();
        }
        let Some(&first) = nodes.first() else {
            return Ok(Vec::new());
        };
        let wrap = |e: TestError| node_error(lattice, first, e);
        let action = lattice.action().ok_or_else(Self::missing_action).map_err(wrap)?;
        let samplers = nodes
            .iter()
            .map(|&h| lattice.node(h).group.default_sampler())
            .collect::<Result<Vec<_>, GroupError>>()
            .map_err(|e| wrap(e.into()))?;
        let groups: Vec<_> = nodes.iter().map(|&h| &lattice.node(h).group).collect();
        let path: Vec<u64> = nodes.iter().map(|&h| h as u64).collect();
        batch_test(
            self.data,
            &self.index,
            action,
            &SamplerSpec::Mixture(samplers),
            &groups,
            &self.config.with_alpha(alpha),
            seed::derive_seed(self.seed, &path),
        )
        .map_err(wrap)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    Breadth,
    BreadthGreedy,
    Depth,
}

/// How to pick a single estimate from several incomparable maxima.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TieRule {
    UniformRandom,
    MeetOfMaxima,
}

/// Significance levels along a sequence of growing samples.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AlphaSchedule {
    Constant(f64),
    /// `alpha_0 = initial`, halved at every step.
    Halving { initial: f64 },
}

impl AlphaSchedule {
    pub fn alpha(&self, step: usize) -> f64 {
        match *self {
            Self::Constant(a) => a,
            Self::Halving { initial } => initial * 0.5f64.powi(step.min(1074) as i32),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SearchConfig {
    pub algorithm: Algorithm,
    /// Per-node significance level, the same at every node.
    pub alpha: f64,
    pub tie_rule: TieRule,
    /// Seeds the uniform tie rule.
    pub seed: u64,
}

impl SearchConfig {
    pub fn new(algorithm: Algorithm, alpha: f64) -> Self {
        Self {
            algorithm,
            alpha,
            tie_rule: TieRule::MeetOfMaxima,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), SearchError> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(SearchError::InvalidConfig(format!("alpha {} outside (0, 1)", self.alpha)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NodeStatus {
    Accepted,
    Rejected,
    /// Deleted because a node below it was rejected.
    Pruned,
    /// Accepted without a test as the join of accepted nodes one level down.
    SkippedGreedy,
    Untested,
}

impl NodeStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Accepted => "accepted",
            Self::Rejected => "rejected",
            Self::Pruned => "pruned",
            Self::SkippedGreedy => "skipped-greedy",
            Self::Untested => "untested",
        }
    }

    fn colour(self) -> &'static str {
        match self {
            Self::Accepted => "palegreen",
            Self::Rejected => "salmon",
            Self::Pruned => "lightgrey",
            Self::SkippedGreedy => "lightblue",
            Self::Untested => "white",
        }
    }

    pub fn survives(self) -> bool {
        matches!(self, Self::Accepted | Self::SkippedGreedy)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchResult {
    pub estimate: usize,
    /// Maxima of the surviving nodes, ascending by id.
    pub tilde: Vec<usize>,
    pub statuses: Vec<NodeStatus>,
    pub p_values: Vec<Option<f64>>,
    pub tests_performed: usize,
    /// Sum of `|H|` over tested finite nodes.
    pub computation_units: usize,
    /// Recursions made by depth-first search; levels visited otherwise.
    pub depth: usize,
}

impl SearchResult {
    fn blank(lattice: &Lattice) -> Self {
        let mut statuses = vec![NodeStatus::Untested; lattice.len()];
        statuses[lattice.bottom()] = NodeStatus::Accepted;
        Self {
            estimate: lattice.bottom(),
            tilde: Vec::new(),
            statuses,
            p_values: vec![None; lattice.len()],
            tests_performed: 0,
            computation_units: 0,
            depth: 0,
        }
    }

    fn record(&mut self, lattice: &Lattice, node: usize, outcome: &TestOutcome) {
        self.statuses[node] = if outcome.rejected() {
            NodeStatus::Rejected
        } else {
            NodeStatus::Accepted
        };
        self.p_values[node] = Some(outcome.p_value);
        self.tests_performed += 1;
        if let Some(k) = lattice.node(node).group.order() {
            self.computation_units += k;
        }
    }

    fn prune_above(&mut self, lattice: &Lattice, rejected: usize) {
        for h in 0..lattice.len() {
            if h != rejected && lattice.leq(rejected, h) && self.statuses[h] == NodeStatus::Untested {
                self.statuses[h] = NodeStatus::Pruned;
            }
        }
    }

    /// Writes `node,label,status,p_value` rows with a header.
    pub fn write_csv<W: Write>(&self, lattice: &Lattice, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "node,label,status,p_value")?;
        for (id, node) in lattice.nodes().iter().enumerate() {
            let p = self.p_values[id].map(|p| p.to_string()).unwrap_or_default();
            writeln!(out, "{id},{},{},{p}", csv_field(&node.label), self.statuses[id].as_str())?;
        }
        Ok(())
    }

    /// Graphviz Hasse diagram, nodes filled by status and the estimate outlined.
    pub fn to_dot(&self, lattice: &Lattice) -> String {
        let mut s = String::from("digraph lattice {\n  rankdir=BT;\n  node [style=filled];\n");
        for (id, node) in lattice.nodes().iter().enumerate() {
            let status = self.statuses[id];
            let _ = write!(
                s,
                "  n{id} [label=\"{}\", fillcolor={}, class=\"{}\"",
                node.label.replace('\\', "\\\\").replace('"', "\\\""),
                status.colour(),
                status.as_str()
            );
            if id == self.estimate {
                s.push_str(", penwidth=3");
            }
            s.push_str("];\n");
        }
        for &(lo, hi) in lattice.covers() {
            let _ = writeln!(s, "  n{lo} -> n{hi};");
        }
        s.push_str("}\n");
        s
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Runs the configured algorithm.
pub fn estimate(lattice: &Lattice, config: &SearchConfig, tester: &dyn NodeTester) -> Result<SearchResult, SearchError> {
    match config.algorithm {
        Algorithm::Breadth => breadth_first_estimate(lattice, config, tester),
        Algorithm::BreadthGreedy => breadth_first_greedy_estimate(lattice, config, tester),
        Algorithm::Depth => depth_first_estimate(lattice, config, tester),
    }
}

pub fn breadth_first_estimate(
    lattice: &Lattice,
    config: &SearchConfig,
    tester: &dyn NodeTester,
) -> Result<SearchResult, SearchError> {
    breadth_first(lattice, config, tester, false)
}

pub fn breadth_first_greedy_estimate(
    lattice: &Lattice,
    config: &SearchConfig,
    tester: &dyn NodeTester,
) -> Result<SearchResult, SearchError> {
    breadth_first(lattice, config, tester, true)
}

fn breadth_first(
    lattice: &Lattice,
    config: &SearchConfig,
    tester: &dyn NodeTester,
    greedy: bool,
) -> Result<SearchResult, SearchError> {
    config.validate()?;
    let mut res = SearchResult::blank(lattice);
    let levels = lattice.enumerate_by_height();
    for (li, level) in levels.iter().enumerate().skip(1) {
        let alive: Vec<usize> = level
            .iter()
            .copied()
            .filter(|&h| res.statuses[h] == NodeStatus::Untested)
            .collect();
        if alive.is_empty() {
            continue;
        }
        res.depth = li;
        let mut to_test = Vec::with_capacity(alive.len());
        for &h in &alive {
            if greedy && generated_by_accepted(lattice, &res.statuses, &levels[li - 1], h) {
                res.statuses[h] = NodeStatus::SkippedGreedy;
            } else {
                to_test.push(h);
            }
        }
        let outcomes = tester.test_level(lattice, &to_test, config.alpha)?;
        for (&h, out) in to_test.iter().zip(&outcomes) {
            res.record(lattice, h, out);
        }
        for (&h, out) in to_test.iter().zip(&outcomes) {
            if out.rejected() {
                res.prune_above(lattice, h);
            }
        }
    }
    let survivors: Vec<usize> = (0..lattice.len()).filter(|&h| res.statuses[h].survives()).collect();
    res.tilde = maxima(lattice, &survivors);
    let mut rng = seed::stream(config.seed, &[seed::label_hash("tilde")]);
    res.estimate = resolve_tilde(&res.tilde, lattice, config.tie_rule, &mut rng).expect("bottom always survives");
    Ok(res)
}

/// True when `h` is the join of at least two surviving nodes of `below`.
fn generated_by_accepted(lattice: &Lattice, statuses: &[NodeStatus], below: &[usize], h: usize) -> bool {
    let under: Vec<usize> = below
        .iter()
        .copied()
        .filter(|&b| statuses[b].survives() && lattice.leq(b, h))
        .collect();
    under.len() >= 2 && under.iter().skip(1).fold(under[0], |acc, &b| lattice.join(acc, b)) == h
}

/// Maximal elements of `set` under the lattice order.
pub fn maxima(lattice: &Lattice, set: &[usize]) -> Vec<usize> {
    set.iter()
        .copied()
        .filter(|&a| !set.iter().any(|&b| b != a && lattice.leq(a, b)))
        .collect()
}

/// Moves up through the first accepted node of each level until none is
/// accepted. Nodes above an earlier rejection are skipped.
pub fn depth_first_estimate(
    lattice: &Lattice,
    config: &SearchConfig,
    tester: &dyn NodeTester,
) -> Result<SearchResult, SearchError> {
    config.validate()?;
    let mut res = SearchResult::blank(lattice);
    let root_of: HashMap<usize, usize> = lattice.origin().iter().enumerate().map(|(i, &o)| (o, i)).collect();
    let mut current = lattice.clone();
    loop {
        let levels = current.enumerate_by_height();
        let mut next = None;
        if let Some(level) = levels.get(1) {
            for &local in level {
                let h = root_of[&current.origin()[local]];
                if res.statuses[h] == NodeStatus::Pruned {
                    continue;
                }
                let out = tester
                    .test(lattice, h, config.alpha)
                    .map_err(|e| node_error(lattice, h, e))?;
                res.record(lattice, h, &out);
                if out.rejected() {
                    res.prune_above(lattice, h);
                } else {
                    next = Some((local, h));
                    break;
                }
            }
        }
        match next {
            Some((local, h)) => {
                res.depth += 1;
                res.estimate = h;
                current = current.sublattice_above(local)?;
            }
            None => break,
        }
    }
    res.tilde = vec![res.estimate];
    Ok(res)
}

/// Picks one node from the maxima `tilde`; `None` when it is empty.
///
/// The meet rule folds the lattice meet over the set, which is independent of
/// order. The uniform rule draws one element from `rng`.
pub fn resolve_tilde<R: Rng>(tilde: &[usize], lattice: &Lattice, rule: TieRule, rng: &mut R) -> Option<usize> {
    let (&first, rest) = tilde.split_first()?;
    if rest.is_empty() {
        return Some(first);
    }
    Some(match rule {
        TieRule::UniformRandom => tilde[rng.random_range(0..tilde.len())],
        TieRule::MeetOfMaxima => rest.iter().fold(first, |acc, &b| lattice.meet(acc, b)),
    })
}

/// Arithmetic lower bounds for a search run at a known `gmax`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundReport {
    /// Size of the frontier just above the down-set of `gmax`.
    pub frontier_size: usize,
    /// Number of nodes below `gmax`, itself included.
    pub below_gmax: usize,
    /// `1 - |frontier| (1 - P)`: lower bound on the chance that `f` is invariant under the estimate.
    pub invariance_bound: f64,
    /// `1 - |below| alpha - |frontier| (1 - P)`: lower bound on the chance of recovering `gmax` exactly.
    pub recovery_bound: f64,
}

/// Bounds from the per-node power `power` of the test against non-invariant
/// frontier nodes and the per-node level `alpha`.
pub fn bound_diagnostics(lattice: &Lattice, gmax: usize, power: f64, alpha: f64) -> Result<BoundReport, SearchError> {
    if !(0.0..=1.0).contains(&power) || !(0.0..=1.0).contains(&alpha) {
        return Err(SearchError::InvalidConfig("power and alpha must lie in [0, 1]".into()));
    }
    let frontier_size = lattice.frontier(gmax)?.len();
    let below_gmax = lattice.down_set(gmax).len();
    let miss = frontier_size as f64 * (1.0 - power);
    Ok(BoundReport {
        frontier_size,
        below_gmax,
        invariance_bound: 1.0 - miss,
        recovery_bound: 1.0 - below_gmax as f64 * alpha - miss,
    })
}
