//! Lattice construction from configuration and dispatch of configured runs.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use nalgebra::{DMatrix, Vector3};
use symsearch_core::group::{ActionKind, CayleyTable, GroupAction, GroupKind, RotationAxis};
use symsearch_core::invariance::RegressionDataset;
use symsearch_core::lattice::{
    cyclic_chain_lattice, d4_lattice, icosahedral_axes, klein_four_lattice, sl3_extended_lattice,
    so3_axes_lattice_with, Lattice,
};
use symsearch_core::search::{estimate, InvarianceTester, NodeTester, PerfectOracle, ScriptedTester, SearchResult};
use symsearch_core::seed;

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::ingest;
use crate::plot::{line_chart, PlotSpec};
use crate::runners::{
    estimator_comparison, group_recovery, power_curve, write_estimator_csv, write_estimator_means_csv,
    write_power_csv, write_recovery_csv,
};
use crate::scenario::{ScenarioGenerator, TargetFunction};
use crate::ExperimentError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Svg,
    Both,
}

impl OutputFormat {
    fn csv(self) -> bool {
        matches!(self, Self::Csv | Self::Both)
    }

    fn svg(self) -> bool {
        matches!(self, Self::Svg | Self::Both)
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Overrides `experiment.out`; the working directory when neither is set.
    pub out_dir: Option<PathBuf>,
    /// Overrides `experiment.seed`.
    pub seed: Option<u64>,
    pub format: OutputFormat,
}

/// Files written by a run, and a human-readable summary.
#[derive(Clone, Debug, Default)]
pub struct RunReport {
    pub files: Vec<PathBuf>,
    pub summary: String,
}

fn lattice_err<'a>(cfg: &'a ExperimentConfig, key: &str) -> impl Fn(String) -> ExperimentError + 'a {
    let key = key.to_string();
    move |msg| cfg.error_at(&key, msg)
}

fn finite_table(lattice: &Lattice) -> Option<Arc<CayleyTable>> {
    match lattice.node(lattice.top()).group.kind() {
        GroupKind::Finite { table, .. } => Some(Arc::clone(table)),
        _ => None,
    }
}

/// Sign changes of the first two coordinates, indexed like `C2 x C2`.
fn sign_flips(table: &Arc<CayleyTable>, dim: usize) -> Result<GroupAction, String> {
    if dim < 2 {
        return Err("the Klein four action needs at least two coordinates".into());
    }
    let matrices = (0..4)
        .map(|i| {
            let mut m = DMatrix::identity(dim, dim);
            if i & 2 != 0 {
                m[(0, 0)] = -1.0;
            }
            if i & 1 != 0 {
                m[(1, 1)] = -1.0;
            }
            m
        })
        .collect();
    let all: Vec<usize> = (0..4).collect();
    let group = symsearch_core::group::GroupDescriptor::finite_generated(table, &all, "V4").map_err(|e| e.to_string())?;
    GroupAction::new(group, dim, ActionKind::FiniteLinear {
        table: Arc::clone(table),
        matrices,
    })
    .map_err(|e| e.to_string())
}

fn default_builder(cfg: &ExperimentConfig) -> Result<String, ExperimentError> {
    if let Some(b) = &cfg.lattice.builder {
        return Ok(b.clone());
    }
    match cfg.scenario()?.map(|s| s.target) {
        Some(TargetFunction::ExpAbsFirst) => Ok("cyclic-chain".into()),
        Some(_) => Ok("sl3-extended".into()),
        None => Err(ExperimentError::config("[lattice] needs a builder")),
    }
}

/// Builds the lattice described by `[lattice]`, acting on R^`dim` where the
/// builder allows a choice. Defaults to the `C_4` chain for the `f<d>`
/// scenarios and the `SL(3)` lattice for the others.
pub fn build_lattice(cfg: &ExperimentConfig, dim: Option<usize>) -> Result<Lattice, ExperimentError> {
    let l = &cfg.lattice;
    let builder = default_builder(cfg)?;
    let at = lattice_err(cfg, "builder");
    let dim = l.dim.or(dim);
    let plane = l.plane.map_or((0, 1), |[a, b]| (a, b));
    let lat = match builder.as_str() {
        "cyclic-chain" => {
            let orders = l.orders.clone().unwrap_or_else(|| vec![1, 2, 4]);
            let lat = cyclic_chain_lattice(&orders).map_err(|e| cfg.error_at("orders", e.to_string()))?;
            let table = finite_table(&lat).expect("finite chain");
            let action = GroupAction::cyclic_planar(&table, dim.unwrap_or(2), plane, l.power.unwrap_or(1))
                .map_err(|e| at(e.to_string()))?;
            lat.with_action(action)
        }
        "d4" => {
            let lat = d4_lattice().map_err(|e| at(e.to_string()))?;
            match l.image_side {
                Some(side) => {
                    let table = finite_table(&lat).expect("finite D4");
                    let action = GroupAction::dihedral4_image(&table, side).map_err(|e| at(e.to_string()))?;
                    lat.with_action(action)
                }
                None => lat,
            }
        }
        "klein-four" => {
            let lat = klein_four_lattice().map_err(|e| at(e.to_string()))?;
            let table = finite_table(&lat).expect("finite V4");
            let action = sign_flips(&table, dim.unwrap_or(2)).map_err(&at)?;
            lat.with_action(action)
        }
        "so3-axes" => {
            let axes: Vec<Vector3<f64>> = match &l.axes {
                Some(list) => list.iter().map(|a| Vector3::new(a[0], a[1], a[2])).collect(),
                None => icosahedral_axes(),
            };
            so3_axes_lattice_with(&axes, l.include_top.unwrap_or(true), l.cyclic_order)
                .map_err(|e| cfg.error_at("axes", e.to_string()))?
        }
        "sl3-extended" => sl3_extended_lattice().map_err(|e| at(e.to_string()))?,
        "file" => {
            let path = l.path.as_ref().ok_or_else(|| at("the file builder needs a path".into()))?;
            let text = std::fs::read_to_string(path)
                .map_err(|e| cfg.error_at("path", format!("cannot read {}: {e}", path.display())))?;
            let lat = Lattice::from_text(&text)
                .map_err(|e| cfg.error_at("path", format!("{}: {e}", path.display())))?;
            let action = file_action(cfg, &lat, dim).map_err(|msg| cfg.error_at("action", msg))?;
            lat.with_action(action)
        }
        other => {
            return Err(at(format!(
                "unknown builder '{other}' (use cyclic-chain, d4, klein-four, so3-axes, sl3-extended or file)"
            )))
        }
    };
    Ok(lat)
}

/// The ambient action for a lattice read from a file: from `action` when set,
/// otherwise inferred from the top group.
fn file_action(cfg: &ExperimentConfig, lat: &Lattice, dim: Option<usize>) -> Result<GroupAction, String> {
    let top = lat.node(lat.top()).group.clone();
    let need_dim = || dim.ok_or_else(|| "set [lattice] dim for this action".to_string());
    let plane = cfg.lattice.plane.map_or((0, 1), |[a, b]| (a, b));
    let power = cfg.lattice.power.unwrap_or(1);
    let name = match cfg.lattice.action.as_deref() {
        Some(n) => n.to_string(),
        None => match top.kind() {
            GroupKind::SpecialOrthogonal3 | GroupKind::SpecialLinear3 => "matrix".into(),
            GroupKind::Circle { about: RotationAxis::Axis(_), .. } => "matrix".into(),
            GroupKind::Circle { about: RotationAxis::Plane(..), .. } => "planar".into(),
            GroupKind::Translation { .. } => "translation".into(),
            GroupKind::Permutation { .. } => "permutation".into(),
            GroupKind::Trivial { .. } => "trivial".into(),
            GroupKind::Finite { .. } => {
                return Err("a finite lattice from a file needs [lattice] action (cyclic-planar, d4-plane, d4-image or klein-signs)".into())
            }
        },
    };
    let table = || finite_table(lat).ok_or_else(|| format!("action '{name}' needs a finite top group"));
    let kind = match name.as_str() {
        "matrix" => return GroupAction::new(top, 3, ActionKind::MatrixMultiply).map_err(|e| e.to_string()),
        "planar" => ActionKind::PlanarRotation { power },
        "translation" => ActionKind::Translation,
        "trivial" => ActionKind::Trivial,
        "permutation" => ActionKind::CoordinatePermutation,
        "cyclic-planar" => return GroupAction::cyclic_planar(&table()?, need_dim()?, plane, power).map_err(|e| e.to_string()),
        "d4-plane" => return GroupAction::dihedral4_plane(&table()?).map_err(|e| e.to_string()),
        "d4-image" => {
            let side = cfg.lattice.image_side.ok_or("d4-image needs image_side")?;
            return GroupAction::dihedral4_image(&table()?, side).map_err(|e| e.to_string());
        }
        "klein-signs" => return sign_flips(&table()?, need_dim()?),
        other => return Err(format!("unknown action '{other}'")),
    };
    let d = match top.kind() {
        GroupKind::Translation { dim, .. } => *dim,
        GroupKind::Permutation { degree } => *degree,
        _ => need_dim()?,
    };
    GroupAction::new(top, d, kind).map_err(|e| e.to_string())
}

fn check_dim(lattice: &Lattice, dim: usize) -> Result<(), ExperimentError> {
    match lattice.action() {
        Some(a) if a.dim() != dim => Err(ExperimentError::Data(format!(
            "features have {dim} coordinates but the lattice acts on R^{}",
            a.dim()
        ))),
        Some(_) => Ok(()),
        None => Err(ExperimentError::config("the lattice has no action on the feature space")),
    }
}

fn load_data(cfg: &ExperimentConfig) -> Result<Option<RegressionDataset>, ExperimentError> {
    let Some(d) = &cfg.data else { return Ok(None) };
    let format = match &d.format {
        Some(f) => f.clone(),
        None if d.labels.is_some() => "idx".into(),
        None => "csv".into(),
    };
    let data = match format.as_str() {
        "csv" => ingest::read_csv(&d.path, d.response.as_deref())?,
        "idx" => {
            let labels = d.labels.as_ref().ok_or_else(|| cfg.error_at("format", "IDX data needs a labels file"))?;
            ingest::read_idx(&d.path, labels)?
        }
        other => return Err(cfg.error_at("format", format!("unknown data format '{other}' (use csv or idx)"))),
    };
    Ok(Some(data))
}

/// Outcome of a single configured search.
#[derive(Clone, Debug)]
pub struct SearchRun {
    pub lattice: Lattice,
    pub result: SearchResult,
}

impl SearchRun {
    pub fn summary(&self) -> String {
        let label = |i: usize| self.lattice.node(i).label.clone();
        let tilde: Vec<String> = self.result.tilde.iter().map(|&i| label(i)).collect();
        let meet = self
            .result
            .tilde
            .iter()
            .copied()
            .reduce(|a, b| self.lattice.meet(a, b))
            .unwrap_or(self.lattice.bottom());
        format!(
            "estimate: {}\nmaximal accepted: {}\nmeet of maximal: {}\ntests performed: {}\n",
            label(self.result.estimate),
            tilde.join(" "),
            label(meet),
            self.result.tests_performed
        )
    }
}

/// Runs one search. Oracles answer by lattice position; otherwise data come
/// from `[data]` or from the scenario at the first sample size.
pub fn run_search(cfg: &ExperimentConfig, master: u64) -> Result<SearchRun, ExperimentError> {
    let search = symsearch_core::search::SearchConfig {
        seed: master,
        ..cfg.search_config()?
    };
    let runtime = |e: symsearch_core::search::SearchError| ExperimentError::Runtime(e.to_string());
    let lookup = |lat: &Lattice, key: &str, label: &str| {
        lat.find(label).ok_or_else(|| cfg.error_at(key, format!("no node labelled '{label}'")))
    };
    if let Some(g) = &cfg.search.oracle_gmax {
        let lattice = build_lattice(cfg, None)?;
        let tester = PerfectOracle {
            gmax: lookup(&lattice, "oracle_gmax", g)?,
        };
        let result = estimate(&lattice, &search, &tester).map_err(runtime)?;
        return Ok(SearchRun { lattice, result });
    }
    if let Some(labels) = &cfg.search.oracle_rejects {
        let lattice = build_lattice(cfg, None)?;
        let ids = labels
            .iter()
            .map(|l| lookup(&lattice, "oracle_rejects", l))
            .collect::<Result<Vec<_>, _>>()?;
        let result = estimate(&lattice, &search, &ScriptedTester::rejecting(ids)).map_err(runtime)?;
        return Ok(SearchRun { lattice, result });
    }
    let tests = cfg.tests()?;
    if tests.len() != 1 {
        return Err(cfg.error_at("tests", "a search runs exactly one test"));
    }
    let (data, settings) = match (load_data(cfg)?, cfg.scenario()?) {
        (Some(d), _) => (d, cfg.data_test_settings()?),
        (None, Some(sc)) => {
            let n = *cfg
                .experiment
                .sample_sizes
                .first()
                .ok_or_else(|| cfg.error_at("kind", "a scenario search needs sample_sizes"))?;
            let s = seed::derive_seed(master, &[seed::label_hash("search"), n as u64]);
            (sc.training(n, &mut seed::stream(s, &[0])), cfg.test_settings(&sc)?)
        }
        (None, None) => return Err(ExperimentError::config("a search needs a scenario or a [data] section")),
    };
    let lattice = build_lattice(cfg, Some(data.dim()))?;
    check_dim(&lattice, data.dim())?;
    let tester = InvarianceTester::new(&data, settings.config(tests[0], data.len()), master).batched(cfg.search.batch);
    let result = estimate(&lattice, &search, &tester as &dyn NodeTester).map_err(runtime)?;
    Ok(SearchRun { lattice, result })
}

fn write_file(dir: &Path, name: &str, body: &str, files: &mut Vec<PathBuf>) -> Result<(), ExperimentError> {
    let path = dir.join(name);
    std::fs::write(&path, body)?;
    files.push(path);
    Ok(())
}

fn to_text(f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<String, ExperimentError> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(String::from_utf8(buf).expect("writers emit UTF-8"))
}

fn emit(
    dir: &Path,
    stem: &str,
    csv_text: &str,
    plot: Option<PlotSpec>,
    format: OutputFormat,
    files: &mut Vec<PathBuf>,
) -> Result<(), ExperimentError> {
    if format.csv() {
        write_file(dir, &format!("{stem}.csv"), csv_text, files)?;
    }
    if let (true, Some(spec)) = (format.svg(), plot) {
        write_file(dir, &format!("{stem}.svg"), &line_chart(csv_text, &spec)?, files)?;
    }
    Ok(())
}

fn scenario_of(cfg: &ExperimentConfig) -> Result<ScenarioGenerator, ExperimentError> {
    cfg.scenario()?.ok_or_else(|| ExperimentError::config("this experiment needs a scenario"))
}

/// Runs the configured experiment and writes its tables and plots.
pub fn run(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunReport, ExperimentError> {
    let e = &cfg.experiment;
    let master = opts.seed.unwrap_or(e.seed);
    let dir = opts.out_dir.clone().or_else(|| e.out.clone()).unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir)?;
    let mut report = RunReport::default();
    let files = &mut report.files;
    match e.kind {
        ExperimentKind::PowerCurve => {
            let sc = scenario_of(cfg)?;
            let rows = power_curve(&sc, &e.sample_sizes, e.replicates, &cfg.tests()?, &cfg.test_settings(&sc)?, master)?;
            let text = to_text(|b| write_power_csv(&rows, b))?;
            let spec = PlotSpec::new("Rejection rate", "n", &["rejection_rate"], &["test", "hypothesis"]).log_x();
            emit(&dir, "power", &text, Some(spec), opts.format, files)?;
            report.summary = text;
        }
        ExperimentKind::GroupRecovery => {
            let sc = scenario_of(cfg)?;
            let lattice = build_lattice(cfg, Some(sc.dim()))?;
            check_dim(&lattice, sc.dim())?;
            let search = cfg.search_config()?;
            let rows = group_recovery(
                &sc,
                &lattice,
                &e.sample_sizes,
                e.replicates,
                &cfg.tests()?,
                &cfg.test_settings(&sc)?,
                &search,
                cfg.search.batch,
                master,
            )?;
            let text = to_text(|b| write_recovery_csv(&lattice, &rows, b))?;
            let header: Vec<&str> = text.lines().next().unwrap_or_default().split(',').skip(2).collect();
            let spec = PlotSpec::new("Proportion of estimates", "n", &header, &["test"]).log_x();
            emit(&dir, "recovery", &text, Some(spec), opts.format, files)?;
            report.summary = text;
        }
        ExperimentKind::EstimatorCompare => {
            let sc = scenario_of(cfg)?;
            let lattice = build_lattice(cfg, Some(sc.dim()))?;
            check_dim(&lattice, sc.dim())?;
            let rows = estimator_comparison(
                &sc,
                &lattice,
                &e.sample_sizes,
                e.replicates,
                &cfg.test_settings(&sc)?,
                &cfg.search_config()?,
                e.test_size,
                master,
            )?;
            let full = to_text(|b| write_estimator_csv(&rows, b))?;
            let means = to_text(|b| write_estimator_means_csv(&rows, b))?;
            emit(&dir, "estimator", &full, None, opts.format, files)?;
            let spec = PlotSpec::new("Mean squared prediction error", "n", &["mean_A", "mean_B", "mean_C"], &["scenario"]);
            emit(&dir, "estimator_means", &means, Some(spec), opts.format, files)?;
            report.summary = means;
        }
        ExperimentKind::Search => {
            let run = run_search(cfg, master)?;
            let text = to_text(|b| run.result.write_csv(&run.lattice, b))?;
            if opts.format.csv() {
                write_file(&dir, "search.csv", &text, files)?;
            }
            write_file(&dir, "search.dot", &run.result.to_dot(&run.lattice), files)?;
            report.summary = run.summary();
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> ExperimentConfig {
        ExperimentConfig::parse(text).unwrap()
    }

    #[test]
    fn builders_by_name() {
        let base = "[experiment]\nkind = \"search\"\n\n[search]\noracle_gmax = \"I\"\n\n[lattice]\n";
        let cases = [
            ("builder = \"cyclic-chain\"\norders = [1, 3, 9]\ndim = 3\n", 3),
            ("builder = \"d4\"\n", 10),
            ("builder = \"d4\"\nimage_side = 4\n", 10),
            ("builder = \"klein-four\"\n", 5),
            ("builder = \"so3-axes\"\naxes = [[0.0, 0.0, 1.0]]\n", 3),
            ("builder = \"sl3-extended\"\n", 9),
        ];
        for (extra, len) in cases {
            let lat = build_lattice(&parse(&format!("{base}{extra}")), None).unwrap();
            assert_eq!(lat.len(), len, "{extra}");
            assert!(lat.action().is_some(), "{extra}");
        }
        let bad = parse(&format!("{base}builder = \"hexagon\"\n"));
        match build_lattice(&bad, None) {
            Err(ExperimentError::Config { line, .. }) => assert_eq!(line, Some(8)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn oracle_search_reports_meet() {
        let cfg = parse(
            "[experiment]\nkind = \"search\"\n\n[lattice]\nbuilder = \"d4\"\n\n[search]\noracle_rejects = [\"<R_h>\", \"<R_v>\", \"<R_/>\", \"<R_\\\\>\"]\n",
        );
        let run = run_search(&cfg, 0).unwrap();
        let label = |i: usize| run.lattice.node(i).label.as_str();
        assert_eq!(label(run.result.estimate), "<R_pi/2>");
        assert!(run.summary().contains("meet of maximal: <R_pi/2>"));
    }

    #[test]
    fn dimension_mismatch_is_a_data_error() {
        let cfg = parse(
            "[experiment]\nkind = \"search\"\nscenario = \"f3\"\nsample_sizes = [30]\n\n[lattice]\nbuilder = \"d4\"\n",
        );
        let err = run_search(&cfg, 0).unwrap_err();
        assert_eq!(err.exit_code(), 2, "{err}");
    }
}
