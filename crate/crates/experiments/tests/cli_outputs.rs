use std::path::Path;
use std::process::{Command, Output};

use symsearch_experiments::plot::{line_chart, PlotSpec};

fn symsearch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_symsearch")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.toml");
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn run_in(dir: &Path, sub: &str, config: &str, extra: &[&str]) -> Output {
    let cfg = write_config(dir, config);
    let out = dir.to_string_lossy().into_owned();
    let mut args = vec![sub, "--config", cfg.as_str(), "--out", out.as_str()];
    args.extend_from_slice(extra);
    symsearch(&args)
}

const POWER: &str = "[experiment]\nkind = \"power-curve\"\nscenario = \"f2\"\nsample_sizes = [20, 40]\nreplicates = 8\nseed = 3\n\n[test]\ntests = [\"asym\", \"perm\"]\npermutations = 20\n";
const RECOVERY: &str = "[experiment]\nkind = \"group-recovery\"\nscenario = \"f2\"\nsample_sizes = [20, 40, 80]\nreplicates = 6\nseed = 9\n";

fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn power_curve_is_reproducible_across_thread_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(run_in(a.path(), "power-curve", POWER, &["--jobs", "1"]).status.success());
    assert!(run_in(b.path(), "power-curve", POWER, &["--jobs", "3"]).status.success());
    let first = std::fs::read(a.path().join("power.csv")).unwrap();
    assert_eq!(first, std::fs::read(b.path().join("power.csv")).unwrap());
    let text = String::from_utf8(first).unwrap();
    let table = rows(&text);
    assert_eq!(table.len(), 2 * 2 * 2);
    let rate_col = text.lines().next().unwrap().split(',').position(|h| h == "rejection_rate").unwrap();
    for r in &table {
        let rate: f64 = r[rate_col].parse().unwrap();
        assert!((0.0..=1.0).contains(&rate));
    }
}

#[test]
fn seed_flag_keeps_table_shape() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(run_in(a.path(), "group-recovery", RECOVERY, &["--seed", "1"]).status.success());
    assert!(run_in(b.path(), "group-recovery", RECOVERY, &["--seed", "2"]).status.success());
    let ra = std::fs::read_to_string(a.path().join("recovery.csv")).unwrap();
    let rb = std::fs::read_to_string(b.path().join("recovery.csv")).unwrap();
    assert_eq!(ra.lines().next(), rb.lines().next());
    assert_eq!(ra.lines().count(), rb.lines().count());
}

#[test]
fn recovery_proportions_sum_to_one_and_plot_regenerates() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), "group-recovery", RECOVERY, &["--format", "both"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("recovery.csv")).unwrap();
    let table = rows(&text);
    assert_eq!(table.len(), 3);
    for r in &table {
        let total: f64 = r[2..].iter().map(|v| v.parse::<f64>().unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-9, "{r:?}");
    }
    let header: Vec<&str> = text.lines().next().unwrap().split(',').skip(2).collect();
    let spec = PlotSpec::new("Proportion of estimates", "n", &header, &["test"]).log_x();
    let svg = line_chart(&text, &spec).unwrap();
    assert_eq!(svg, std::fs::read_to_string(dir.path().join("recovery.svg")).unwrap());
}

#[test]
fn oracle_search_prints_estimate_and_dot() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[experiment]\nkind = \"search\"\n\n[lattice]\nbuilder = \"d4\"\n\n[search]\noracle_gmax = \"<R_pi/2>\"\nalgorithm = \"depth\"\n";
    let out = run_in(dir.path(), "search", cfg, &[]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("estimate: <R_pi/2>\n"), "{stdout}");
    let dot = std::fs::read_to_string(dir.path().join("search.dot")).unwrap();
    assert!(dot.starts_with("digraph"));
    assert_eq!(rows(&std::fs::read_to_string(dir.path().join("search.csv")).unwrap()).len(), 10);
}

#[test]
fn exit_codes_distinguish_config_and_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bad_key = "[experiment]\nkind = \"power-curve\"\nscenario = \"f2\"\nsample_sizes = [20]\nreplicatse = 3\n";
    let out = run_in(dir.path(), "power-curve", bad_key, &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 5"));
    let mismatch = run_in(dir.path(), "search", POWER, &[]);
    assert_eq!(mismatch.status.code(), Some(1));
    std::fs::write(dir.path().join("bad.csv"), "a,y\n1,2\nx,3\n").unwrap();
    let out = symsearch(&["ingest-check", dir.path().join("bad.csv").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(symsearch(&["--help"]).status.code(), Some(0));
    assert_eq!(symsearch(&["frobnicate"]).status.code(), Some(1));
}
