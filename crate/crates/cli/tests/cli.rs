use rmt_ensemble::data::{generate_synthetic, load_csv, stratified_split, CovarianceKind, CsvOptions, SyntheticSpec};
use rmt_ensemble::estimate::{estimate_model, EstimationConfig};
use rmt_ensemble::selection::{select_theoretical, SearchGrid, SelectionReport, SELECTION_REPORT_SCHEMA};
use rmt_ensemble::rng;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rmt-ensemble"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn error_json(o: &Output) -> serde_json::Value {
    let text = String::from_utf8(o.stderr.clone()).unwrap();
    let line = text.lines().last().expect("error line on stderr");
    serde_json::from_str(line).expect("stderr ends with an error object")
}

fn read_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn gen_digest_is_deterministic_and_file_reloads() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let args = ["--out-dir", out, "--seed", "42", "gen", "--d", "6", "--n-per-class", "25", "--cov", "toeplitz"];
    let a = run(&args);
    assert!(a.status.success());
    let first = std::fs::read(dir.path().join("synthetic.csv")).unwrap();
    let b = run(&args);
    assert_eq!(stdout(&a), stdout(&b));
    assert_eq!(first, std::fs::read(dir.path().join("synthetic.csv")).unwrap());
    let digest = stdout(&a).split_whitespace().next().unwrap().to_string();
    assert_eq!(digest.len(), 64);
    assert_eq!(
        digest,
        rmt_ensemble::data::file_sha256(dir.path().join("synthetic.csv")).unwrap()
    );

    let spec = SyntheticSpec::new(6, 25, CovarianceKind::Toeplitz { rho: 0.5 }, 42).unwrap();
    let expected = generate_synthetic(&spec).unwrap();
    let loaded = load_csv(dir.path().join("synthetic.csv"), &CsvOptions::default()).unwrap();
    assert_eq!(loaded.dataset, expected);

    let other = run(&["--out-dir", out, "--seed", "43", "gen", "--d", "6", "--n-per-class", "25"]);
    assert_ne!(stdout(&other).split_whitespace().next().unwrap(), digest);
}

#[test]
fn usage_errors_exit_two_with_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    for args in [
        vec!["--out-dir", out, "gen", "--cov", "toeplitz", "--rho", "1.5"],
        vec!["map", "--synthetic", "--no-such-flag"],
        vec!["map", "--synthetic", "--csv", "x.csv"],
        vec!["map"],
        vec!["map", "--synthetic", "--standardize"],
        vec!["curve", "--synthetic", "--lambda", "0"],
        vec!["--out-dir", out, "select", "--synthetic", "--d", "4", "--n-per-class", "10", "--m-min", "9", "--m-max", "9"],
    ] {
        let o = run(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        let e = error_json(&o);
        assert_eq!(e["error"]["category"], "usage", "{args:?}");
        assert_eq!(e["error"]["exit_code"], 2);
        assert!(!e["error"]["message"].as_str().unwrap().is_empty());
    }
}

#[test]
fn data_errors_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.csv");
    let o = run(&["map", "--csv", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(error_json(&o)["error"]["message"].as_str().unwrap().contains("missing.csv"));

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "a,b,label\n1,2,1\n3,oops,-1\n").unwrap();
    let o = run(&["curve", "--csv", bad.to_str().unwrap(), "--lambda", "0.1"]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(error_json(&o)["error"]["category"], "data");
}

#[test]
fn help_lists_every_flag() {
    let o = run(&["map", "--help"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for flag in [
        "--seed", "--jobs", "--out-dir", "--csv", "--synthetic", "--d ", "--n-per-class", "--mu-scale", "--cov", "--rho",
        "--m-min", "--m-max", "--lambda-min", "--lambda-max", "--lambda-points", "--reps", "--matrix", "--max-ratio",
    ] {
        assert!(text.contains(flag), "missing {flag}");
    }
}

const SMALL: [&str; 12] = [
    "--synthetic", "--d", "8", "--n-per-class", "40", "--m-max", "6", "--lambda-points", "4", "--reps", "3", "-v",
];

#[test]
fn map_files_share_axes_and_mark_absent_cells() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let mut args = vec!["--out-dir", out, "map"];
    args.extend(SMALL);
    args.extend(["--max-ratio", "0.25"]);
    let o = run(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let emp = read_rows(&dir.path().join("empirical_map.csv"));
    let theory = read_rows(&dir.path().join("theoretical_map.csv"));
    assert_eq!(emp[0], ["m", "lambda", "error", "std"]);
    assert_eq!(emp.len(), 1 + 6 * 4);
    assert_eq!(emp.len(), theory.len());
    for (e, t) in emp.iter().zip(&theory).skip(1) {
        assert_eq!(e[..2], t[..2]);
        let m: f64 = e[0].parse().unwrap();
        // n_train = 40, d = 8: d·m/n ≥ 0.25 from m = 2 on
        assert_eq!(t[2].is_empty(), 8.0 * m / 40.0 >= 0.25);
        assert!(!e[2].is_empty());
        let v: f64 = e[2].parse().unwrap();
        assert!((0.0..=1.0).contains(&v));
    }

    let mut args = vec!["--out-dir", out, "map", "--matrix"];
    args.extend(SMALL);
    assert!(run(&args).status.success());
    let m = read_rows(&dir.path().join("theoretical_map.csv"));
    assert_eq!(m.len(), 7);
    assert!(m.iter().all(|r| r.len() == 5));
    assert_eq!(m[0][0], "m");
    assert_eq!(read_rows(&dir.path().join("empirical_map_std.csv")).len(), 7);
}

#[test]
fn curve_rows_are_aligned() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&[
        "--out-dir", out, "curve", "--synthetic", "--d", "8", "--n-per-class", "40", "--lambda", "0.1", "--m-min", "2",
        "--m-max", "7", "--reps", "2",
    ]);
    assert!(o.status.success());
    let rows = read_rows(&dir.path().join("curve.csv"));
    assert_eq!(rows[0], ["m", "lambda", "empirical_error", "empirical_std", "theoretical_error"]);
    let ms: Vec<&str> = rows[1..].iter().map(|r| r[0].as_str()).collect();
    assert_eq!(ms, ["2", "3", "4", "5", "6", "7"]);
    assert!(rows[1..].iter().all(|r| r.len() == 5 && r[1] == "0.1" && r.iter().all(|c| !c.is_empty())));
}

fn select(out: &str, jobs: &str) -> (SelectionReport, String) {
    let mut args = vec!["--out-dir", out, "--seed", "5", "--jobs", jobs, "select"];
    args.extend(SMALL);
    let o = run(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let path = Path::new(out).join("selection_report.json");
    assert!(stdout(&o).contains(path.to_str().unwrap()));
    let text = std::fs::read_to_string(&path).unwrap();
    (SelectionReport::from_json(&text).unwrap(), text)
}

#[test]
fn select_report_is_valid_reproducible_and_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (report, text) = select(out, "1");

    let schema: serde_json::Value = serde_json::from_str(SELECTION_REPORT_SCHEMA).unwrap();
    let instance: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!(jsonschema::validator_for(&schema).unwrap().is_valid(&instance));

    // same pipeline through the library: holdout split, plug-in model, argmin
    let data = generate_synthetic(&SyntheticSpec::new(8, 40, CovarianceKind::Identity, 5).unwrap()).unwrap();
    let (selection_set, _) = stratified_split(&data, 0.8, rng::derive_seed(5, "holdout", &[])).unwrap();
    let cfg = EstimationConfig {
        bootstrap_reps: 100,
        seed: rng::derive_seed(5, "bootstrap", &[]),
        shrinkage_override: None,
    };
    let model = estimate_model(&selection_set, &cfg).unwrap().model;
    let grid = SearchGrid::from_ranges(1, 6, 1e-4, 10.0, 4).unwrap();
    let s = select_theoretical(&model, selection_set.n(), &grid).unwrap();
    assert_eq!((report.best_m, report.best_lambda, report.best_predicted_error), (s.m, s.lambda, s.error));

    let (again, _) = select(out, "2");
    assert_eq!(again.digest(), report.digest());
    let (mut a, mut b) = (report.clone(), again.clone());
    a.volatile = Default::default();
    b.volatile = Default::default();
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
}
