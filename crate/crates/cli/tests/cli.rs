use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;
use usable_info::{brute_force_arborescence, max_arborescence, EdgeWeightMatrix};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_usable-info"));
    c.env_remove("USABLE_INFO_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn")
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, body).unwrap();
    p
}

fn simulate(dir: &TempDir, name: &str, extra: &[&str]) -> PathBuf {
    let p = dir.path().join(name);
    let mut args = vec!["simulate", "-o", s(&p)];
    args.extend_from_slice(extra);
    ok(&args);
    p
}

#[test]
fn simulate_writes_headers_and_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let a = simulate(&dir, "a.csv", &["--scenario", "sim1", "--n", "50", "--seed", "7"]);
    let b = simulate(&dir, "b.csv", &["--scenario", "sim1", "--n", "50", "--seed", "7"]);
    let text = fs::read_to_string(&a).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 51);
    assert_eq!(lines[0].split(',').count(), 20 * 10);
    assert!(lines[0].starts_with("var0_0,var0_1,"));
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let truth = read_json(&dir.path().join("a.csv.truth.json"));
    assert_eq!(truth["command"], "simulate");
    assert_eq!(truth["seeds"], json!([7]));
    assert_eq!(truth["config"]["scenario"]["name"], "sim1");
    assert_eq!(truth["config"]["n"], 50);
    assert_eq!(truth["results"]["truth"]["tree"]["root"], 0);
}

#[test]
fn seed_from_environment_matches_flag() {
    let dir = TempDir::new().unwrap();
    let a = simulate(&dir, "a.csv", &["--scenario", "sim2", "--n", "20", "--seed", "11"]);
    let b = dir.path().join("b.csv");
    let out = bin()
        .args(["simulate", "--scenario", "sim2", "--n", "20", "-o", s(&b)])
        .env("USABLE_INFO_SEED", "11")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn missing_seed_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let out = run(&["simulate", "--scenario", "sim1", "--n", "10", "-o", s(&dir.path().join("x.csv"))]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("missing seed"), "{err}");
    assert!(err.contains("Usage:"), "{err}");
}

#[test]
fn flags_override_config_file() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "c.json", r#"{"scenario": "sim4", "n": 30, "seed": 1, "d": 2}"#);
    let p = simulate(&dir, "a.csv", &["--config", s(&cfg), "--n", "40"]);
    let text = fs::read_to_string(&p).unwrap();
    assert_eq!(text.lines().count(), 41);
    assert_eq!(text.lines().next().unwrap().split(',').count(), 7 * 2);
    let truth = read_json(&dir.path().join("a.csv.truth.json"));
    assert_eq!(truth["config"]["n"], 40);
}

#[test]
fn unknown_scenario_is_rejected() {
    let dir = TempDir::new().unwrap();
    for cmd in ["simulate", "sweep"] {
        let out = run(&[cmd, "--scenario", "sim9", "--seed", "1", "-o", s(&dir.path().join("x.csv"))]);
        assert_eq!(out.status.code(), Some(2), "{cmd}");
        assert!(stderr(&out).contains("sim9"));
    }
}

fn linear_pair_csv(dir: &TempDir) -> (PathBuf, f64) {
    let xs: Vec<f64> = (0..40).map(|i| (i as f64 * 0.37).sin() * 3.0 + i as f64 * 0.1).collect();
    let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x - 1.0).collect();
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let var = ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / ys.len() as f64;
    let mut body = String::from("var0_0,var1_0\n");
    for (x, y) in xs.iter().zip(&ys) {
        body.push_str(&format!("{x:.17e},{y:.17e}\n"));
    }
    (write(dir, "pair.csv", &body), var)
}

#[test]
fn estimate_perfectly_correlated_columns_gives_variance_of_y() {
    let dir = TempDir::new().unwrap();
    let (data, var) = linear_pair_csv(&dir);
    let out = ok(&["estimate", "--data", s(&data), "--x", "var0", "--y", "var1_0", "--family", "linear_gaussian"]);
    let rec = stdout_json(&out);
    let est = rec["results"]["point_estimate"].as_f64().unwrap();
    assert!((est - var).abs() <= 1e-9 * var, "{est} vs {var}");
    assert_eq!(rec["command"], "estimate");
    assert_eq!(rec["config"]["family"]["kind"], "linear_gaussian");
    assert_eq!(rec["results"]["holdout"], false);
}

#[test]
fn estimate_closed_form_half_width() {
    let dir = TempDir::new().unwrap();
    let (data, _) = linear_pair_csv(&dir);
    let out = ok(&[
        "estimate", "--data", s(&data), "--x", "var0", "--y", "var1", "--pac", "--kx", "1", "--ky", "1", "--delta", "0.1",
    ]);
    let rec = stdout_json(&out);
    let m = 4.0 + (2.0 * std::f64::consts::PI).ln();
    let expected = m / (4.0 * 40.0f64).sqrt() * (1.0 + 4.0 * (2.0 * 10.0f64.ln()).sqrt());
    let hw = rec["results"]["pac"]["half_width"].as_f64().unwrap();
    assert!((hw - expected).abs() < 1e-12, "{hw} vs {expected}");
    assert_eq!(rec["results"]["pac"]["bound_kind"], "corollary1");
    assert_eq!(rec["config"]["family"]["norm_radius"], 1.0);
}

#[test]
fn estimate_generic_bound_needs_b() {
    let dir = TempDir::new().unwrap();
    let (data, _) = linear_pair_csv(&dir);
    let out = run(&["estimate", "--data", s(&data), "--x", "var0", "--y", "var1", "--rademacher", "0.1"]);
    assert_eq!(out.status.code(), Some(2));
    let out = ok(&["estimate", "--data", s(&data), "--x", "var0", "--y", "var1", "--rademacher", "0.1", "--b", "3"]);
    let hw = stdout_json(&out)["results"]["pac"]["half_width"].as_f64().unwrap();
    let expected = 0.4 + 6.0 * (2.0 * 10.0f64.ln() / 40.0).sqrt();
    assert!((hw - expected).abs() < 1e-12);
}

#[test]
fn malformed_csv_is_a_data_error_with_line_number() {
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.csv", "var0_0,var1_0\n1,2\n3,abc\n4,5\n");
    let out = run(&["estimate", "--data", s(&bad), "--x", "var0", "--y", "var1"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));

    let missing = run(&["estimate", "--data", "/nonexistent/x.csv", "--x", "var0", "--y", "var1"]);
    assert_eq!(missing.status.code(), Some(3));
}

#[test]
fn unseen_symbol_on_holdout_is_a_numerical_failure() {
    let dir = TempDir::new().unwrap();
    let train = write(&dir, "train.csv", "var0_0:cat3,var1_0:cat3\n0,0\n1,1\n0,0\n1,1\n");
    let test = write(&dir, "test.csv", "var0_0:cat3,var1_0:cat3\n0,2\n1,1\n");
    let out = run(&[
        "estimate", "--data", s(&train), "--test-data", s(&test), "--x", "var0", "--y", "var1", "--family", "tabular",
    ]);
    assert_eq!(out.status.code(), Some(4), "{}", stderr(&out));

    let out = ok(&[
        "estimate", "--data", s(&train), "--test-data", s(&train), "--x", "var0", "--y", "var1", "--family", "tabular",
    ]);
    let rec = stdout_json(&out);
    assert_eq!(rec["results"]["holdout"], true);
    assert!((rec["results"]["point_estimate"].as_f64().unwrap() - 2f64.ln()).abs() < 1e-12);
}

#[test]
fn two_node_dataset_gives_single_edge_without_ratio() {
    let dir = TempDir::new().unwrap();
    let data = simulate(&dir, "two.csv", &["--scenario", "sim1", "--m", "2", "--d", "2", "--n", "100", "--seed", "3"]);
    let rec = stdout_json(&ok(&["tree", "--data", s(&data)]));
    let results = &rec["results"];
    assert_eq!(results["edges"].as_array().unwrap().len(), 1);
    assert!(results.get("wrong_edges_ratio").is_none());
    assert_eq!(results["weights"].as_array().unwrap().len(), 2);

    let truth = dir.path().join("two.csv.truth.json");
    let rec = stdout_json(&ok(&["tree", "--data", s(&data), "--truth", s(&truth)]));
    assert_eq!(rec["results"]["wrong_edges_ratio"], 0.0);
}

#[test]
fn sim1_tree_matches_golden() {
    let golden = read_json(&Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/tree_sim1_n1000_seed7.json"));
    let rec = stdout_json(&ok(&["tree", "--scenario", "sim1", "--n", "1000", "--seed", "7", "--method", "linear_gaussian"]));
    let results = &rec["results"];
    assert_eq!(results["wrong_edges_ratio"], 0.0);
    assert_eq!(results["tree"]["root"], golden["root"]);
    assert_eq!(results["tree"]["parents"], golden["parents"]);
    assert_eq!(rec["seeds"], json!([7]));
}

#[test]
fn tree_scores_agree_with_brute_force() {
    let dir = TempDir::new().unwrap();
    let scores = dir.path().join("w.csv");
    let rec = stdout_json(&ok(&[
        "tree", "--scenario", "sim1", "--m", "6", "--d", "3", "--n", "300", "--seed", "5", "--scores", s(&scores),
    ]));
    let rows: Vec<Vec<f64>> = fs::read_to_string(&scores)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    let w = EdgeWeightMatrix::from_rows(&rows).unwrap();
    let brute = brute_force_arborescence(&w).unwrap();
    let fast = max_arborescence(&w);
    assert!((brute.total_weight - fast.total_weight).abs() < 1e-9);
    let reported = rec["results"]["tree"]["total_weight"].as_f64().unwrap();
    assert!((reported - brute.total_weight).abs() < 1e-9);
}

#[test]
fn tree_needs_exactly_one_source() {
    let out = run(&["tree", "--method", "linear_gaussian"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["tree", "--scenario", "sim1", "--n", "50"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("missing seed"));
}

#[test]
fn sweep_is_long_format_and_schedule_independent() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let common = [
        "sweep", "--scenario", "sim1", "--m", "4", "--d", "2", "--sizes", "10,30", "--seed", "1", "--replicates", "3",
        "--methods", "linear_gaussian,polynomial_gaussian2",
    ];
    let mut args_a = common.to_vec();
    args_a.extend(["--jobs", "1", "-o", s(&a)]);
    let mut args_b = common.to_vec();
    args_b.extend(["--jobs", "3", "-o", s(&b)]);
    ok(&args_a);
    ok(&args_b);

    let text = fs::read_to_string(&a).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "scenario,family,N,seed,wrong_edges_ratio,total_weight");
    assert_eq!(lines.len(), 1 + 2 * 2 * 3);
    assert!(lines[1].starts_with("sim1,linear_gaussian,10,1,"));
    assert!(lines[12].starts_with("sim1,polynomial_gaussian2,30,3,"));
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let record = read_json(&dir.path().join("a.csv.run.json"));
    assert_eq!(record["command"], "sweep");
    assert_eq!(record["seeds"], json!([1, 2, 3]));
    assert_eq!(record["config"]["sizes"], json!([10, 30]));
    assert_eq!(record["results"]["means"].as_array().unwrap().len(), 4);
}

#[test]
fn sweep_rejects_zero_jobs() {
    let dir = TempDir::new().unwrap();
    let out = run(&["sweep", "--scenario", "sim1", "--seeds", "1", "--jobs", "0", "-o", s(&dir.path().join("x.csv"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn auc_cases() {
    let dir = TempDir::new().unwrap();
    let truth = write(&dir, "t.csv", "0,1,0\n0,0,1\n0,0,0\n");
    let perfect = write(&dir, "p.csv", "i,j,k\n0,0.9,0.1\n0.2,0,0.8\n0.3,0.1,0\n");
    let equal = write(&dir, "e.csv", "0,1,1\n1,0,1\n1,1,0\n");
    let rec = stdout_json(&ok(&["auc", "--scores", s(&perfect), "--truth", s(&truth)]));
    assert_eq!(rec["results"]["auc"], 1.0);
    assert_eq!(rec["results"]["positives"], 2);
    assert_eq!(rec["results"]["negatives"], 4);
    let rec = stdout_json(&ok(&["auc", "--scores", s(&equal), "--truth", s(&truth)]));
    assert_eq!(rec["results"]["auc"], 0.5);

    let small = write(&dir, "s.csv", "0,1\n1,0\n");
    assert_eq!(run(&["auc", "--scores", s(&small), "--truth", s(&truth)]).status.code(), Some(2));
    let non_binary = write(&dir, "n.csv", "0,2,0\n0,0,1\n0,0,0\n");
    assert_eq!(run(&["auc", "--scores", s(&perfect), "--truth", s(&non_binary)]).status.code(), Some(3));
    let bad = write(&dir, "b.csv", "0,1,0\n0,x,1\n0,0,0\n");
    let out = run(&["auc", "--scores", s(&bad), "--truth", s(&truth)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("line 2"));
}

#[test]
fn auc_accepts_tree_records() {
    let dir = TempDir::new().unwrap();
    let data = simulate(&dir, "d.csv", &["--scenario", "sim1", "--m", "5", "--d", "2", "--n", "500", "--seed", "2"]);
    let scores = dir.path().join("w.csv");
    ok(&["tree", "--data", s(&data), "--scores", s(&scores)]);
    let truth = dir.path().join("d.csv.truth.json");
    let rec = stdout_json(&ok(&["auc", "--scores", s(&scores), "--truth", s(&truth)]));
    assert_eq!(rec["results"]["positives"], 8);
    let directed = stdout_json(&ok(&["auc", "--scores", s(&scores), "--truth", s(&truth), "--mode", "directed"]));
    assert_eq!(directed["results"]["positives"], 4);
    assert!(rec["results"]["auc"].as_f64().unwrap() > 0.5);
}

#[test]
fn baselines_on_gaussian_pair() {
    let args = [
        "baselines", "--rho", "0.8", "--n", "1000", "--seed", "4", "--methods", "cpc,nwj,linear_gaussian",
        "--iterations", "100",
    ];
    let a = stdout_json(&ok(&args));
    let b = stdout_json(&ok(&args));
    assert_eq!(a["results"], b["results"]);
    let mi = a["results"]["mutual_information"].as_f64().unwrap();
    assert!((mi - (-0.5 * (1.0f64 - 0.64).ln())).abs() < 1e-12);
    let est = a["results"]["estimates"].as_array().unwrap();
    assert_eq!(est.len(), 3);
    assert_eq!(est[0]["method"], "cpc_bilinear");
    let cpc = est[0]["estimate"].as_f64().unwrap();
    assert!(cpc > 0.0 && cpc <= 64f64.ln());
    assert_eq!(a["config"]["batch"]["seed"], 4);

    assert_eq!(run(&["baselines", "--rho", "0.8", "--n", "100"]).status.code(), Some(2));
}

#[test]
fn baselines_on_data_columns() {
    let dir = TempDir::new().unwrap();
    let (data, _) = linear_pair_csv(&dir);
    let rec = stdout_json(&ok(&[
        "baselines", "--data", s(&data), "--x", "var0", "--y", "var1", "--seed", "1", "--methods", "nwj_quadratic",
        "--batch-size", "8", "--iterations", "20",
    ]));
    assert!(rec["results"].get("mutual_information").is_none());
    assert!(rec["results"]["estimates"][0]["estimate"].as_f64().unwrap().is_finite());
}

fn sweep_means(record: &Value) -> Vec<f64> {
    record["results"]["means"]
        .as_array()
        .unwrap()
        .iter()
        .map(|m| m["mean_wrong_edges_ratio"].as_f64().unwrap())
        .collect()
}

fn inversions(means: &[f64]) -> usize {
    means.windows(2).filter(|w| w[1] > w[0] + 1e-12).count()
}

#[test]
fn default_sim1_sweep_shape_and_trend() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("sim1.csv");
    ok(&["sweep", "--scenario", "sim1", "--seed", "0", "-o", s(&out)]);
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 1 + 10 * 6);
    let means = sweep_means(&read_json(&dir.path().join("sim1.csv.run.json")));
    assert_eq!(means.len(), 6);
    assert!(inversions(&means) <= 1, "{means:?}");
}

#[test]
fn sim3_sweep_error_falls_with_n() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("sim3.csv");
    ok(&["sweep", "--scenario", "sim3", "--seed", "0", "--sizes", "30,100,300,1000", "-o", s(&out)]);
    let means = sweep_means(&read_json(&dir.path().join("sim3.csv.run.json")));
    assert!(inversions(&means) <= 1, "{means:?}");
    assert!(means[0] > 0.3 && means[3] < 0.05, "{means:?}");
}
