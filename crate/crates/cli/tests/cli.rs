use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde_json::Value;
use tempfile::TempDir;

fn lcop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lcop")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = lcop(args);
    assert!(out.status.success(), "lcop {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(path: PathBuf) -> Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

fn csv_rows(path: PathBuf) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(str::to_string).collect();
    let rows = lines.map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect();
    (header, rows)
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

/// A simulated setting-1 dataset with `n` rows.
fn simulated(tmp: &TempDir, n: usize, seed: u64) -> PathBuf {
    let out = tmp.path().join(format!("sim_{n}_{seed}"));
    ok(&["simulate", "--setting", "1", "--seed", &seed.to_string(), "--n", &n.to_string(), "--out", s(&out)]);
    out.join("data.csv")
}

#[test]
fn simulate_is_deterministic_and_complete() {
    let tmp = TempDir::new().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for dir in [&a, &b] {
        ok(&["simulate", "--setting", "1", "--seed", "7", "--out", s(dir)]);
    }
    for file in ["data.csv", "truth.csv", "truth.json", "manifest.json"] {
        assert_eq!(fs::read(a.join(file)).unwrap(), fs::read(b.join(file)).unwrap(), "{file} differs");
    }
    let data = fs::read_to_string(a.join("data.csv")).unwrap();
    assert_eq!(data.lines().next().unwrap(), "y,x1,x2,x3,w1");
    assert_eq!(data.lines().count() - 1, 1200);
    let truth = fs::read_to_string(a.join("truth.csv")).unwrap();
    assert_eq!(truth.lines().count() - 1, 1200);
    for line in truth.lines().skip(1) {
        let label = line.split(',').nth(1).unwrap();
        assert!(label == "1" || label == "2");
    }
    let manifest = json(a.join("manifest.json"));
    assert_eq!(manifest["command"], "simulate");
    assert_eq!(manifest["config"]["alpha"], serde_json::json!([-0.3, 1.5]));
}

#[test]
fn fit_defaults_echo_prior_and_keep_ten_thousand_draws() {
    let tmp = TempDir::new().unwrap();
    let data = simulated(&tmp, 150, 3);
    let out = tmp.path().join("fit");
    ok(&["fit", "--data", s(&data), "--out", s(&out)]);
    let (header, rows) = csv_rows(out.join("draws.csv"));
    assert_eq!(rows.len(), 10_000);
    assert_eq!(header.len(), 2 + 8 + 2);
    let m = json(out.join("manifest.json"));
    let prior = &m["config"]["prior"];
    assert_eq!(prior["alpha"]["mean"], serde_json::json!([0.0, 0.0]));
    assert_eq!(prior["alpha"]["cov"], serde_json::json!([[3.0, 0.0], [0.0, 3.0]]));
    assert_eq!(prior["beta"][0]["cov"][2][2], 1.0);
    assert_eq!(prior["beta"][1]["mean"], serde_json::json!([0.0, 0.0, 0.0, 0.0]));
    // IG(v/2, d/2) with v = 8.6, d = 2.6 is IG(shape 4.3, scale 1.3)
    assert_eq!(prior["v"], 8.6);
    assert_eq!(prior["d"], 2.6);
    assert_eq!(m["config"]["run"]["n_iter"], 11_000);
    assert_eq!(m["config"]["run"]["burn_in"], 1_000);
    assert_eq!(m["relabeled"], true);
    assert!(m["outputs"]["draws.csv"].is_string());
    assert!(out.join("timing.json").exists());
    let summary = json(out.join("summary.json"));
    assert_eq!(summary["n_draws"], 10_000);
}

#[test]
fn fit_is_reproducible_byte_for_byte() {
    let tmp = TempDir::new().unwrap();
    let data = simulated(&tmp, 200, 4);
    let cfg = write_config(tmp.path(), "c.json", r#"{"run": {"n_iter": 400, "burn_in": 100, "seed": 11}}"#);
    for sampler in ["collapsed", "full"] {
        let a = tmp.path().join(format!("a_{sampler}"));
        let b = tmp.path().join(format!("b_{sampler}"));
        for dir in [&a, &b] {
            ok(&["fit", "--data", s(&data), "--config", s(&cfg), "--sampler", sampler, "--out", s(dir)]);
        }
        for file in ["draws.csv", "summary.json", "manifest.json"] {
            assert_eq!(fs::read(a.join(file)).unwrap(), fs::read(b.join(file)).unwrap(), "{sampler}: {file} differs");
        }
        assert_eq!(csv_rows(a.join("draws.csv")).1.len(), 300);
    }
}

#[test]
fn samplers_agree_within_monte_carlo_error() {
    let tmp = TempDir::new().unwrap();
    let data = simulated(&tmp, 600, 5);
    let cfg = write_config(tmp.path(), "c.json", r#"{"run": {"n_iter": 4000, "burn_in": 500}}"#);
    let mut summaries = Vec::new();
    for sampler in ["collapsed", "full"] {
        let out = tmp.path().join(sampler);
        ok(&["fit", "--data", s(&data), "--config", s(&cfg), "--sampler", sampler, "--out", s(&out)]);
        summaries.push(json(out.join("summary.json")));
    }
    let (a, b) = (&summaries[0]["params"], &summaries[1]["params"]);
    for k in 0..a.as_array().unwrap().len() {
        let se = |p: &Value| p["sd"].as_f64().unwrap() / p["ess"].as_f64().unwrap().sqrt();
        let pooled = (se(&a[k]).powi(2) + se(&b[k]).powi(2)).sqrt();
        let diff = (a[k]["mean"].as_f64().unwrap() - b[k]["mean"].as_f64().unwrap()).abs();
        assert!(diff < 4.0 * pooled, "{}: |{diff}| vs pooled se {pooled}", a[k]["name"]);
    }
}

fn small_fit(tmp: &TempDir) -> (PathBuf, PathBuf) {
    let data = simulated(tmp, 300, 8);
    let cfg = write_config(tmp.path(), "small.json", r#"{"run": {"n_iter": 500, "burn_in": 100}}"#);
    let out = tmp.path().join("fit");
    ok(&["fit", "--data", s(&data), "--config", s(&cfg), "--out", s(&out)]);
    (data, out.join("draws.csv"))
}

#[test]
fn effects_close_per_class_and_draw() {
    let tmp = TempDir::new().unwrap();
    let (data, draws) = small_fit(&tmp);
    let out = tmp.path().join("eff");
    ok(&["effects", "--draws", s(&draws), "--data", s(&data), "--covariate", "x2", "--out", s(&out)]);
    let (header, rows) = csv_rows(out.join("effects_draws.csv"));
    assert_eq!(header.len(), 1 + 2 * 3);
    assert_eq!(rows.len(), 400);
    for row in &rows {
        for class in 0..2 {
            let total: f64 = row[1 + 3 * class..4 + 3 * class].iter().sum();
            assert!(total.abs() <= 1e-10, "class {} sums to {total}", class + 1);
        }
    }
    let summary = json(out.join("effects.json"));
    assert!(summary["max_abs_category_sum"].as_f64().unwrap() <= 1e-10);
    assert_eq!(summary["applied"]["kind"], "shift");

    let zero = tmp.path().join("zero");
    ok(&["effects", "--draws", s(&draws), "--data", s(&data), "--covariate", "x1", "--shift", "0", "--out", s(&zero)]);
    let (_, rows) = csv_rows(zero.join("effects_draws.csv"));
    assert!(rows.iter().all(|r| r[1..].iter().all(|&v| v == 0.0)));
}

#[test]
fn avgprob_sums_to_one_per_draw() {
    let tmp = TempDir::new().unwrap();
    let (data, draws) = small_fit(&tmp);
    let out = tmp.path().join("avg");
    ok(&["avgprob", "--draws", s(&draws), "--data", s(&data), "--out", s(&out)]);
    let (_, rows) = csv_rows(out.join("avgprob_draws.csv"));
    assert_eq!(rows.len(), 400);
    for row in &rows {
        for class in 0..2 {
            let total: f64 = row[1 + 3 * class..4 + 3 * class].iter().sum();
            assert!((total - 1.0).abs() <= 1e-12);
        }
    }
}

#[test]
fn manifest_mismatch_is_refused() {
    let tmp = TempDir::new().unwrap();
    let (data, draws) = small_fit(&tmp);
    // a different dataset under the same columns
    let other = simulated(&tmp, 300, 9);
    let out = tmp.path().join("x");
    let r = lcop(&["avgprob", "--draws", s(&draws), "--data", s(&other), "--out", s(&out)]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("not the dataset"));

    // a tampered draws file
    let mut text = fs::read_to_string(&draws).unwrap();
    text.push_str(&text.lines().nth(1).unwrap().to_string());
    text.push('\n');
    fs::write(&draws, text).unwrap();
    let r = lcop(&["avgprob", "--draws", s(&draws), "--data", s(&data), "--out", s(&out)]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("modified"));
}

#[test]
fn schema_violations_report_coordinates() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("o");
    let bad = tmp.path().join("missing.csv");
    fs::write(&bad, "y,x1,w1\n1,0.5,0.1\n2,,0.3\n3,0.1,0.2\n").unwrap();
    let r = lcop(&["fit", "--data", s(&bad), "--out", s(&out)]);
    assert_eq!(r.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&r.stderr);
    assert!(msg.contains("line 3") && msg.contains("'x1'") && msg.contains("missing"), "{msg}");

    let bad = tmp.path().join("header.csv");
    fs::write(&bad, "y,x1,v1\n1,0.5,0.1\n").unwrap();
    let r = lcop(&["fit", "--data", s(&bad), "--out", s(&out)]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("v1"));

    let bad = tmp.path().join("label.csv");
    fs::write(&bad, "y,x1,w1\n1,0.5,0.1\nhigh,0.2,0.3\n").unwrap();
    let r = lcop(&["fit", "--data", s(&bad), "--out", s(&out)]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("line 3, column 'y'"));

    let cfg = write_config(tmp.path(), "bad.json", r#"{"run": {"n_iter": 10, "burn_in": 10}}"#);
    let data = simulated(&tmp, 100, 1);
    let r = lcop(&["fit", "--data", s(&data), "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(r.status.code(), Some(2));
    let cfg = write_config(tmp.path(), "unknown.json", r#"{"sampler": "full"}"#);
    let r = lcop(&["fit", "--data", s(&data), "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn unwritable_output_is_an_io_error() {
    let tmp = TempDir::new().unwrap();
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "").unwrap();
    let r = lcop(&["simulate", "--setting", "2", "--out", s(&blocker.join("sub"))]);
    assert_eq!(r.status.code(), Some(1));
}

#[test]
fn arbitrary_labels_are_mapped_and_recorded() {
    let tmp = TempDir::new().unwrap();
    let data = simulated(&tmp, 200, 2);
    let text = fs::read_to_string(&data).unwrap();
    let mut relabeled = String::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            relabeled.push_str(line);
        } else {
            let (y, rest) = line.split_once(',').unwrap();
            relabeled.push_str(&format!("{},{rest}", 10 * y.parse::<i64>().unwrap()));
        }
        relabeled.push('\n');
    }
    let path = tmp.path().join("labels.csv");
    fs::write(&path, relabeled).unwrap();
    let cfg = write_config(tmp.path(), "c.json", r#"{"run": {"n_iter": 300, "burn_in": 100}}"#);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    ok(&["fit", "--data", s(&data), "--config", s(&cfg), "--out", s(&a)]);
    ok(&["fit", "--data", s(&path), "--config", s(&cfg), "--out", s(&b)]);
    assert_eq!(json(b.join("manifest.json"))["category_labels"], serde_json::json!([10, 20, 30]));
    assert_eq!(fs::read(a.join("draws.csv")).unwrap(), fs::read(b.join("draws.csv")).unwrap());
}

#[test]
fn compare_prefers_the_generating_specification() {
    let tmp = TempDir::new().unwrap();
    let data = simulated(&tmp, 500, 12);
    let run = r#""run": {"n_iter": 1500, "burn_in": 300}"#;
    let full = write_config(tmp.path(), "full.json", &format!("{{{run}}}"));
    let reduced = write_config(tmp.path(), "reduced.json", &format!(r#"{{{run}, "model": {{"w": []}}}}"#));
    let out = tmp.path().join("cmp");
    ok(&["compare", "--data", s(&data), "--config", s(&reduced), "--config", s(&full), "--seed", "3", "--out", s(&out)]);
    let c = json(out.join("compare.json"));
    assert_eq!(c["selected"], 2);
    let bf = &c["log_bayes_factors"];
    let ab = bf[0][1].as_f64().unwrap();
    assert_eq!(ab, -bf[1][0].as_f64().unwrap());
    assert!(ab < 0.0);
    assert_eq!(c["models"][0]["w_columns"], serde_json::json!([]));
    let ml = &c["models"][1]["marginal_likelihood"];
    let assembled = ml["log_likelihood"].as_f64().unwrap() + ml["log_prior"].as_f64().unwrap()
        - ml["log_ordinate_alpha"]["log_value"].as_f64().unwrap()
        - ml["log_ordinate_beta"]["log_value"].as_f64().unwrap()
        - ml["log_ordinate_sigma2"]["log_value"].as_f64().unwrap();
    assert!((assembled - ml["log_ml"].as_f64().unwrap()).abs() < 1e-9);
}

#[test]
fn diag_on_white_noise_reports_full_ess() {
    let tmp = TempDir::new().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let g = 5000;
    let mut text = String::from("a,b\n");
    for _ in 0..g {
        let (a, b): (f64, f64) = (StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng));
        text.push_str(&format!("{a},{b}\n"));
    }
    let draws = tmp.path().join("iid.csv");
    fs::write(&draws, text).unwrap();
    let out = tmp.path().join("diag");
    ok(&["diag", "--draws", s(&draws), "--out", s(&out)]);
    let d = json(out.join("diag.json"));
    for p in d["params"].as_array().unwrap() {
        let ess = p["ess"].as_f64().unwrap();
        assert!((ess - g as f64).abs() <= 0.1 * g as f64, "ess {ess}");
        assert!(ess <= g as f64);
    }
    let table = fs::read_to_string(out.join("diag.csv")).unwrap();
    assert!(table.starts_with("name,mean,sd,ess,acf_1,"));
}

#[test]
fn diag_checks_fit_outputs_against_their_manifest() {
    let tmp = TempDir::new().unwrap();
    let (_, draws) = small_fit(&tmp);
    let out = tmp.path().join("diag");
    ok(&["diag", "--draws", s(&draws), "--out", s(&out)]);
    let d = json(out.join("diag.json"));
    assert_eq!(d["n_draws"], 400);
    fs::write(&draws, fs::read_to_string(&draws).unwrap().replacen('1', "2", 1)).unwrap();
    assert_eq!(lcop(&["diag", "--draws", s(&draws), "--out", s(&out)]).status.code(), Some(2));
}
