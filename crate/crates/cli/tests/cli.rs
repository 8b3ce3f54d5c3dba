use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::{json, Value};
use tempfile::TempDir;

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn read_config(name: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(config_path(name)).unwrap()).unwrap()
}

struct Run {
    code: i32,
    stderr: String,
    report: Option<Value>,
    raw: Option<String>,
}

fn run_file(command: &str, input: &Path, dir: &Path, extra: &[&str]) -> Run {
    let output = dir.join("report.json");
    let _ = std::fs::remove_file(&output);
    let out = Command::new(env!("CARGO_BIN_EXE_uqi"))
        .arg(command)
        .arg("--input")
        .arg(input)
        .arg("--output")
        .arg(&output)
        .args(extra)
        .output()
        .unwrap();
    let raw = std::fs::read_to_string(&output).ok();
    Run {
        code: out.status.code().unwrap(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
        report: raw.as_deref().map(|s| serde_json::from_str(s).unwrap()),
        raw,
    }
}

fn run_value(command: &str, cfg: &Value, dir: &Path, extra: &[&str]) -> Run {
    let input = dir.join("config.json");
    std::fs::write(&input, serde_json::to_string(cfg).unwrap()).unwrap();
    run_file(command, &input, dir, extra)
}

fn mat(rows: &[&[f64]]) -> Value {
    json!(rows
        .iter()
        .map(|r| r.iter().map(|&x| json!([x, 0.0])).collect::<Vec<_>>())
        .collect::<Vec<_>>())
}

fn sx() -> Value {
    mat(&[&[0.0, 1.0], &[1.0, 0.0]])
}

fn sz() -> Value {
    mat(&[&[1.0, 0.0], &[0.0, -1.0]])
}

fn expect_invalid(run: &Run, field: &str) {
    assert_eq!(run.code, 3, "{}", run.stderr);
    assert!(run.stderr.contains(field), "{} does not name {field}", run.stderr);
    assert!(run.raw.is_none(), "no report on failure");
}

#[test]
fn analyze_reports_verdicts() {
    let dir = TempDir::new().unwrap();
    let r = run_file("analyze", &config_path("analyze.json"), dir.path(), &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let report = r.report.unwrap();
    assert_eq!(report["results"]["controllable"], true);
    assert_eq!(report["results"]["traceless_dim"], 15);
    assert_eq!(report["command"], "analyze");
    assert!(report["wall_time"].is_number());
    assert!(report["artifact_version"].is_string());

    // H=σx, A=σz preserves a symmetry: the algebra is 10-dimensional.
    let r = run_value("analyze", &json!({"H": sx(), "A": sz()}), dir.path(), &[]);
    assert_eq!(r.report.unwrap()["results"]["traceless_dim"], 10);
}

#[test]
fn bridge_reports_verdict() {
    let dir = TempDir::new().unwrap();
    let r = run_file("bridge", &config_path("bridge.json"), dir.path(), &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(r.report.unwrap()["results"]["traceless_dim"], 63);
}

#[test]
fn measure_with_zero_generator_always_says_yes() {
    let dir = TempDir::new().unwrap();
    let mut cfg = read_config("measure.json");
    cfg["G"] = mat(&[&[0.0, 0.0], &[0.0, 0.0]]);
    let r = run_value("measure", &cfg, dir.path(), &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let results = &r.report.unwrap()["results"];
    assert_eq!(results["p_plus"], 1.0);
    for rec in results["records"].as_array().unwrap() {
        assert_eq!(rec["outcome"], "plus");
    }
}

#[test]
fn sequential_measure_reports_exact_probabilities() {
    let dir = TempDir::new().unwrap();
    let r = run_file("measure", &config_path("measure-sequential.json"), dir.path(), &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let results = &r.report.unwrap()["results"];
    let p: Vec<f64> = results["probabilities"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    for (got, want) in p.iter().zip([0.35, 0.30, 0.35]) {
        assert!((got - want).abs() < 1e-9);
    }
    assert_eq!(results["records"].as_array().unwrap().len(), 10);
}

#[test]
fn scan_writes_identical_csv_for_same_seed() {
    let dir = TempDir::new().unwrap();
    let mut cfg = read_config("scan.json");
    cfg["durations"] = json!([0.5, 1.0]);
    cfg["trials"] = json!(1);
    cfg["synthesis"] = json!({"max_iters": 50});
    let csv = dir.path().join("trace.csv");
    let csv_arg = csv.to_str().unwrap();
    let first = run_value("scan", &cfg, dir.path(), &["--csv", csv_arg]);
    assert_eq!(first.code, 0, "{}", first.stderr);
    let a = std::fs::read(&csv).unwrap();
    let second = run_value("scan", &cfg, dir.path(), &["--csv", csv_arg]);
    let b = std::fs::read(&csv).unwrap();
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(!text.contains('\r'));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "duration,median_infidelity");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("0.5,"));
    assert_eq!(
        first.report.unwrap()["results"].to_string(),
        second.report.unwrap()["results"].to_string()
    );
}

#[test]
fn scan_csv_defaults_next_to_report() {
    let dir = TempDir::new().unwrap();
    let mut cfg = read_config("scan.json");
    cfg["durations"] = json!([0.5]);
    cfg["trials"] = json!(1);
    cfg["synthesis"] = json!({"max_iters": 5});
    let r = run_value("scan", &cfg, dir.path(), &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(dir.path().join("report.csv").exists());
}

#[test]
fn synthesize_reaches_target() {
    let dir = TempDir::new().unwrap();
    let r = run_file("synthesize", &config_path("synthesize.json"), dir.path(), &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let results = &r.report.unwrap()["results"];
    assert!(results["fidelity"].as_f64().unwrap() >= 0.999);
    assert_eq!(results["pulse"]["amps"].as_array().unwrap().len(), 60);
}

#[test]
fn network_commands_run() {
    let dir = TempDir::new().unwrap();
    let r = run_file("compile-run", &config_path("compile-run.json"), dir.path(), &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let results = &r.report.unwrap()["results"];
    assert!(results["fidelity"].as_f64().unwrap() > 1.0 - 1e-9);
    assert_eq!(results["compilation"]["pairwise_op_count"], 3);

    let r = run_file("transfer", &config_path("transfer.json"), dir.path(), &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let results = &r.report.unwrap()["results"];
    assert!(results["fidelity"].as_f64().unwrap() >= 0.98);
    assert_eq!(results["path"], json!([0, 1, 2]));
}

#[test]
fn parse_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("bad.json");
    std::fs::write(&input, "{ not json").unwrap();
    assert_eq!(run_file("analyze", &input, dir.path(), &[]).code, 2);
    assert_eq!(run_file("analyze", &dir.path().join("missing.json"), dir.path(), &[]).code, 2);
    // Ragged matrix rows are not a matrix at all.
    let ragged = json!({"H": [[[0.0, 0.0], [1.0, 0.0]], [[1.0, 0.0]]], "A": sz()});
    assert_eq!(run_value("analyze", &ragged, dir.path(), &[]).code, 2);
    let unknown = json!({"H": sx(), "A": sz(), "colour": 1});
    assert_eq!(run_value("analyze", &unknown, dir.path(), &[]).code, 2);
    let status = Command::new(env!("CARGO_BIN_EXE_uqi")).arg("frobnicate").output().unwrap();
    assert_eq!(status.status.code(), Some(2));
}

#[test]
fn validation_errors_exit_3_and_name_the_field() {
    let dir = TempDir::new().unwrap();
    let skew = mat(&[&[0.0, 5.0], &[-5.0, 0.0]]);
    expect_invalid(&run_value("analyze", &json!({"H": skew, "A": sz()}), dir.path(), &[]), "H");

    let mut cfg = read_config("transfer.json");
    cfg["network"]["links"] = json!([cfg["network"]["links"][0]]);
    expect_invalid(&run_value("transfer", &cfg, dir.path(), &[]), "links");

    let mut cfg = read_config("measure.json");
    cfg.as_object_mut().unwrap().remove("seed");
    expect_invalid(&run_value("measure", &cfg, dir.path(), &[]), "seed");

    expect_invalid(&run_file("measure", &config_path("analyze.json"), dir.path(), &[]), "command");
    expect_invalid(&run_file("measure", &config_path("measure.json"), dir.path(), &["--tol", "0.1"]), "--tol");

    let mut cfg = read_config("synthesize.json");
    cfg["synthesis"] = json!({"dt": -1.0});
    expect_invalid(&run_value("synthesize", &cfg, dir.path(), &[]), "synthesis.dt");

    let mut cfg = read_config("measure.json");
    cfg["rho"] = mat(&[&[1.0, 0.0], &[0.0, 1.0]]);
    expect_invalid(&run_value("measure", &cfg, dir.path(), &[]), "rho");

    let mut cfg = read_config("measure-sequential.json");
    cfg["kraus"] = json!([sz()]);
    let r = run_value("measure", &cfg, dir.path(), &[]);
    expect_invalid(&r, "kraus");
}

#[test]
fn runtime_failures_exit_4_without_output() {
    let dir = TempDir::new().unwrap();
    let r = run_file("transfer", &config_path("transfer.json"), dir.path(), &["--max-iters", "1"]);
    assert_eq!(r.code, 4, "{}", r.stderr);
    assert!(r.raw.is_none());
    let leftovers: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
    assert!(leftovers.is_empty(), "temporary files left behind");
}

#[test]
fn overrides_are_echoed() {
    let dir = TempDir::new().unwrap();
    let r = run_file(
        "synthesize",
        &config_path("synthesize.json"),
        dir.path(),
        &["--seed", "9", "--max-iters", "3", "--tol", "0.5"],
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    let cfg = &r.report.unwrap()["config"];
    assert_eq!(cfg["seed"], 9);
    assert_eq!(cfg["synthesis"]["seed"], 9);
    assert_eq!(cfg["synthesis"]["max_iters"], 3);
    assert_eq!(cfg["synthesis"]["target_infidelity"], 0.5);
    assert_eq!(cfg["command"], "synthesize");
}

/// Every stochastic command, run twice with one seed and once more from its own
/// echoed config, gives byte-identical results.
#[test]
fn reruns_and_echoed_configs_reproduce_results() {
    let dir = TempDir::new().unwrap();
    let mut scan = read_config("scan.json");
    scan["durations"] = json!([0.5, 1.0]);
    scan["trials"] = json!(2);
    scan["synthesis"] = json!({"max_iters": 20});
    let mut synth = read_config("synthesize.json");
    synth["synthesis"] = json!({"max_iters": 30});
    let mut transfer = read_config("transfer.json");
    transfer["pairwise"]["synthesis"]["max_iters"] = json!(400);
    let cases = [
        ("measure", read_config("measure.json")),
        ("measure", read_config("measure-sequential.json")),
        ("scan", scan),
        ("synthesize", synth),
        ("transfer", transfer),
        ("compile-run", read_config("compile-run.json")),
    ];
    for (command, cfg) in cases {
        let a = run_value(command, &cfg, dir.path(), &[]);
        assert_eq!(a.code, 0, "{command}: {}", a.stderr);
        let b = run_value(command, &cfg, dir.path(), &[]);
        let report = a.report.unwrap();
        let results = report["results"].to_string();
        assert_eq!(results, b.report.unwrap()["results"].to_string(), "{command}");
        let c = run_value(command, &report["config"], dir.path(), &[]);
        assert_eq!(c.code, 0, "{command}: {}", c.stderr);
        assert_eq!(results, c.report.unwrap()["results"].to_string(), "{command} from echo");
    }
}
