use std::path::Path;
use std::process::{Command, Output};

use brc_cli::config::{CustomProblem, RunConfig};
use brc_cli::manifest::{self, RunManifest};
use brc_cli::tables::{self, AgentFile};
use brc_core::diag::{build_diag, diag_model, Boundedness, DiagConfig, MONITOR, POSITIVE};
use brc_core::{ModelEnsemble, Trajectory};
use serde_json::Value;
use tempfile::TempDir;

fn brc(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_brc"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], cwd: &Path) -> Output {
    let out = brc(args, cwd);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn write_json(path: &Path, value: &Value) {
    std::fs::write(path, serde_json::to_vec(value).unwrap()).unwrap();
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

fn error_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).expect("stderr carries error JSON")
}

/// Solves the default DIAG agent into `dir/agent`.
fn solved(dir: &Path) {
    ok(&["solve", "--out", "agent"], dir);
}

#[test]
fn solve_writes_tables_curves_and_manifest() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    write_json(
        &d.join("very_flexible.json"),
        &serde_json::json!({"boundedness": {"alpha": 1e-3, "beta": 1e3, "eta": 1e-3}}),
    );
    ok(&["solve", "--config", "very_flexible.json", "--out", "vf"], d);
    let m = manifest::verify(&d.join("vf")).unwrap();
    let names: Vec<&str> = m.outputs.iter().map(|f| f.path.as_str()).collect();
    assert_eq!(
        names,
        ["agent.json", "convergence.json", "k.csv", "policy.csv", "specification.csv", "values.csv"]
    );
    assert_eq!(m.command, "solve");
    assert_eq!(m.config["boundedness"]["alpha"], 1e-3);
    assert_eq!(m.inputs.len(), 1);
    let policy = read(&d.join("vf/policy.csv"));
    let lines: Vec<&str> = policy.lines().collect();
    assert_eq!(lines[0], "node,z_diseased,z_healthy,pi_monitor,pi_declare_diseased,pi_declare_healthy");
    assert_eq!(lines.len(), 102);
    for line in &lines[1..] {
        let p: f64 = line.split(',').skip(3).map(|v| v.parse::<f64>().unwrap()).sum();
        assert!((p - 1.0).abs() < 1e-12);
    }
    let convergence: Value = serde_json::from_str(&read(&d.join("vf/convergence.json"))).unwrap();
    assert!(convergence["residual"].as_f64().unwrap() < 1e-6);
    assert!(d.join("vf/run_timing.json").exists());
}

#[test]
fn stored_agent_reloads_to_the_same_tables() {
    let dir = TempDir::new().unwrap();
    solved(dir.path());
    let text = read(&dir.path().join("agent/agent.json"));
    let file: AgentFile = serde_json::from_str(&text).unwrap();
    let (setting, agent) = tables::load_agent(&dir.path().join("agent")).unwrap();
    let again = AgentFile::from_agent(&setting, &agent);
    assert_eq!(again, file);
    let p = build_diag(&DiagConfig::default()).unwrap();
    assert_eq!(file.params, p.params_with(Boundedness::BASELINE));
}

#[test]
fn solving_twice_gives_identical_hashes() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(&["solve", "--out", "a", "--resolution", "40"], d);
    ok(&["solve", "--out", "b", "--resolution", "40"], d);
    assert_eq!(read(&d.join("a/manifest.json")), read(&d.join("b/manifest.json")));
    let m: RunManifest = serde_json::from_str(&read(&d.join("a/manifest.json"))).unwrap();
    assert_eq!(m.config["solver"]["resolution"], 40);
}

#[test]
fn invalid_config_exits_two_with_error_json() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    write_json(&d.join("bad.json"), &serde_json::json!({"diag": {"discount": 1.5}}));
    let out = brc(&["solve", "--config", "bad.json", "--out", "x"], d);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["error"]["kind"], "config");
    write_json(&d.join("typo.json"), &serde_json::json!({"boundednes": {}}));
    let out = brc(&["solve", "--config", "typo.json", "--out", "x"], d);
    assert_eq!(out.status.code(), Some(2));
    // Parameters that fail validation report each finding.
    let p = build_diag(&DiagConfig::default()).unwrap();
    let mut params = p.params.clone();
    params.discount = 1.5;
    let custom = CustomProblem {
        setting: p.setting.clone(),
        params,
        truth: p.truth.clone(),
        max_episode_length: 50,
    };
    write_json(&d.join("neg.json"), &serde_json::json!({"custom": custom}));
    let out = brc(&["solve", "--config", "neg.json", "--out", "x"], d);
    assert_eq!(out.status.code(), Some(2));
    assert!(!error_json(&out)["error"]["findings"].as_array().unwrap().is_empty());
    assert!(!d.join("x/manifest.json").exists());
}

#[test]
fn convergence_failure_exits_three() {
    let dir = TempDir::new().unwrap();
    write_json(&dir.path().join("c.json"), &serde_json::json!({"solver": {"max_iterations": 2}}));
    let out = brc(&["solve", "--config", "c.json", "--out", "x"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error_json(&out)["error"]["kind"], "convergence");
}

#[test]
fn missing_inputs_exit_four() {
    let dir = TempDir::new().unwrap();
    let out = brc(&["simulate", "--agent", "nowhere", "--out", "x"], dir.path());
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(error_json(&out)["error"]["kind"], "io");
    let out = brc(&["solve", "--config", "missing.json", "--out", "x"], dir.path());
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn simulate_writes_reproducible_json_lines() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    solved(d);
    ok(&["simulate", "--agent", "agent", "--out", "s1", "--seed", "9"], d);
    ok(&["simulate", "--agent", "agent", "--out", "s2", "--seed", "9", "--threads", "1"], d);
    ok(&["simulate", "--agent", "agent", "--out", "s3", "--seed", "10"], d);
    let a = read(&d.join("s1/dataset.jsonl"));
    assert_eq!(a.lines().count(), 1000);
    assert_eq!(a, read(&d.join("s2/dataset.jsonl")));
    assert_ne!(a, read(&d.join("s3/dataset.jsonl")));
    assert_eq!(read(&d.join("s1/manifest.json")), read(&d.join("s2/manifest.json")));
    let data = tables::read_dataset(&d.join("s1/dataset.jsonl")).unwrap();
    assert!(data.iter().all(|t| !t.is_empty() && t.len() <= 50));
    let m = manifest::verify(&d.join("s1")).unwrap();
    assert_eq!(m.seeds["master"], 9);
}

#[test]
fn simulate_zero_gives_an_empty_dataset() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    solved(d);
    ok(&["simulate", "--agent", "agent", "--out", "s", "--n", "0"], d);
    assert_eq!(read(&d.join("s/dataset.jsonl")), "");
    let m = manifest::verify(&d.join("s")).unwrap();
    assert_eq!(m.outputs[0].bytes, 0);
}

#[test]
fn simulate_rejects_an_agent_for_another_problem() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    solved(d);
    let p = build_diag(&DiagConfig::default()).unwrap();
    let mut setting = p.setting.clone();
    setting.state_labels[0] = "ill".into();
    let custom = CustomProblem {
        setting,
        params: p.params.clone(),
        truth: p.truth.clone(),
        max_episode_length: 50,
    };
    write_json(&d.join("other.json"), &serde_json::json!({"custom": custom}));
    let out = brc(&["simulate", "--config", "other.json", "--agent", "agent", "--out", "s"], d);
    assert_eq!(out.status.code(), Some(2));
}

fn small_dataset(d: &Path) {
    solved(d);
    ok(&["simulate", "--agent", "agent", "--out", "sim", "--n", "100"], d);
    write_json(
        &d.join("short.json"),
        &serde_json::json!({"inference": {"steps_after_burnin": 100, "burnin": 20, "thinning": 1}}),
    );
}

#[test]
fn infer_writes_posterior_and_summary() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    small_dataset(d);
    ok(&["infer", "--config", "short.json", "--dataset", "sim/dataset.jsonl", "--out", "inf"], d);
    let m = manifest::verify(&d.join("inf")).unwrap();
    let names: Vec<&str> = m.outputs.iter().map(|f| f.path.as_str()).collect();
    assert_eq!(names, ["posterior.csv", "summary.json"]);
    let posterior = read(&d.join("inf/posterior.csv"));
    assert_eq!(posterior.lines().next().unwrap(), "chain,step,log_alpha,log_likelihood,accepted");
    assert_eq!(posterior.lines().count(), 101);
    let summary: Value = serde_json::from_str(&read(&d.join("inf/summary.json"))).unwrap();
    assert_eq!(summary["parameters"][0]["name"], "log_alpha");
    assert_eq!(summary["chains"][0]["stats"]["proposals"], 120);
}

#[test]
fn infer_joint_targets_emit_a_histogram() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    small_dataset(d);
    let args = [
        "infer", "--config", "short.json", "--dataset", "sim/dataset.jsonl", "--out", "inf",
        "--targets", "log_beta,log_eta", "--chains", "2",
    ];
    ok(&args, d);
    let hist = read(&d.join("inf/histogram.csv"));
    let rows: Vec<&str> = hist.lines().collect();
    assert_eq!(rows.len(), 2 + 38);
    assert!(rows[0].starts_with("x_edges,log_beta,-12,"));
    assert!(rows[1].starts_with("y_edges,log_eta,-12,"));
    let total: usize = rows[2..]
        .iter()
        .flat_map(|r| r.split(',').skip(2).map(|c| c.parse::<usize>().unwrap()))
        .sum();
    assert_eq!(total, 200);
    // Chains run in parallel but the outputs do not depend on scheduling.
    let mut serial = args.to_vec();
    serial[6] = "inf1";
    serial.extend(["--threads", "1"]);
    ok(&serial, d);
    assert_eq!(read(&d.join("inf/manifest.json")), read(&d.join("inf1/manifest.json")));
}

#[test]
fn infer_baseline_reports_the_cost_benefit_ratio() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    small_dataset(d);
    ok(
        &["infer", "--config", "short.json", "--dataset", "sim/dataset.jsonl", "--out", "irl", "--baseline-irl"],
        d,
    );
    let summary: Value = serde_json::from_str(&read(&d.join("irl/summary.json"))).unwrap();
    assert_eq!(summary["mode"], "irl_baseline");
    let mean = summary["cost_benefit_ratio"]["mean"].as_f64().unwrap();
    assert!((-10.0..=10.0).contains(&mean));
    let header = read(&d.join("irl/posterior.csv"));
    assert_eq!(
        header.lines().next().unwrap(),
        "chain,step,incorrect_reward,cost_benefit_ratio,log_likelihood,accepted"
    );
}

#[test]
fn infer_rejects_unknown_targets() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    std::fs::write(d.join("empty.jsonl"), "").unwrap();
    let out = brc(&["infer", "--dataset", "empty.jsonl", "--out", "x", "--targets", "log_gamma"], d);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn trace_lists_one_row_per_belief() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    solved(d);
    let t = Trajectory::new(vec![MONITOR, MONITOR, MONITOR, 1], vec![POSITIVE; 4]).unwrap();
    std::fs::write(d.join("three.jsonl"), tables::dataset_jsonl(&[t])).unwrap();
    ok(&["trace", "--dataset", "three.jsonl", "--agent", "agent", "--out", "t1"], d);
    ok(&["trace", "--dataset", "three.jsonl", "--agent", "agent", "--out", "t2"], d);
    let csv = read(&d.join("t1/trace.csv"));
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "trajectory,step,action,observation,z_diseased,z_healthy");
    assert_eq!(rows.len(), 5);
    let z: Vec<f64> = rows[1..]
        .iter()
        .map(|r| r.split(',').nth(4).unwrap().parse().unwrap())
        .collect();
    assert_eq!(z[0], 0.5);
    assert!(z.windows(2).all(|w| w[1] > w[0]));
    assert_eq!(read(&d.join("t1/manifest.json")), read(&d.join("t2/manifest.json")));

    std::fs::write(d.join("empty.jsonl"), "").unwrap();
    ok(&["trace", "--dataset", "empty.jsonl", "--agent", "agent", "--out", "t3"], d);
    assert_eq!(read(&d.join("t3/trace.csv")).lines().count(), 1);
}

#[test]
fn trace_reports_impossible_evidence_and_continues() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    // A perfectly accurate test: a negative result after a positive one is impossible.
    let p = build_diag(&DiagConfig::default()).unwrap();
    let perfect = diag_model(1.0, 1.0).unwrap();
    let mut params = p.params.clone();
    params.model_ensemble = ModelEnsemble::single(perfect.clone());
    let config = RunConfig {
        custom: Some(CustomProblem {
            setting: p.setting.clone(),
            params,
            truth: perfect,
            max_episode_length: 50,
        }),
        ..Default::default()
    };
    write_json(&d.join("perfect.json"), &serde_json::to_value(&config).unwrap());
    ok(&["solve", "--config", "perfect.json", "--out", "agent"], d);
    let bad = Trajectory::new(vec![MONITOR, MONITOR, MONITOR], vec![POSITIVE, 1, POSITIVE]).unwrap();
    let good = Trajectory::new(vec![MONITOR, 1], vec![POSITIVE, POSITIVE]).unwrap();
    std::fs::write(d.join("mixed.jsonl"), tables::dataset_jsonl(&[bad, good])).unwrap();
    let out = ok(&["trace", "--dataset", "mixed.jsonl", "--agent", "agent", "--out", "t"], d);
    assert!(String::from_utf8_lossy(&out.stderr).contains("trajectory 0"));
    let m = manifest::verify(&d.join("t")).unwrap();
    assert_eq!(m.warnings.len(), 1);
    let csv = read(&d.join("t/trace.csv"));
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.lines().skip(1).all(|r| r.starts_with("1,")));
}

#[test]
fn default_config_round_trips() {
    let config = RunConfig::default();
    let text = serde_json::to_string(&config).unwrap();
    let back: RunConfig = serde_json::from_str(&text).unwrap();
    assert_eq!(back, config);
    let empty: RunConfig = serde_json::from_str("{}").unwrap();
    assert_eq!(empty, config);
}
