use std::path::Path;
use std::process::{Command, Output};

fn dedrug(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dedrug")).args(args).output().unwrap()
}

fn write_config(dir: &Path, objective: &str) -> String {
    let path = dir.join("cfg.json");
    std::fs::write(
        &path,
        format!(
            r#"{{"_comment": "small analytic study",
                "master_seed": 1, "comparison_runs": 2,
                "objective": {objective},
                "de": {{"population_size": 8}}, "ga": {{"population_size": 8}},
                "budget": {{"unit": "design_evals", "max": 40}}}}"#
        ),
    )
    .unwrap();
    path.to_string_lossy().into_owned()
}

fn dir_contents(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn compare_writes_the_export_files() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"kind": "rastrigin", "dimension": 4}"#);
    let out = tmp.path().join("results");
    let o = dedrug(&["compare", "--config", &cfg, "--seed", "42", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let names: Vec<String> = dir_contents(&out).into_iter().map(|(n, _)| n).collect();
    for run in 0..2 {
        for alg in ["de", "ga"] {
            for kind in ["convergence", "history", "final_population"] {
                assert!(names.contains(&format!("{kind}_{alg}_{run}.csv")), "{names:?}");
            }
        }
    }
    assert!(names.contains(&"report.json".to_string()));
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["master_seed"], 42);
}

#[test]
fn jobs_do_not_change_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"kind": "sphere", "dimension": 3, "replicates": 3}"#);
    let mut outputs = Vec::new();
    for (i, jobs) in ["1", "8", "1"].iter().enumerate() {
        let out = tmp.path().join(format!("out{i}"));
        let o = dedrug(&["--jobs", jobs, "compare", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert!(o.status.success());
        outputs.push(dir_contents(&out));
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
}

#[test]
fn usage_and_config_errors_exit_1() {
    let o = dedrug(&["compare", "--no-such-flag"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));

    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.json");
    std::fs::write(&bad, r#"{"objective": {"kind": "sphere"}, "budget": {"unit": "parsecs", "max": 1}}"#).unwrap();
    assert_eq!(dedrug(&["compare", "--config", bad.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(dedrug(&["optimize", "--algorithm", "hill_climb"]).status.code(), Some(1));
    assert_eq!(dedrug(&["sim", "--preset", "huge"]).status.code(), Some(1));
    assert_eq!(dedrug(&["--help"]).status.code(), Some(0));
}

#[test]
fn evaluator_failure_exits_2_and_still_exports() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("cfg.json");
    std::fs::write(
        &path,
        r#"{"comparison_runs": 1,
            "objective": {"kind": "external", "command": ["/nonexistent/evaluator"], "replicates": 1},
            "space": {"dims": [{"name": "a", "lo": 0, "hi": 1}]},
            "de": {"population_size": 4}, "ga": {"population_size": 4},
            "budget": {"unit": "design_evals", "max": 8}}"#,
    )
    .unwrap();
    let out = tmp.path().join("out");
    let o = dedrug(&["optimize", "--config", path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("report.json").exists());
}

#[test]
fn optimize_honours_budget_overrides() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"kind": "sphere", "dimension": 2, "replicates": 2}"#);
    let out = tmp.path().join("o");
    let o = dedrug(&[
        "optimize",
        "--config",
        &cfg,
        "--algorithm",
        "ga",
        "--budget",
        "30",
        "--budget-unit",
        "sim",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let history = std::fs::read_to_string(out.join("history_ga_0.csv")).unwrap();
    assert_eq!(history.lines().count(), 1 + 15);
    assert!(!out.join("history_de_0.csv").exists());
}

#[test]
fn sim_writes_a_trace_per_step() {
    let tmp = tempfile::tempdir().unwrap();
    let o = dedrug(&["sim", "--seed", "3", "--design", "0.2,0.8,4,6,2,15", "--out", tmp.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let trace = std::fs::read_to_string(tmp.path().join("sim_trace.csv")).unwrap();
    assert_eq!(trace.lines().next(), Some("t,live_cells,released_cargo"));
    assert_eq!(trace.lines().count(), 1 + 1 + 720 + 360);
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(tmp.path().join("sim_summary.json")).unwrap()).unwrap();
    let last: u64 = trace.lines().last().unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(summary["live_cells"], last);
    assert_eq!(dedrug(&["sim", "--design", "2,0,0,0,0,0"]).status.code(), Some(1));
    assert_eq!(dedrug(&["sim", "--design", "0.5,0.5"]).status.code(), Some(1));
}

#[test]
fn bench_reports_every_algorithm() {
    let tmp = tempfile::tempdir().unwrap();
    let o = dedrug(&["bench", "--seeds", "2", "--budget", "60", "--out", tmp.path().to_str().unwrap()]);
    assert!(o.status.success());
    let table: serde_json::Value =
        serde_json::from_slice(&std::fs::read(tmp.path().join("bench.json")).unwrap()).unwrap();
    for f in ["sphere", "rastrigin"] {
        for a in ["de", "ga", "random_search"] {
            assert!(table[f][a]["median_best"].is_number());
        }
    }
}
