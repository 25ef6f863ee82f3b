use std::path::Path;
use std::process::{Command, Output};

fn qdopt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qdopt")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn fixture() -> String {
    format!("{}/tests/fixtures/mean_errors_30d.csv", env!("CARGO_MANIFEST_DIR"))
}

fn final_error(out: &str) -> f64 {
    out.lines()
        .find_map(|l| l.strip_prefix("final_error:"))
        .and_then(|v| v.trim().parse().ok())
        .expect("final_error line")
}

#[test]
fn run_sphere() {
    let o = qdopt(&["run", "--algo", "bip", "--func", "F7", "--dim", "10", "--max-fes", "50000", "--seed", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(final_error(&stdout(&o)) < 1e-10);
    assert!(stdout(&o).contains("evals_used:  50000"));
}

#[test]
fn unknown_function_fails() {
    let o = qdopt(&["run", "--func", "F13"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("unknown benchmark id 13"));
    let o = qdopt(&["run", "--func", "rosenbrock"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("expected one of"));
}

#[test]
fn invalid_overrides_fail_before_running() {
    for args in [
        &["run", "--algo", "bip", "--k", "1"][..],
        &["run", "--algo", "bip", "--scale-divisor", "1"],
        &["run", "--algo", "gbde", "--k", "5"],
        &["run", "--algo", "bbfwa", "--amp-shrink", "1.5"],
        &["run", "--algo", "gbde", "--np", "3"],
        &["run", "--func", "F7", "--v0", "2"],
    ] {
        let o = qdopt(args);
        assert!(!o.status.success(), "{args:?} should fail");
        assert!(stderr(&o).starts_with("error:"), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn dumped_config_replays_identically() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "run", "--algo", "bip", "--func", "double_well", "--dim", "2", "--max-fes", "200", "--seed", "1",
        "--init", "2,2", "--k", "5",
    ];
    let direct = qdopt(&args);
    assert!(direct.status.success(), "{}", stderr(&direct));

    let mut dump_args = args.to_vec();
    dump_args.push("--dump-config");
    let dump = qdopt(&dump_args);
    assert!(dump.status.success());
    let path = dir.path().join("run.json");
    std::fs::write(&path, &dump.stdout).unwrap();
    let json: serde_json::Value = serde_json::from_slice(&dump.stdout).unwrap();
    assert_eq!(json["config"]["k"], 5);
    assert_eq!(json["config"]["init"], serde_json::json!([2.0, 2.0]));

    let replay = qdopt(&["run", "--config", path.to_str().unwrap()]);
    assert!(replay.status.success(), "{}", stderr(&replay));
    assert_eq!(stdout(&direct), stdout(&replay));
}

#[test]
fn run_writes_outcome_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = qdopt(&["run", "--algo", "gbde", "--func", "F2", "--dim", "3", "--max-fes", "2000", "--seed", "5", "--out", out]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("gbde_F2_3d_seed5.csv")).unwrap();
    assert!(csv.starts_with("algorithm,function,dim,seed,final_error,evals_used,succeeded\ngbde,F2,3,5,"));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("gbde_F2_3d_seed5.json")).unwrap()).unwrap();
    assert_eq!(json["evals_used"], 2000);
}

fn experiment(out: &Path) -> Output {
    qdopt(&[
        "experiment", "--funcs", "F7", "--dims", "10", "--trials", "20", "--max-fes", "3000", "--workers", "2",
        "--out", out.to_str().unwrap(),
    ])
}

#[test]
fn experiment_grid_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let oa = experiment(a.path());
    assert!(oa.status.success(), "{}", stderr(&oa));
    assert!(experiment(b.path()).status.success());
    let csv_a = std::fs::read(a.path().join("results.csv")).unwrap();
    let csv_b = std::fs::read(b.path().join("results.csv")).unwrap();
    assert_eq!(csv_a, csv_b);
    assert_eq!(String::from_utf8(csv_a).unwrap().lines().count(), 81);

    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(a.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["schema_version"], 1);
    assert_eq!(summary["cells"].as_array().unwrap().len(), 4);
}

#[test]
fn experiment_reports_failed_cells() {
    let dir = tempfile::tempdir().unwrap();
    let o = qdopt(&[
        "experiment", "--algos", "bip", "--funcs", "F7", "--dims", "3", "--trials", "2", "--max-fes", "100",
        "--k", "1", "--out", dir.path().to_str().unwrap(),
    ]);
    assert!(!o.status.success());
}

#[test]
fn rank_fixture_reproduces_averages() {
    let o = qdopt(&["rank", "--input", &fixture()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let json: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let tables = json[0]["tables"].as_array().unwrap();
    let expected = [[3.17, 2.50, 3.17, 1.17], [2.17, 1.50, 3.67, 2.67]];
    for (table, want) in tables.iter().zip(expected) {
        for (alg, ar) in ["bip", "bbpso", "bbfwa", "gbde"].into_iter().zip(want) {
            let got = table["average"][alg].as_f64().unwrap();
            assert!((got - ar).abs() <= 0.005, "{alg}: {got}");
        }
    }
}

#[test]
fn rank_single_algorithm_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(fixture()).unwrap();
    let only_bip: String = text.lines().filter(|l| l.starts_with("algorithm") || l.starts_with("bip")).map(|l| format!("{l}\n")).collect();
    let path = dir.path().join("bip.csv");
    std::fs::write(&path, only_bip).unwrap();
    let o = qdopt(&["rank", "--input", path.to_str().unwrap(), "--groups", "F1-F6"]);
    assert!(o.status.success());
    let json: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(json[0]["tables"][0]["average"]["bip"], 1.0);

    let missing: String = text.lines().filter(|l| !l.starts_with("gbde,F3,")).map(|l| format!("{l}\n")).collect();
    let path = dir.path().join("missing.csv");
    std::fs::write(&path, missing).unwrap();
    let o = qdopt(&["rank", "--input", path.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("missing cell (gbde, F3)"), "{}", stderr(&o));

    let broken = text.replacen("bip,F2,30,0,1.50E+02", "bip,F2,thirty,0,1.50E+02", 1);
    let path = dir.path().join("broken.csv");
    std::fs::write(&path, broken).unwrap();
    let o = qdopt(&["rank", "--input", path.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn diagnose_exports_files() {
    let dir = tempfile::tempdir().unwrap();
    let o = qdopt(&[
        "diagnose", "--func", "double_well", "--dim", "2", "--max-fes", "200", "--init", "2,2", "--k", "5",
        "--out", dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("expected_value:"));
    for suffix in ["events.csv", "histogram.json", "transmission.json"] {
        assert!(dir.path().join(format!("bip_double_well_2d_seed1_{suffix}")).exists(), "{suffix}");
    }
}
