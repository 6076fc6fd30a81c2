use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_ultralocal"));
    c.env_remove("ULTRALOCAL_OUT");
    c
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn scenarios_dir() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

#[test]
fn run_writes_trace_and_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["run", "--scenario", "4", "--svg"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("4/trace.csv")).unwrap();
    assert!(csv.starts_with("t,y_true,y_measured,y_ref,e,u,v1,v2,F_est,warming_up,saturated\n"));
    assert_eq!(csv.lines().count(), 3001);
    let metrics: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("4/metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["scenario"], "4");
    assert_eq!(metrics["metrics"]["diverged"], false);
    assert!(metrics["metrics"]["rmse"].as_f64().unwrap() < 0.02);
    assert!(fs::read_to_string(dir.path().join("4/plot.svg")).unwrap().contains("Control input"));
}

#[test]
fn unknown_scenario_lists_catalog() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["run", "--scenario", "nope"], dir.path());
    assert_eq!(code(&o), 1);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("1, 2, 3, 4, 5, 6, 7, 8, 9"), "{err}");
}

#[test]
fn removing_the_derivative_gain_breaks_tracking() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["run", "--scenario", "4", "--set", "K_D=0"], dir.path());
    let c = code(&o);
    assert!(c == 0 || c == 2);
    if c == 0 {
        let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("4/metrics.json")).unwrap()).unwrap();
        assert!(m["metrics"]["settling_time"].is_null(), "K_D = 0 should not settle: {m}");
    }
}

#[test]
fn bad_overrides_fail_before_any_simulation() {
    let dir = tempfile::tempdir().unwrap();
    for bad in ["K_D", "K_D=abc", "gain=3", "h=0.007", "M=1"] {
        let o = run(&["run", "--scenario", "all", "--set", bad], dir.path());
        assert_eq!(code(&o), 1, "override {bad}");
    }
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0, "nothing may be written");
}

#[test]
fn missing_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["run", "--config", "/definitely/not/here.toml"], dir.path());
    assert_eq!(code(&o), 1);
}

#[test]
fn shipped_scenario_files_run() {
    let dir = tempfile::tempdir().unwrap();
    for entry in fs::read_dir(scenarios_dir()).unwrap() {
        let path = entry.unwrap().path();
        let o = run(&["run", "--config", path.to_str().unwrap()], dir.path());
        assert_eq!(code(&o), 0, "{}: {}", path.display(), String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn shipped_file_matches_builtin_scenario_4() {
    let dir = tempfile::tempdir().unwrap();
    let file = scenarios_dir().join("ipd-two-steps.toml");
    assert_eq!(code(&run(&["run", "--config", file.to_str().unwrap()], dir.path())), 0);
    assert_eq!(code(&run(&["run", "--scenario", "4"], dir.path())), 0);
    let a = fs::read(dir.path().join("ipd-two-steps/trace.csv")).unwrap();
    let b = fs::read(dir.path().join("4/trace.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn show_round_trips_through_config() {
    let dir = tempfile::tempdir().unwrap();
    let shown = bin().args(["show", "--scenario", "6"]).output().unwrap();
    assert_eq!(code(&shown), 0);
    let file = dir.path().join("six.toml");
    fs::write(&file, &shown.stdout).unwrap();
    let out = dir.path().join("out");
    assert_eq!(code(&run(&["run", "--config", file.to_str().unwrap()], &out)), 0);
    assert_eq!(code(&run(&["run", "--scenario", "6"], &dir.path().join("ref"))), 0);
    assert_eq!(
        fs::read(out.join("6/trace.csv")).unwrap(),
        fs::read(dir.path().join("ref/6/trace.csv")).unwrap()
    );
}

#[test]
fn diverging_run_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let shown = bin().args(["show", "--scenario", "4"]).output().unwrap();
    let text = String::from_utf8(shown.stdout).unwrap();
    let text = text
        .replace("type = \"aero\"\ninertia = 0.02\nfriction = 0.3\ngravity = 0.1\nthrust_gain = 0.2\ndeadband = 10.0", "type = \"double-integrator\"\ngain = 10.0")
        .replace("u_min = -14.0", "u_min = -1e9")
        .replace("u_max = 14.0", "u_max = 1e9")
        .replace("alpha = 10.0", "alpha = -10.0");
    let file = dir.path().join("bad.toml");
    fs::write(&file, text).unwrap();
    let o = run(&["run", "--config", file.to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn seeded_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = run(&["run", "--scenario", "all", "--seed", "11", "--set", "noise_std=0.002", "--jobs", "3"], out);
        assert_eq!(code(&o), 0);
    }
    for id in 1..=9 {
        let p = format!("{id}/trace.csv");
        assert_eq!(fs::read(a.join(&p)).unwrap(), fs::read(b.join(&p)).unwrap(), "scenario {id}");
    }
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_ultralocal"))
        .args(["run", "--scenario", "1"])
        .env("ULTRALOCAL_OUT", dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(dir.path().join("1/trace.csv").exists());
}

fn gains(args: &[&str]) -> (i32, String) {
    let o = bin().args(["gains", "check"]).args(args).output().unwrap();
    (code(&o), String::from_utf8(o.stdout).unwrap())
}

#[test]
fn gains_check_examples() {
    let (c, s) = gains(&["--kp", "25", "--ki", "0", "--kd", "10", "--alpha", "10", "--h", "0.01"]);
    assert_eq!(c, 0);
    assert!(s.contains("hurwitz: yes"));
    assert!(s.contains("k_p = 100, k_i = 250, k_d = -10"), "{s}");

    let (c, s) = gains(&["--kp", "25", "--ki", "0.1", "--kd", "0"]);
    assert_eq!(c, 3);
    assert!(s.contains("hurwitz: no"));

    let (c, s) = gains(&["--kp", "0", "--ki", "0", "--kd", "0"]);
    assert_eq!(c, 3);
    assert!(s.contains("margin 0"), "{s}");
}

#[test]
fn compare_families() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["compare", "--family", "ipid-sweep", "--ki-scale", "1000"], dir.path());
    assert_eq!(code(&o), 0);
    let report = fs::read_to_string(dir.path().join("compare-ipid-sweep/report.md")).unwrap();
    assert!(report.contains("Oscillation index non-decreasing in K_I: yes"), "{report}");
    assert!(dir.path().join("compare-ipid-sweep/ipid_k_i_100/trace.csv").exists());

    let o = run(&["compare", "--family", "ip-vs-ipd"], dir.path());
    assert_eq!(code(&o), 0);
    let report = fs::read_to_string(dir.path().join("compare-ip-vs-ipd/report.md")).unwrap();
    assert_eq!(report.lines().filter(|l| l.starts_with("| iP")).count(), 2);

    assert_eq!(code(&run(&["compare", "--family", "ip-vs-ipd", "--only", "none"], dir.path())), 1);
    assert_eq!(code(&run(&["compare", "--family", "nope"], dir.path())), 1);
}
