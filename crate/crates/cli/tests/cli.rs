use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_routedisc"))
}

fn scratch(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("routedisc-cli-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    fs::write(&path, contents).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn routedisc")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn analyze_lists_routes() {
    let cfg = scratch("k4.cfg", "K = 4\nN = 4\n");
    let out = run(&["analyze", cfg.to_str().unwrap()]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("configurations = 35"), "{text}");
    assert!(text.contains("routes = 8 (+ null route)"), "{text}");
    let listed = text.lines().filter(|l| l.trim_start().starts_with("(S,")).count();
    assert_eq!(listed, 8);
    assert!(text.contains("(S,1,3,D)"));
}

#[test]
fn analyze_two_positions_one_node() {
    let cfg = scratch("k2.cfg", "K = 2\nN = 1\n");
    let out = run(&["analyze", cfg.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("E[raw throughput] = 0.3333333333"));
}

#[test]
fn sweep_single_point_has_one_row() {
    let cfg = scratch("sweep1.cfg", "K = 3\nN = 3\n");
    let out = run(&["sweep", cfg.to_str().unwrap(), "--phis", "0.2", "--policies", "optimal"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2, "{text}");
    assert_eq!(
        lines[0],
        "phi,policy,method,gain,stderr,threshold,discovery_rate,ratio_to_optimal"
    );
    assert!(lines[1].starts_with("0.2000000000,optimal,exact,"), "{}", lines[1]);
}

#[test]
fn sweep_is_reproducible() {
    let cfg = scratch(
        "sweep2.cfg",
        "K = 3\nN = 2\nseed = 7\nslots = 20000\nburn_in = 1000\nreplications = 2\n",
    );
    let a = scratch("a.csv", "");
    let b = scratch("b.csv", "");
    for path in [&a, &b] {
        let out = run(&[
            "sweep",
            cfg.to_str().unwrap(),
            "--phis",
            "0.1,0.5",
            "--policies",
            "optimal,rule,route-break",
            "--observe",
            "previous",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let first = fs::read(&a).unwrap();
    assert!(!first.is_empty());
    assert_eq!(first, fs::read(&b).unwrap());
    let text = String::from_utf8(first).unwrap();
    assert_eq!(text.lines().count(), 1 + 2 * 3);
    assert!(text.contains(",monte-carlo,"), "{text}");
}

#[test]
fn solve_writes_policy_csv() {
    let cfg = scratch("solve.cfg", "K = 3\nN = 2\nphi = 0.3\n");
    let csv = scratch("policy.csv", "");
    let out = run(&["solve", cfg.to_str().unwrap(), "--out", csv.to_str().unwrap()]);
    assert!(out.status.success());
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("state_id,config,held_route,action,bias"));
    // 6 configurations times 5 routes plus the null route.
    assert_eq!(lines.count(), 6 * 6);
    assert!(text.contains(",discover,") && text.contains(",continue,"));
}

#[test]
fn eval_and_simulate() {
    let cfg = scratch("eval.cfg", "K = 2\nN = 1\nslots = 5000\nburn_in = 100\n");
    let out = run(&["eval", cfg.to_str().unwrap(), "--policy", "always"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("gain = 0.3333333333"));
    let out = run(&["simulate", cfg.to_str().unwrap(), "--policy", "never"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("mean = 0.000000000"));
}

#[test]
fn bad_config_exits_1() {
    let cfg = scratch("bad.cfg", "K = 4\nN = 4\ncolour = red\n");
    let out = run(&["analyze", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    let missing = run(&["analyze", "/nonexistent/routedisc.cfg"]);
    assert_eq!(missing.status.code(), Some(1));

    let cfg = scratch("ok.cfg", "K = 2\nN = 1\n");
    let out = run(&["eval", cfg.to_str().unwrap(), "--policy", "sometimes"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn size_guard_exits_2() {
    let cfg = scratch("huge.cfg", "K = 30\nN = 30\n");
    let out = run(&["analyze", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn asymmetric_stuck_boundary_warns() {
    let cfg = scratch("drift.cfg", "K = 2\nN = 1\np_l = 0.1\np_r = 0.3\n");
    let out = run(&["analyze", cfg.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
}
