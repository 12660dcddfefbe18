use std::path::PathBuf;

use supnorm_cli::config::DEFAULT_CONFIG;
use supnorm_cli::{run_with, EXIT_INVALID, EXIT_OK, EXIT_VIOLATION};

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn run(args: &[&str]) -> Run {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("supnorm").chain(args.iter().copied());
    let code = run_with(argv, &mut out, &mut err);
    Run { code, stdout: String::from_utf8(out).unwrap(), stderr: String::from_utf8(err).unwrap() }
}

fn json(r: &Run) -> serde_json::Value {
    serde_json::from_str(&r.stdout).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("supnorm-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn broken_config() -> PathBuf {
    let text = DEFAULT_CONFIG.replace(r#"["0", "1", "0", "0"]"#, r#"["0", "1/2", "0", "0"]"#);
    assert_ne!(text, DEFAULT_CONFIG);
    let path = scratch("broken.toml");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn units_fix_i() {
    let r = run(&["count", "--norm", "1", "--t", "0.01", "--z", "0,1", "--list"]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let v = json(&r);
    assert!(v["results"]["count"].as_u64().unwrap() >= 2);
    assert_eq!(v["results"]["elements"].as_array().unwrap().len() as u64, v["results"]["count"].as_u64().unwrap());
}

#[test]
fn bad_input_exits_two() {
    assert_eq!(run(&["count", "--norm", "1", "--t", "1", "--z", "0,-1"]).code, EXIT_INVALID);
    assert_eq!(run(&["count", "--norm", "0", "--t", "1", "--z", "0,1"]).code, EXIT_INVALID);
    assert_eq!(run(&["count", "--bogus"]).code, EXIT_INVALID);
    assert_eq!(run(&["plan", "--loglambda", "10"]).code, EXIT_INVALID);
    assert_eq!(run(&["amplifier", "--L", "2", "--theta", "1"]).code, EXIT_INVALID);
    assert_eq!(run(&["sweep", "--L", "4", "--grid-step", "2"]).code, EXIT_INVALID);
    assert_eq!(run(&["window", "--nodes", "100"]).code, EXIT_INVALID);
    assert_eq!(run(&["window", "--emit-csv", "/nonexistent-dir/x.csv"]).code, EXIT_INVALID);
    assert_eq!(run(&["plan", "--loglambda", "1000", "--emit-csv", "x.csv"]).code, EXIT_INVALID);
}

#[test]
fn help_exits_zero() {
    let r = run(&["--help"]);
    assert_eq!(r.code, EXIT_OK);
    assert!(r.stdout.contains("selftest"));
}

#[test]
fn verify_order_accepts_default() {
    let r = run(&["verify-order"]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    assert_eq!(json(&r)["verdicts"][0]["passed"], true);
}

#[test]
fn broken_basis_is_a_violation() {
    let path = broken_config();
    let p = path.to_str().unwrap();
    let r = run(&["--config", p, "verify-order"]);
    assert_eq!(r.code, EXIT_VIOLATION);
    assert!(r.stderr.starts_with("invariant violated: order"), "{}", r.stderr);

    let r = run(&["--config", p, "selftest"]);
    assert_eq!(r.code, EXIT_VIOLATION);
    assert!(r.stderr.starts_with("invariant violated: verify_order"), "{}", r.stderr);
    assert_eq!(json(&r)["verdicts"][0]["name"], "verify_order");

    assert_eq!(run(&["--config", p, "count", "--norm", "1", "--t", "1", "--z", "0,1"]).code, EXIT_INVALID);
}

#[test]
fn missing_config_is_invalid() {
    assert_eq!(run(&["--config", "/nonexistent/supnorm.toml", "verify-order"]).code, EXIT_INVALID);
}

#[test]
fn repeated_runs_are_identical() {
    for args in [
        &["efficiency", "--L", "8", "--theta", "1.1", "--trials", "50"][..],
        &["scan-count", "--prime", "5", "--kmax", "2", "--t", "1.5", "--z", "0.2,1.1"][..],
        &["amplifier", "--L", "2", "--theta", "0.5,2.5"][..],
    ] {
        let a = run(args);
        let b = run(args);
        assert_eq!(a.code, EXIT_OK, "{}", a.stderr);
        assert_eq!(a.stdout, b.stdout);
    }
    let a = run(&["--seed", "1", "efficiency", "--L", "8", "--theta", "1.1", "--trials", "50"]);
    let b = run(&["--seed", "2", "efficiency", "--L", "8", "--theta", "1.1", "--trials", "50"]);
    assert_ne!(a.stdout, b.stdout);
}

#[test]
fn thread_count_does_not_change_counts() {
    let args = ["count", "--norm", "35", "--t", "3", "--z", "0.1,0.9"];
    let one = run(&[&["--threads", "1"][..], &args[..]].concat());
    let four = run(&[&["--threads", "4"][..], &args[..]].concat());
    assert_eq!(one.code, EXIT_OK, "{}", one.stderr);
    assert_eq!(one.stdout, four.stdout);
    assert_eq!(run(&[&["--threads", "0"][..], &args[..]].concat()).code, EXIT_INVALID);
}

#[test]
fn scan_prints_csv_by_default() {
    let r = run(&["scan-count", "--prime", "5", "--kmax", "2", "--t", "2", "--z", "0,1"]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let mut lines = r.stdout.lines();
    assert_eq!(lines.next(), Some("k,norm,count,ratio,boundary_count"));
    assert_eq!(lines.count(), 3);
}

#[test]
fn emit_csv_splits_table_and_report() {
    let path = scratch("sweep.csv");
    let r = run(&["sweep", "--L", "16", "--grid-step", "0.01", "--emit-csv", path.to_str().unwrap()]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    assert_eq!(json(&r)["command"], "sweep");
    let csv = std::fs::read_to_string(&path).unwrap();
    assert!(csv.starts_with("theta,ratio,regime\n"));
    assert_eq!(csv.lines().count(), 1 + 314);
}

#[test]
fn out_writes_the_report() {
    let path = scratch("window.json");
    let r = run(&["--out", path.to_str().unwrap(), "window"]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    assert!(r.stdout.is_empty());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["results"]["h0"], 1.0);
}

#[test]
fn timing_is_opt_in() {
    let plain = run(&["plan", "--loglambda", "1000"]);
    assert!(json(&plain).get("wall_time_seconds").is_none());
    let timed = run(&["--timing", "plan", "--loglambda", "1000"]);
    assert!(json(&timed)["wall_time_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn tree_check_on_interior_rows() {
    let r = run(&["tree-check", "--prime", "3", "--ordm", "2", "--ordn", "2", "--radius", "5"]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    assert_eq!(json(&r)["verdicts"][0]["passed"], true);
}

#[test]
fn selftest_passes() {
    let r = run(&["selftest"]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let v = json(&r);
    assert!(v["verdicts"].as_array().unwrap().iter().all(|x| x["passed"] == true));
}

#[test]
fn config_from_environment() {
    let path = broken_config();
    let bin = env!("CARGO_BIN_EXE_supnorm");
    let out = std::process::Command::new(bin).arg("verify-order").env("SUPNORM_CONFIG", &path).output().unwrap();
    assert_eq!(out.status.code(), Some(EXIT_VIOLATION));
    let out = std::process::Command::new(bin)
        .args(["--config", "config/default.toml", "verify-order"])
        .env("SUPNORM_CONFIG", &path)
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(EXIT_OK), "{}", String::from_utf8_lossy(&out.stderr));
}
