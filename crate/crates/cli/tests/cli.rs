use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lsils(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lsils"))
        .args(args)
        .current_dir(cwd)
        .env_remove("LSILS_JOBS")
        .output()
        .expect("spawn lsils")
}

fn ok(args: &[&str], cwd: &Path) -> String {
    let out = lsils(args, cwd);
    assert!(
        out.status.success(),
        "lsils {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn fails(args: &[&str], cwd: &Path) -> String {
    let out = lsils(args, cwd);
    assert!(!out.status.success(), "lsils {args:?} unexpectedly succeeded");
    String::from_utf8(out.stderr).unwrap()
}

#[test]
fn landscape_counts_every_solution() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(
        &["landscape", "--gen", "n=18,density=1,range=-100:100,seed=7", "--toy", "none", "--out-dir", "out"],
        dir.path(),
    );
    assert!(stdout.contains("# objective = original"));
    let count: u64 = stdout
        .lines()
        .find_map(|l| l.strip_prefix("local_optima_count "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(count >= 1);
    let hist = fs::read_to_string(dir.path().join("out/gen-n18-d1-s7_original_histogram.csv")).unwrap();
    let total: u64 = hist
        .lines()
        .skip(1)
        .map(|l| l.rsplit_once(',').unwrap().1.parse::<u64>().unwrap())
        .sum();
    assert_eq!(total, 262_144);
}

#[test]
fn landscape_of_a_toy_has_one_optimum() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(
        &["landscape", "--gen", "n=12,seed=3", "--toy", "plusminusi", "--anchor", "010011100101"],
        dir.path(),
    );
    assert!(stdout.contains("local_optima_count 1\n"));
    assert!(stdout.contains("local_optimum 010011100101\n"));
}

#[test]
fn sweep_has_eleven_rows_ending_unimodal() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        &[
            "sweep", "--gen", "n=14,density=1,range=-100:100,seed=5", "--toy", "plusminus1",
            "--alpha", "auto", "--grid", "0:1:0.1", "--out-dir", "out",
        ],
        dir.path(),
    );
    let csv = fs::read_to_string(dir.path().join("out/gen-n14-d1-s5_sweep_plusminus1.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 11);
    assert_eq!(*rows.last().unwrap(), "1.000000,1");
}

fn batch_args(out: &str) -> Vec<&str> {
    vec![
        "batch", "--instance", "inst/bqp.txt", "--algos", "ils,lsils:plusminusi", "--seeds", "20",
        "--budget", "evals:2e5", "--log-interval", "evals:2e4", "--out-dir", out, "--jobs", "2",
    ]
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn batch_writes_forty_deterministic_logs() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["gen", "--gen", "n=60,density=0.3,seed=4", "--name", "bqp", "--out-dir", "inst"], dir.path());
    let stdout = ok(&batch_args("a"), dir.path());
    assert!(stdout.contains("# alpha[plusminusi]"));
    assert!(stdout.contains("# lambda = steps:"));
    ok(&batch_args("b"), dir.path());
    let a = dir_bytes(&dir.path().join("a"));
    assert_eq!(a.len(), 40);
    assert!(a.iter().any(|(n, _)| n == "bqp_lsils-plusminusi_19.csv"));
    assert_eq!(a, dir_bytes(&dir.path().join("b")));
    let first = String::from_utf8(a[0].1.clone()).unwrap();
    assert!(first.starts_with("# reference=best-found value="));
    assert!(first.contains("elapsed,evaluations,best_f,lambda,excess\n"));
}

#[test]
fn excess_rewrites_against_known_optimum() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["gen", "--gen", "n=25,seed=8", "--name", "small", "--out-dir", "."], dir.path());
    ok(
        &["solve", "--instance", "small.txt", "--algo", "ils", "--budget", "evals:5e4", "--out-dir", "runs"],
        dir.path(),
    );
    let log = dir.path().join("runs/small_ils_0.csv");
    let before = fs::read_to_string(&log).unwrap();
    let best: i64 = before.lines().last().unwrap().split(',').nth(2).unwrap().parse().unwrap();
    fs::write(dir.path().join("opt.txt"), format!("# optima\nsmall {}\n", best * 2)).unwrap();
    let stdout = ok(&["excess", "--optima", "opt.txt", "--out-dir", "runs"], dir.path());
    assert!(stdout.contains("final_excess -0.50000000"));
    let after = fs::read_to_string(&log).unwrap();
    assert!(after.starts_with(&format!("# reference=optimum value={}", best * 2)));
    assert!(after.lines().last().unwrap().ends_with(",-0.50000000"));
}

#[test]
fn solve_with_optima_reports_excess() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("opt.txt"), "gen-n20-d1-s1 1\n").unwrap();
    let stdout = ok(
        &["solve", "--gen", "n=20,seed=1", "--budget", "evals:1e4", "--optima", "opt.txt", "--seed", "3"],
        dir.path(),
    );
    assert!(stdout.contains("\nexcess "));
    assert!(dir.path().join("gen-n20-d1-s1_lsils-plusminusi_3.csv").exists());
}

#[test]
fn invalid_invocations_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(lsils(&["solve", "--bogus"], d).status.code(), Some(2));
    assert!(fails(&["landscape", "--gen", "n=26"], d).contains("at most 25 variables"));
    assert!(fails(&["solve", "--instance", "missing.txt"], d).contains("missing.txt"));
    assert!(fails(&["solve"], d).contains("--instance"));
    assert!(
        fails(&["solve", "--gen", "n=10", "--budget", "evals:1e4", "--log-interval", "secs:1"], d)
            .contains("--log-interval")
    );
    assert!(fails(&["solve", "--gen", "n=10", "--lambda", "steps:5=2"], d).contains("outside [0, 1]"));
    assert!(fails(&["landscape", "--gen", "n=8", "--lambda", "0.5"], d).contains("--toy"));
    assert!(fails(&["solve", "--gen", "n=10", "--algo", "sa"], d).contains("unknown algorithm"));
    assert!(fails(&["solve", "--gen", "n=10", "--name", "a_b"], d).contains("'_'"));
    let out = Command::new(env!("CARGO_BIN_EXE_lsils"))
        .args(["batch", "--gen", "n=10", "--seeds", "1"])
        .current_dir(d)
        .env("LSILS_JOBS", "many")
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("LSILS_JOBS"));
}
