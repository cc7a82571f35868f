use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn jlpriv(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jlpriv"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

/// Six nodes, path 0-1-2-3-4-5 plus a chord.
const SIX: &str = "n 6\n0 1 1\n1 2 1\n2 3 1\n3 4 1\n4 5 1\n0 5 0.5\n";
const FIVE_CUTS: &str = "0\n0 1\n0 1 2\n1 3 5\n2 4\n";

/// Parameters valid for six nodes: `w` is about 2.7.
const SIX_PARAMS: [&str; 8] = ["--eps", "250", "--delta", "0.1", "--eta", "0.5", "--nu", "0.2"];

fn setup() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("g.txt"), SIX).unwrap();
    fs::write(dir.path().join("cuts.txt"), FIVE_CUTS).unwrap();
    fs::write(dir.path().join("a.csv"), "0.1,0.2,0.3\n-0.4,0.5,0.1\n0.9,-0.2,0.0\n0.3,0.3,-0.7\n0.0,0.1,0.2\n").unwrap();
    fs::write(dir.path().join("dirs.txt"), "1,0,0\n0,0.6,0.8\n").unwrap();
    dir
}

fn release_six(dir: &Path, out: &str) -> Output {
    let mut args = vec!["release-laplacian"];
    args.extend(SIX_PARAMS);
    args.extend(["--seed", "42", "--input", "g.txt", "--output", out]);
    jlpriv(dir, &args)
}

#[test]
fn release_then_query_five_cuts_is_reproducible() {
    let dir = setup();
    let d = dir.path();
    for (rel, ans) in [("l1.csv", "q1.csv"), ("l2.csv", "q2.csv")] {
        assert_eq!(code(&release_six(d, rel)), 0);
        let out = jlpriv(d, &["query-cut", "--input", rel, "--queries", "cuts.txt", "--output", ans]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(read(d, "l1.csv"), read(d, "l2.csv"));
    assert_eq!(read(d, "l1.csv.meta"), read(d, "l2.csv.meta"));
    // The provenance lines name the release file's parameters, not its path.
    assert_eq!(read(d, "q1.csv"), read(d, "q2.csv"));

    let answers = read(d, "q1.csv");
    let mut lines = answers.lines();
    assert!(lines.next().unwrap().starts_with("# jlpriv query-cut "));
    assert_eq!(lines.next().unwrap(), "query,answer");
    let values: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(values.len(), 5);
    assert!(values.iter().all(|v| v.is_finite()));
}

#[test]
fn release_files_hold_only_the_release_and_parameters() {
    let dir = setup();
    let d = dir.path();
    assert_eq!(code(&release_six(d, "l.csv")), 0);
    let text = read(d, "l.csv");
    let header = text.lines().next().unwrap();
    for key in ["eps=", "delta=", "eta=", "nu=", "r=", "w=", "n=6", "seed=42", "generator="] {
        assert!(header.contains(key), "missing {key} in {header}");
    }
    assert!(!header.contains("g.txt"));
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r.split(',').count() == 6));
    let meta = read(d, "l.csv.meta");
    assert!(meta.contains("mechanism=laplacian") && meta.contains("seed=42"));
}

#[test]
fn projection_is_written_only_on_request() {
    let dir = setup();
    let d = dir.path();
    assert_eq!(code(&release_six(d, "l.csv")), 0);
    assert!(!d.join("l.csv.projection").exists());
    let mut args = vec!["release-laplacian"];
    args.extend(SIX_PARAMS);
    args.extend(["--seed", "42", "--input", "g.txt", "--output", "p.csv", "--audit-projection"]);
    assert_eq!(code(&jlpriv(d, &args)), 0);
    assert_eq!(read(d, "l.csv"), read(d, "p.csv"));
    let text = read(d, "p.csv.projection");
    let r: usize = read(d, "p.csv.meta")
        .lines()
        .find_map(|l| l.strip_prefix("r="))
        .unwrap()
        .parse()
        .unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), r);
    assert!(rows.iter().all(|row| row.split(',').count() == 6));
}

#[test]
fn different_seeds_give_different_releases() {
    let dir = setup();
    let d = dir.path();
    assert_eq!(code(&release_six(d, "a1.csv")), 0);
    let mut args = vec!["release-laplacian"];
    args.extend(SIX_PARAMS);
    args.extend(["--seed", "43", "--input", "g.txt", "--output", "a2.csv"]);
    assert_eq!(code(&jlpriv(d, &args)), 0);
    assert_ne!(read(d, "a1.csv"), read(d, "a2.csv"));
}

#[test]
fn covariance_release_and_variance_queries() {
    let dir = setup();
    let d = dir.path();
    let out = jlpriv(
        d,
        &[
            "release-covariance", "--eps", "1", "--delta", "0.1", "--eta", "0.5", "--nu", "0.2", "--seed", "9", "--input",
            "a.csv", "--output", "c.csv",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(read(d, "c.csv.meta").contains("d=3"));
    let out = jlpriv(d, &["query-variance", "--input", "c.csv", "--queries", "dirs.txt", "--format", "keyvalue"]);
    assert_eq!(code(&out), 0);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("# jlpriv query-variance "));
    assert!(stdout.contains("answer.0=") && stdout.contains("answer.1="));

    fs::write(d.join("bad_dirs.txt"), "1,1,0\n").unwrap();
    let out = jlpriv(d, &["query-variance", "--input", "c.csv", "--queries", "bad_dirs.txt"]);
    assert_eq!(code(&out), 3, "non-unit direction is an ingestion failure");
}

#[test]
fn wide_matrix_is_a_range_failure() {
    let dir = setup();
    let d = dir.path();
    fs::write(d.join("wide.csv"), "1,2,3\n4,5,6\n").unwrap();
    let out = jlpriv(
        d,
        &[
            "release-covariance", "--eps", "1", "--delta", "0.1", "--eta", "0.5", "--nu", "0.2", "--seed", "1", "--input",
            "wide.csv", "--output", "c.csv",
        ],
    );
    assert_eq!(code(&out), 4);
}

#[test]
fn mean_release() {
    let dir = setup();
    let d = dir.path();
    let args = ["release-mean", "--eps", "1", "--delta", "0.1", "--seed", "4", "--input", "a.csv", "--output", "m.csv"];
    assert_eq!(code(&jlpriv(d, &args)), 0);
    let text = read(d, "m.csv");
    let values: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(values.len(), 3);
}

#[test]
fn randomized_response_round_trip() {
    let dir = setup();
    let d = dir.path();
    let out = jlpriv(
        d,
        &["rr-release", "--eps", "0.5", "--seed", "5", "--input", "g.txt", "--output", "rr.txt", "--nonnegative"],
    );
    assert_eq!(code(&out), 0);
    assert!(d.join("rr.txt.nonnegative").exists());
    let out = jlpriv(d, &["query-cut", "--input", "rr.txt", "--queries", "cuts.txt"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("mechanism=randomized-response"));
    assert_eq!(stdout.lines().count(), 7);

    let out = jlpriv(d, &["rr-release", "--eps", "2", "--seed", "5", "--input", "g.txt", "--output", "rr2.txt"]);
    assert_eq!(code(&out), 4);
}

#[test]
fn laplace_baseline() {
    let dir = setup();
    let d = dir.path();
    let args = ["baseline-laplace", "--eps", "1", "--seed", "3", "--input", "g.txt", "--queries", "cuts.txt"];
    let a = jlpriv(d, &args);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, jlpriv(d, &args).stdout);
}

#[test]
fn audits_pass_with_defaults() {
    let dir = setup();
    let d = dir.path();
    let out = jlpriv(d, &["audit-graph", "--seed", "1", "--pairs", "10", "--trials", "1000"]);
    assert_eq!(code(&out), 0);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("upper_bound_ok=true"));
    assert!(stdout.trim_end().ends_with("all_pass=true"));

    let out = jlpriv(d, &["audit-covariance", "--seed", "1", "--pairs", "5", "--trials", "1000", "--format", "csv"]);
    assert_eq!(code(&out), 0);
    let stdout = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[1].split(',').count(), lines[2].split(',').count());
}

#[test]
fn univariate_demo_reports_true_count() {
    let dir = setup();
    let d = dir.path();
    let bits: Vec<&str> = (0..2000).map(|i| if i % 4 == 0 { "1" } else { "0" }).collect();
    fs::write(d.join("bits.txt"), bits.join(",")).unwrap();
    let out = jlpriv(
        d,
        &["demo-univariate", "--eps", "5", "--delta", "0.1", "--eta", "0.3", "--nu", "0.1", "--seed", "2", "--input", "bits.txt"],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8(out.stdout).unwrap().contains("true_count=500"));
}

#[test]
fn bench_writes_one_row_per_mechanism_and_size() {
    let dir = setup();
    let d = dir.path();
    let out = jlpriv(
        d,
        &[
            "bench", "--eps", "100", "--delta", "0.1", "--eta", "0.3", "--nu", "0.1", "--seed", "8", "--nodes", "40",
            "--sizes", "3,6", "--trials", "2", "--queries", "2",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = stdout.lines().collect();
    assert!(lines[0].starts_with("# jlpriv bench "));
    assert!(lines[1].starts_with("mechanism,s,"));
    assert_eq!(lines.len(), 2 + 4 * 2);
}

#[test]
fn exit_codes() {
    let dir = setup();
    let d = dir.path();

    // Bad arguments.
    assert_eq!(code(&jlpriv(d, &["release-laplacian", "--eps", "1"])), 2);
    assert_eq!(code(&jlpriv(d, &["no-such-command"])), 2);
    let mut no_seed = vec!["release-laplacian"];
    no_seed.extend(SIX_PARAMS);
    no_seed.extend(["--input", "g.txt", "--output", "x.csv"]);
    assert_eq!(code(&jlpriv(d, &no_seed)), 2, "seeds are mandatory");

    // Ingestion.
    fs::write(d.join("broken.txt"), "n 3\n0 0 1\n").unwrap();
    let mut args = vec!["release-laplacian"];
    args.extend(SIX_PARAMS);
    args.extend(["--seed", "1", "--input", "broken.txt", "--output", "x.csv"]);
    assert_eq!(code(&jlpriv(d, &args)), 3);
    let mut args = vec!["release-laplacian"];
    args.extend(SIX_PARAMS);
    args.extend(["--seed", "1", "--input", "missing.txt", "--output", "x.csv"]);
    assert_eq!(code(&jlpriv(d, &args)), 3);
    assert_eq!(code(&release_six(d, "l.csv")), 0);
    fs::write(d.join("bad_cuts.txt"), "0 9\n").unwrap();
    assert_eq!(code(&jlpriv(d, &["query-cut", "--input", "l.csv", "--queries", "bad_cuts.txt"])), 3);
    assert_eq!(code(&jlpriv(d, &["query-cut", "--input", "g.txt", "--queries", "cuts.txt"])), 3, "no metadata");

    // Parameter range: w/n >= 1/2.
    let args = [
        "release-laplacian", "--eps", "1", "--delta", "0.1", "--eta", "0.5", "--nu", "0.2", "--seed", "1", "--input", "g.txt",
        "--output", "x.csv",
    ];
    let out = jlpriv(d, &args);
    assert_eq!(code(&out), 4);
    assert!(String::from_utf8_lossy(&out.stderr).contains("need n >="));
    assert!(!d.join("x.csv").exists());

    // Allocation budget.
    let mut args = vec!["release-laplacian"];
    args.extend(SIX_PARAMS);
    args.extend(["--seed", "1", "--input", "g.txt", "--output", "x.csv", "--max-bytes", "64"]);
    assert_eq!(code(&jlpriv(d, &args)), 5);
}
