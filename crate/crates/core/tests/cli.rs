use std::path::PathBuf;
use std::process::{Command, Output};

use orbitkit::algebra::parse_algebra;

fn orbitkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_orbitkit"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn scratch(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("orbitkit-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

/// Parses CSV rows after the header into floats, skipping a leading label column if asked.
fn rows(text: &str, skip: usize) -> Vec<Vec<f64>> {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').skip(skip).map(|x| x.parse().unwrap()).collect())
        .collect()
}

const NH_TEXT: &str = "\
# Newton-Hooke, omega = 1
dim 4
labels M H P K
2 3 4 1.0
2 4 3 -1.0
3 4 1 -1.0
";

#[test]
fn validate_accepts_newton_hooke() {
    let path = scratch("nh.alg", NH_TEXT);
    let out = orbitkit(&["validate", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).starts_with("PASS"));
}

#[test]
fn validate_names_the_failing_triple() {
    let path = scratch("mutant.alg", &format!("{NH_TEXT}2 3 2 1.0\n"));
    let out = orbitkit(&["validate", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out) + &stderr(&out);
    assert!(text.contains("(2,3,4)"), "{text}");
    assert!(text.contains("(H,P,K)"), "{text}");
}

#[test]
fn malformed_input_exits_two() {
    let dup = scratch("dup.alg", &format!("{NH_TEXT}3 2 4 -1.0\n"));
    let out = orbitkit(&["validate", dup.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 7"), "{}", stderr(&out));

    let bad = scratch("bad.alg", "dim 2\n1 2 x 1.0\n");
    assert_eq!(orbitkit(&["validate", bad.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(
        orbitkit(&["validate", "/nonexistent/file.alg"])
            .status
            .code()
            .map(|c| c != 0),
        Some(true)
    );
    assert_eq!(orbitkit(&["simulate", "--method", "euler"]).status.code(), Some(2));
}

#[test]
fn derive_output_is_a_valid_algebra_file() {
    let out = orbitkit(&["derive", "--omega", "2", "--mass", "1.5"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let alg = parse_algebra(&text).unwrap();
    assert!((alg.constant(1, 2, 3) - 4.0).abs() < 1e-12);
    assert!((alg.constant(1, 3, 2) + 1.0).abs() < 1e-12);
    assert!((alg.constant(2, 3, 0) + 1.0).abs() < 1e-12);
}

#[test]
fn derive_without_constant_fails_on_p_k() {
    let out = orbitkit(&["derive", "--without-constant"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("2 and 3"), "{}", stderr(&out));
}

#[test]
fn simulate_starts_at_turning_point() {
    let out = orbitkit(&["simulate", "--omega", "2", "--m", "1.5", "--A", "0.4"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert_eq!(text.lines().next(), Some("t,m,h,p,k,c2"));
    let data = rows(&text, 0);
    assert_eq!(data.len(), 1001);
    let want = [0.0, 1.5, 0.5 * 1.5 * 4.0 * 0.16, 0.0, 0.6];
    for (got, want) in data[0].iter().zip(want) {
        assert!((got - want).abs() < 1e-15, "{:?}", data[0]);
    }
    let last = data.last().unwrap();
    assert!((last[0] - std::f64::consts::PI).abs() < 1e-15);
    assert!((last[4] - 0.6).abs() < 1e-13);
}

#[test]
fn simulate_single_sample_when_span_is_empty() {
    let out = orbitkit(&["simulate", "--t0", "1", "--t1", "1"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).lines().count(), 2);
}

#[test]
fn simulate_rejects_massless_and_bad_steps() {
    let out = orbitkit(&["simulate", "--m", "0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("flattened cylinders"));
    assert_eq!(orbitkit(&["simulate", "--dt", "-1"]).status.code(), Some(1));
    assert_eq!(orbitkit(&["simulate", "--omega", "0"]).status.code(), Some(1));
}

#[test]
fn rk4_tracks_exact_solution() {
    let exact = rows(&stdout(&orbitkit(&["simulate", "--method", "exact"])), 0);
    let rk4 = rows(&stdout(&orbitkit(&["simulate", "--method", "rk4"])), 0);
    assert_eq!(exact.len(), rk4.len());
    for (a, b) in exact.iter().zip(&rk4) {
        assert!((a[3] - b[3]).abs() <= 1e-6 && (a[4] - b[4]).abs() <= 1e-6);
    }
}

#[test]
fn coad_rows_agree() {
    let out = orbitkit(&[
        "coad", "--omega", "3", "--m", "2", "--h", "1", "--p", "-1", "--k", "0.5", "--b", "1.2", "--a", "-0.7", "--v",
        "0.3",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let labels: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(labels, ["input", "closed", "exponential", "abs_deviation"]);
    let data = rows(&text, 1);
    for x in &data[3] {
        assert!(*x < 1e-12);
    }
}

#[test]
fn invariants_report_mass_and_c2() {
    let out = orbitkit(&["invariants", "--omega", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    let data = rows(&text, 1);
    assert_eq!(data.len(), 2);
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap() - 1;
    assert!((data[0][col("m")] - 1.0).abs() < 1e-12);
    assert!((data[1][col("k^2")] - 1.0).abs() < 1e-9);
    assert!((data[1][col("m*h")] + 0.5).abs() < 1e-9);
    assert!((data[1][col("p^2")] - 0.25).abs() < 1e-9);

    let path = scratch("abelian.alg", "dim 3\n");
    let out = orbitkit(&["invariants", "--algebra", path.to_str().unwrap(), "--degree", "1"]);
    assert_eq!(rows(&stdout(&out), 1).len(), 3);
    assert_eq!(orbitkit(&["invariants", "--samples", "3"]).status.code(), Some(1));
}

#[test]
fn figure_points_follow_generator_actions() {
    let out = orbitkit(&[
        "figure", "--omega", "2", "--m", "1.5", "--shift", "0.3", "--boost", "-0.4",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let point = |name: &str| -> Vec<f64> {
        let line = text.lines().find(|l| l.split(',').next() == Some(name)).unwrap();
        line.split(',').skip(1).map(|x| x.parse().unwrap()).collect()
    };
    // columns: t, m, h, p, k, c1, c2
    let (a, b, c, d) = (point("A"), point("B"), point("C"), point("D"));
    assert!((b[4] - (a[4] + 1.5 * 0.3)).abs() < 1e-12);
    assert!((c[0] - std::f64::consts::PI / 4.0).abs() < 1e-15);
    assert!((d[3] - (c[3] + 1.5 * 0.4)).abs() < 1e-12);
    // same orbit, different energy levels
    for q in [&b, &c, &d] {
        assert!((q[6] - a[6]).abs() < 1e-9 * (1.0 + a[6].abs()));
    }
    assert!((b[2] - a[2]).abs() > 0.1 && (d[2] - c[2]).abs() > 0.1);
    assert!((c[2] - a[2]).abs() < 1e-12);
    assert_eq!(text.lines().filter(|l| l.starts_with("locus_A,")).count(), 200);

    let script = stdout(&orbitkit(&["figure", "--gnuplot", "--data", "pts.csv"]));
    assert!(script.contains("'pts.csv'"));
}

#[test]
fn damped_without_friction_matches_simulate() {
    let damped = rows(
        &stdout(&orbitkit(&[
            "damped",
            "--beta",
            "0",
            "--t1",
            "6.283185307179586",
            "--dt",
            "0.0062831853071795866",
        ])),
        0,
    );
    let sim = rows(&stdout(&orbitkit(&["simulate"])), 0);
    assert_eq!(damped.len(), sim.len());
    for (d, s) in damped.iter().zip(&sim) {
        // k = m x with m = 1
        assert!((d[1] - s[4]).abs() < 1e-12);
    }
}

#[test]
fn damped_regimes_and_tables() {
    assert_eq!(
        orbitkit(&["damped", "--beta", "2", "--omega0", "1"]).status.code(),
        Some(1)
    );
    let out = orbitkit(&["damped", "--beta", "0.4", "--bracket-table", "0", "2"]);
    let data = rows(&stdout(&out), 1);
    let g = 0.2_f64;
    assert_eq!(data[0], [0.0, 2.0]);
    assert!((data[1][1] - (4.0 * g).exp()).abs() < 1e-12);
    assert!((data[2][1] + (-4.0 * g).exp()).abs() < 1e-12);
    assert_eq!(data[3], [1.0, 1.0]);
}

#[test]
fn out_flag_writes_file() {
    let path = scratch("out.csv", "");
    let out = orbitkit(&["--out", path.to_str().unwrap(), "coad", "--omega", "1"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    assert!(std::fs::read_to_string(&path).unwrap().starts_with("row,m,h,p,k"));
}

#[test]
fn seed_changes_nothing_but_sampling() {
    let a = orbitkit(&["invariants", "--seed", "1"]);
    let b = orbitkit(&["invariants", "--seed", "1"]);
    assert_eq!(a.stdout, b.stdout);
    let c = orbitkit(&["invariants", "--seed", "2"]);
    assert_eq!(rows(&stdout(&c), 1).len(), 2);
}
