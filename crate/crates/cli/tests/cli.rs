use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hammerstein::problem::{ProblemFile, EXAMPLE1, EXAMPLE2, LINEAR};
use hammerstein::Verdict;
use hammerstein_cli::{EXIT_DATA, EXIT_NOINPUT, EXIT_SOFTWARE, EXIT_USAGE};
use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hammerstein"))
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("bad JSON ({e}); stderr: {}", String::from_utf8_lossy(&out.stderr))
    })
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn example1_existence_passes() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "ex1.problem", EXAMPLE1);
    let out = run(&["check", path_str(&f), "--mode", "existence"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let doc = json(&out);
    assert_eq!(doc["verdict"], "pass");
    let names: Vec<&str> = doc["inequalities"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["name"].as_str().unwrap())
        .collect();
    assert!(names.contains(&"outer_sphere"));
    assert!(names.contains(&"eigenvalue_comparison"));
    for r in doc["inequalities"].as_array().unwrap() {
        assert!(r["lhs"].is_number() && r["rhs"].is_number() && r["provenance"].is_string());
    }
    assert!(doc["window"]["feasible"].as_bool().unwrap());
}

#[test]
fn example2_nonexistence_passes() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "ex2.problem", EXAMPLE2);
    let out = run(&["check", path_str(&f), "--mode", "nonexistence"]);
    assert_eq!(code(&out), 0);
    let doc = json(&out);
    let last = doc["inequalities"].as_array().unwrap().last().unwrap().clone();
    assert_eq!(last["name"], "nonexistence_inequality");
    assert_eq!(last["lhs"].as_f64().unwrap(), 0.875);
}

#[test]
fn example2_with_large_lambda_fails() {
    let mut file = ProblemFile::parse(EXAMPLE2).unwrap();
    file.system.components[0].lambda = 3.0;
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "ex2.problem", &file.to_toml().unwrap());
    let out = run(&["check", path_str(&f), "--mode", "nonexistence"]);
    assert_eq!(code(&out), 1);
    let doc = json(&out);
    let lhs = doc["inequalities"].as_array().unwrap().last().unwrap()["lhs"].as_f64().unwrap();
    assert!((lhs - 1.625).abs() < 1e-12, "{lhs}");
}

#[test]
fn missing_hypothesis_block_is_usage_error() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "lin.problem", LINEAR);
    for mode in ["existence", "nonexistence"] {
        let out = run(&["check", path_str(&f), "--mode", mode]);
        assert_eq!(code(&out), EXIT_USAGE);
        assert!(out.stdout.is_empty());
    }
}

#[test]
fn bad_input_codes() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "bad.problem", &format!("{LINEAR}\ncolour = 3\n"));
    let out = run(&["constants", path_str(&f)]);
    assert_eq!(code(&out), EXIT_DATA);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("colour") && err.contains("line"), "{err}");

    let f = write(&dir, "syntax.problem", &LINEAR.replace("\"1\"", "\"1 +\""));
    assert_eq!(code(&run(&["solve", path_str(&f)])), EXIT_DATA);

    let missing = dir.path().join("nope.problem");
    assert_eq!(code(&run(&["constants", path_str(&missing)])), EXIT_NOINPUT);
    assert_eq!(code(&run(&["frobnicate"])), EXIT_USAGE);
    assert_eq!(code(&run(&["check", path_str(&f)])), EXIT_USAGE);
    assert_eq!(code(&run(&["reproduce", "--example", "3"])), EXIT_USAGE);
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn exit_codes_are_distinct() {
    let verdicts = [Verdict::Pass, Verdict::Fail, Verdict::Inconclusive];
    let mut codes: Vec<i32> = verdicts.iter().map(|v| v.exit_code()).collect();
    assert_eq!(codes, vec![0, 1, 2]);
    codes.extend([EXIT_USAGE, EXIT_DATA, EXIT_NOINPUT, EXIT_SOFTWARE]);
    let mut sorted = codes.clone();
    sorted.sort();
    sorted.dedup();
    assert_eq!(sorted.len(), codes.len());
}

#[test]
fn constants_of_example1() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "ex1.problem", EXAMPLE1);
    let out = run(&["constants", path_str(&f)]);
    assert_eq!(code(&out), 0);
    let doc = json(&out);
    let c = &doc["components"];
    let k = |i: usize, l: usize| c[i]["kernel_constants"][l]["computed"].as_f64().unwrap();
    let expected = [(0, 0, 0.125), (0, 1, 0.5), (1, 0, 5.0 / 384.0), (1, 2, 0.125), (1, 3, 0.5)];
    for (i, l, want) in expected {
        assert!((k(i, l) - want).abs() < 1e-6, "K{}{l} = {}", i + 1, k(i, l));
    }
    assert!(k(1, 1) <= 5.0 / 24.0 + 1e-6);
    assert_eq!(c[1]["kernel_constants"][1]["provenance"], "user-supplied");
    let pi2 = std::f64::consts::PI.powi(2);
    assert!((c[0]["characteristic_value"].as_f64().unwrap() / pi2 - 1.0).abs() < 1e-4);
    assert!((c[1]["characteristic_value"].as_f64().unwrap() / (pi2 * pi2) - 1.0).abs() < 1e-3);
    assert_eq!(c[1]["terms"][0]["gamma_norms"], serde_json::json!([1.0, 1.0, 0.0, 0.0]));
}

const ZERO_KERNEL: &str = r#"
[system]
n = 1

[[system.components]]
kernel = { name = "zero", levels = [{ lower = "0", upper = "0" }, { lower = "0", upper = "0" }] }
lambda = 1.0
nonlinearity = "u1"
"#;

#[test]
fn zero_kernel_is_degenerate() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "zero.problem", ZERO_KERNEL);
    let out = run(&["constants", path_str(&f)]);
    assert_eq!(code(&out), 0);
    let doc = json(&out);
    let c = &doc["components"][0];
    for kc in c["kernel_constants"].as_array().unwrap() {
        assert_eq!(kc["computed"].as_f64().unwrap(), 0.0);
    }
    assert!(c["spectral_error"].as_str().unwrap().contains("degenerate"));
    let out = run(&["spectral", path_str(&f)]);
    assert_eq!(code(&out), EXIT_SOFTWARE);
    assert!(json(&out)["components"][0]["error"].is_string());
}

fn table_rows(path: &Path) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split_whitespace().map(|x| x.parse().unwrap()).collect())
        .collect()
}

#[test]
fn linear_solve_writes_table() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "lin.problem", LINEAR);
    let report = dir.path().join("lin.json");
    let out = run(&["solve", path_str(&f), "--out", path_str(&report)]);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    let doc: Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(doc["solutions"].as_array().unwrap().len(), 1);
    let rows = table_rows(&dir.path().join("lin.solution-0.txt"));
    assert_eq!(rows.len(), 201);
    for row in rows {
        let t = row[0];
        assert!((row[1] - t * (1.0 - t) / 2.0).abs() < 1e-8);
        assert!((row[2] - (0.5 - t)).abs() < 1e-8);
    }
}

const ZERO_SYSTEM: &str = r#"
[system]
n = 1

[[system.components]]
kernel = "green_2nd_dirichlet"
lambda = 1.0
nonlinearity = "0"

[[system.components.terms]]
eta = 1.0
gamma = ["t", "1"]
functional = "0"
"#;

#[test]
fn zero_system_has_only_zero_solution() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "zero.problem", ZERO_SYSTEM);
    let out = run(&["solve", path_str(&f)]);
    assert_eq!(code(&out), 0);
    let doc = json(&out);
    let sols = doc["solutions"].as_array().unwrap();
    assert_eq!(sols.len(), 1);
    assert_eq!(sols[0]["norm"].as_f64().unwrap(), 0.0);
    assert_eq!(doc["starts"].as_array().unwrap().len(), 9);
}

#[test]
fn example1_solve_reports_zero_and_flags() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "ex1.problem", EXAMPLE1);
    let out = run(&["solve", path_str(&f)]);
    assert_eq!(code(&out), 0);
    let doc = json(&out);
    let sols = doc["solutions"].as_array().unwrap();
    assert!(sols.iter().any(|s| s["norm"].as_f64().unwrap() == 0.0 && !s["in_annulus"].as_bool().unwrap()));
    let (r, big_r) = (doc["annulus"]["r"].as_f64().unwrap(), doc["annulus"]["R"].as_f64().unwrap());
    assert_eq!(big_r, 1.0);
    for s in sols {
        let norm = s["norm"].as_f64().unwrap();
        assert_eq!(s["in_annulus"].as_bool().unwrap(), r <= norm && norm <= big_r);
        assert!(s["residual_certificate"].as_f64().unwrap() <= 10.0 * 1e-10);
    }
}

#[test]
fn reports_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "ex1.problem", EXAMPLE1);
    for args in [
        vec!["check", path_str(&f), "--mode", "existence", "--seed", "7"],
        vec!["solve", path_str(&f), "--resolution", "48", "--seed", "7"],
        vec!["constants", path_str(&f)],
    ] {
        let a = run(&args);
        let b = run(&args);
        assert_eq!(code(&a), 0);
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn reproduce_examples() {
    for (n, check) in [(1, "existence"), (2, "nonexistence")] {
        let out = run(&["reproduce", "--example", &n.to_string()]);
        assert_eq!(code(&out), 0);
        let doc = json(&out);
        assert_eq!(doc["check"]["check"], check);
        assert_eq!(doc["check"]["verdict"], "pass");
    }
}
