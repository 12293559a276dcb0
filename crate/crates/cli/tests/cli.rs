use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

use hermsq_core::certificates::recovery_probes;
use hermsq_core::clifford::CorrelationMatrix;
use hermsq_core::group_algebra::QuadraticForm;
use hermsq_core::io::{form_from_json, parse, tuple_from_json, QuadraticFormJson, TupleJson};
use hermsq_core::linalg::max_abs;
use hermsq_core::positivity::trace_evaluate;
use hermsq_core::Tolerances;

const T: Tolerances = Tolerances::DEFAULT;

fn hermsq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hermsq"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const SHIFTED_COUPLING: &str = r#"{"n":2,"alpha":2,"terms":[{"i":1,"j":2,"re":1,"im":0}]}"#;
const COUPLING: &str = r#"{"n":2,"alpha":0,"terms":[{"i":1,"j":2,"re":1,"im":0}]}"#;

#[test]
fn certify_shifted_coupling_round_trips_through_verify_cyc() {
    let dir = TempDir::new().unwrap();
    let f = write(dir.path(), "f.json", SHIFTED_COUPLING);
    let cert = dir.path().join("cert.json");
    let o = hermsq(&["certify", &f, "-o", cert.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let report: Value = serde_json::from_str(&fs::read_to_string(&cert).unwrap()).unwrap();
    assert_eq!(report["verdict"], "certificate");
    assert_eq!(report["squares"].as_array().unwrap().len(), 1);
    let expansion = write(dir.path(), "expansion.json", &report["expansion"].to_string());
    let target = write(dir.path(), "target.json", &report["target"].to_string());

    let o = hermsq(&["verify-cyc", &expansion, &target]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout_json(&o)["equivalent"], true);

    // the certificate file itself is re-expanded from its squares
    let o = hermsq(&["verify-cyc", cert.to_str().unwrap(), &f]);
    assert_eq!(code(&o), 0);

    let other = write(dir.path(), "g.json", COUPLING);
    let o = hermsq(&["verify-cyc", cert.to_str().unwrap(), &other]);
    assert_eq!(code(&o), 1);
    let diff = &stdout_json(&o)["first_difference"];
    assert_eq!(diff["word"], serde_json::json!([]));
    assert_eq!(diff["re"], 2.0);
}

#[test]
fn certify_coupling_refutes_with_value_minus_two() {
    let dir = TempDir::new().unwrap();
    let f = write(dir.path(), "f.json", COUPLING);
    let o = hermsq(&["certify", &f]);
    assert_eq!(code(&o), 1);
    let report = stdout_json(&o);
    assert_eq!(report["verdict"], "refutation");
    let value = report["value"].as_f64().unwrap();
    assert!((value + 2.0).abs() < 1e-6);

    let witness: TupleJson = serde_json::from_value(report["witness_tuple"].clone()).unwrap();
    let t = tuple_from_json(&witness, &T).unwrap();
    let q = form_from_json(&parse::<QuadraticFormJson>(COUPLING).unwrap(), &T).unwrap();
    assert!((trace_evaluate(&q, &t, &T).unwrap() - value).abs() < 1e-12);
}

#[test]
fn certify_respects_epsilon() {
    let dir = TempDir::new().unwrap();
    let f = write(dir.path(), "f.json", COUPLING);
    let o = hermsq(&["certify", &f, "--epsilon", "2"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout_json(&o)["epsilon"], 2.0);
    // ε = 1.5 leaves the shifted infimum at -0.5; one restart at m = 1 finds it
    let o = hermsq(&["certify", &f, "--epsilon", "1.5", "--m", "1", "--restarts", "1"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn realize_identity_and_report() {
    let dir = TempDir::new().unwrap();
    let p = write(dir.path(), "p.json", r#"{"entries":[[1,0,0],[0,1,0],[0,0,1]]}"#);
    let o = hermsq(&["realize", &p]);
    assert_eq!(code(&o), 0);
    let t: TupleJson = serde_json::from_slice(&o.stdout).unwrap();
    let t = tuple_from_json(&t, &T).unwrap();
    assert_eq!((t.n(), t.m()), (3, 8));
    let p = CorrelationMatrix::new(nalgebra_identity(3), &T).unwrap();
    assert!(hermsq_core::clifford::gram_error(&t, &p) <= 1e-10);
    let report: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert!(report["max_gram_error"].as_f64().unwrap() <= 1e-10);
}

fn nalgebra_identity(n: usize) -> hermsq_core::nalgebra::DMatrix<f64> {
    hermsq_core::nalgebra::DMatrix::identity(n, n)
}

#[test]
fn malformed_json_exits_64_with_position() {
    let dir = TempDir::new().unwrap();
    let f = write(dir.path(), "f.json", "{\"n\": 2,\n \"alpha\": ,}");
    let o = hermsq(&["certify", &f]);
    assert_eq!(code(&o), 64);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 2"), "{err}");
    assert!(err.contains("column"), "{err}");
}

#[test]
fn invalid_values_exit_65_naming_the_invariant() {
    let dir = TempDir::new().unwrap();
    let p = write(dir.path(), "p.json", r#"{"entries":[[1,2],[2,1]]}"#);
    let o = hermsq(&["realize", &p]);
    assert_eq!(code(&o), 65);
    assert!(String::from_utf8_lossy(&o.stderr).contains("positive semidefinite"));

    let f = write(
        dir.path(),
        "f.json",
        r#"{"n":2,"alpha":0,"terms":[{"i":1,"j":2,"re":1,"im":0},{"i":2,"j":1,"re":3,"im":0}]}"#,
    );
    assert_eq!(code(&hermsq(&["certify", &f])), 65);
    assert_eq!(code(&hermsq(&["certify", &f, "--epsilon=-1"])), 65);
}

#[test]
fn usage_and_io_errors() {
    assert_eq!(code(&hermsq(&["no-such-command"])), 64);
    assert_eq!(code(&hermsq(&["--help"])), 0);
    assert_eq!(code(&hermsq(&["certify", "/nonexistent/f.json"])), 66);
    let dir = TempDir::new().unwrap();
    let f = write(dir.path(), "f.json", COUPLING);
    assert_eq!(code(&hermsq(&["certify", &f, "--tol", "bogus=1"])), 64);
    assert_eq!(code(&hermsq(&["certify", &f, "--tol", "certificate"])), 64);
    assert_eq!(code(&hermsq(&["--seed", "xyz", "certify", &f])), 64);
}

#[test]
fn infimum_exit_codes() {
    let dir = TempDir::new().unwrap();
    let f = write(dir.path(), "f.json", COUPLING);
    let o = hermsq(&["infimum", &f, "--m", "1,2", "--restarts", "4"]);
    assert_eq!(code(&o), 1);
    let r = stdout_json(&o);
    assert_eq!(r["verdict"], "refuted");
    assert_eq!(r["m"], 1);

    let g = write(dir.path(), "g.json", SHIFTED_COUPLING);
    let o = hermsq(&["infimum", &g]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout_json(&o)["verdict"], "no violation found");
}

#[test]
fn explore_k3_csv_is_reproducible() {
    let a = hermsq(&["explore-k3", "--count", "50", "--m", "3", "--seed", "7"]);
    let b = hermsq(&["explore-k3", "--count", "50", "--m", "3", "--seed", "7"]);
    let c = hermsq(&["explore-k3", "--count", "50", "--m", "3", "--seed", "8"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "re_trU,im_trU,re_trV,im_trV,re_trUV,im_trUV,wang_lhs,wang_rhs"
    );
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 50);
    for r in &rows {
        assert_eq!(r.len(), 8);
        assert!(r[6] <= r[7] + 1e-10);
    }
}

#[test]
fn combine_realizes_the_weighted_gram() {
    let dir = TempDir::new().unwrap();
    let p1 = write(dir.path(), "p1.json", r#"{"entries":[[1,0.5],[0.5,1]]}"#);
    let p2 = write(dir.path(), "p2.json", r#"{"entries":[[1,-1],[-1,1]]}"#);
    let t1 = dir.path().join("t1.json");
    let t2 = dir.path().join("t2.json");
    assert_eq!(code(&hermsq(&["realize", &p1, "-o", t1.to_str().unwrap()])), 0);
    assert_eq!(code(&hermsq(&["realize", &p2, "-o", t2.to_str().unwrap()])), 0);
    let o = hermsq(&[
        "combine",
        t1.to_str().unwrap(),
        t2.to_str().unwrap(),
        "--weights",
        "1/3,2/3",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let t: TupleJson = serde_json::from_slice(&o.stdout).unwrap();
    let t = tuple_from_json(&t, &T).unwrap();
    assert_eq!(t.m(), 12);
    let g = t.gram_matrix();
    assert!((g[(0, 1)].re - (0.5 / 3.0 - 2.0 / 3.0)).abs() < 1e-12);

    let o = hermsq(&["combine", t1.to_str().unwrap(), t2.to_str().unwrap(), "--weights", "1/2,1/3"]);
    assert_eq!(code(&o), 65);
    let o = hermsq(&["combine", t1.to_str().unwrap(), "--weights", "1", "--max-dim", "2"]);
    assert_eq!(code(&o), 65);
}

#[test]
fn recover_from_probe_files() {
    let dir = TempDir::new().unwrap();
    let probes = dir.path().join("probes");
    let o = hermsq(&["recover", "probes", "--n", "3", "--dir", probes.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let manifest: Value = serde_json::from_str(&fs::read_to_string(probes.join("manifest.json")).unwrap()).unwrap();
    let entries = manifest["probes"].as_array().unwrap();
    assert_eq!(entries.len(), recovery_probes(3, &T).unwrap().len());

    let planted = QuadraticForm::from_terms(
        3,
        0.7,
        &[
            (1, 2, num_complex_new(0.3, -0.2)),
            (1, 3, num_complex_new(-1.0, 0.0)),
            (2, 3, num_complex_new(0.0, 0.5)),
        ],
        1e-12,
    )
    .unwrap();
    let values: Vec<f64> = entries
        .iter()
        .map(|e| {
            let text = fs::read_to_string(probes.join(e["file"].as_str().unwrap())).unwrap();
            let t = tuple_from_json(&parse::<TupleJson>(&text).unwrap(), &T).unwrap();
            trace_evaluate(&planted, &t, &T).unwrap()
        })
        .collect();
    let evals = write(
        dir.path(),
        "evals.json",
        &serde_json::json!({"n": 3, "values": values}).to_string(),
    );
    let o = hermsq(&["recover", "solve", &evals]);
    assert_eq!(code(&o), 0);
    let q: QuadraticFormJson = serde_json::from_slice(&o.stdout).unwrap();
    let q = form_from_json(&q, &T).unwrap();
    assert!(max_abs(&(q.matrix() - planted.matrix())) < 1e-8);

    let o = hermsq(&["recover", "selftest", "--n", "4"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout_json(&o)["passed"], true);
}

fn num_complex_new(re: f64, im: f64) -> hermsq_core::num_complex::Complex64 {
    hermsq_core::num_complex::Complex64::new(re, im)
}

#[test]
fn json_indent_pretty_prints() {
    let dir = TempDir::new().unwrap();
    let f = write(dir.path(), "f.json", SHIFTED_COUPLING);
    let compact = hermsq(&["certify", &f]);
    let pretty = hermsq(&["certify", &f, "--json-indent", "2"]);
    assert_eq!(compact.stdout.iter().filter(|&&b| b == b'\n').count(), 1);
    assert!(String::from_utf8_lossy(&pretty.stdout).contains("\n  \"verdict\""));
    let a: Value = serde_json::from_slice(&compact.stdout).unwrap();
    let b: Value = serde_json::from_slice(&pretty.stdout).unwrap();
    assert_eq!(a, b);
}

#[test]
fn thread_cap_is_validated_and_output_unchanged() {
    let dir = TempDir::new().unwrap();
    let f = write(dir.path(), "f.json", COUPLING);
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_hermsq"))
            .args(["certify", &f])
            .env("HERMSQ_THREADS", threads)
            .output()
            .unwrap()
    };
    assert_eq!(code(&run("0")), 64);
    let one = run("1");
    let four = run("4");
    assert_eq!(code(&one), 1);
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn selftest_reports_are_byte_identical() {
    let a = hermsq(&["selftest"]);
    let b = hermsq(&["selftest"]);
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stdout));
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("[PASS]")).count(), 10);
}
