use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn corpus(rel: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/corpus")
        .join(rel)
        .display()
        .to_string()
}

fn symqc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_symqc")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn validator() -> jsonschema::Validator {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../schema/report-v1.json");
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::validator_for(&schema).unwrap()
}

fn json_report(args: &[&str]) -> (i32, Value) {
    let mut all = args.to_vec();
    all.push("--json");
    let o = symqc(&all);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap_or_else(|e| panic!("{e}: {}", stdout(&o)));
    let errors: Vec<String> = validator().iter_errors(&v).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{args:?}: {errors:?}");
    (code(&o), v)
}

#[test]
fn check_exit_codes() {
    let o = symqc(&["check", &corpus("valid/sqrtnot2.qc"), &corpus("valid/not.qc")]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("equivalent\n"));

    let o = symqc(&["check", &corpus("valid/h.qc"), &corpus("valid/x.qc")]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("witness: input 0 output 0: 0.70710678 vs 0"), "{}", stdout(&o));

    let o = symqc(&["check", &corpus("valid/missing.qc"), &corpus("valid/x.qc")]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("missing.qc"));

    let o = symqc(&["check", &corpus("valid/rtheta-a.qc"), &corpus("valid/rtheta-b.qc")]);
    assert_eq!(code(&o), 3);
    let o = symqc(&["check", &corpus("valid/rtheta-a.qc"), &corpus("valid/rtheta-b.qc"), "--tolerance", "1e-7"]);
    assert_eq!(code(&o), 0);

    assert_eq!(code(&symqc(&["check", &corpus("valid/ghz3.qc"), &corpus("valid/bell.qc")])), 2);
    assert_eq!(code(&symqc(&["check", &corpus("valid/h.qc")])), 2);
    assert_eq!(code(&symqc(&["bogus"])), 2);
}

#[test]
fn check_json_witness() {
    let (c, v) = json_report(&["check", &corpus("valid/h.qc"), &corpus("valid/x.qc")]);
    assert_eq!(c, 1);
    assert_eq!(v["verdict"]["status"], "not_equivalent");
    let w = &v["verdict"]["witness"];
    assert_eq!(w["input"], "0");
    assert_eq!(w["output"], "0");
    assert!((w["left"]["re"].as_f64().unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    assert_eq!(w["right"]["re"].as_f64().unwrap(), 0.0);
    let (c, v) = json_report(&["check", &corpus("valid/deutsch-pi2.qc"), &corpus("valid/toffoli.qc"), "--cross-check"]);
    assert_eq!(c, 0);
    assert_eq!(v["cross_check"]["agrees"], true);
    let (c, v) = json_report(&["check", &corpus("valid/rtheta-a.qc"), &corpus("valid/rtheta-b.qc")]);
    assert_eq!(c, 3);
    assert_eq!(v["verdict"]["status"], "inconclusive");
}

#[test]
fn sim_outputs() {
    let o = symqc(&["sim", &corpus("valid/bell.qc"), "--input", "00"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o), "0.70710678 * (q1 <-> q2)\n");

    let o = symqc(&["sim", &corpus("valid/hn.qc"), "--input", "00000000"]);
    assert_eq!(stdout(&o), "0.0625 * 1\n");

    let o = symqc(&["sim", &corpus("valid/bell.qc"), "--input", "0"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("1 bits"));
    assert_eq!(code(&symqc(&["sim", &corpus("valid/bell.qc"), "--input", "0x"])), 2);

    let o = symqc(&["sim", &corpus("valid/bell.qc"), "--input", "00", "--amplitudes", "--cross-check"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("|11> 0.70710678\n"));

    let (c, v) = json_report(&["sim", &corpus("valid/ghz3.qc"), "--input", "000", "--amplitudes"]);
    assert_eq!(c, 0);
    assert_eq!(v["state"]["term_count"], 1);
    let amps = v["state"]["amplitudes"].as_array().unwrap();
    assert_eq!(amps.len(), 8);
    assert!((amps[7][0].as_f64().unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    // amplitudes are only printed on request
    let (_, v) = json_report(&["sim", &corpus("valid/ghz3.qc"), "--input", "000"]);
    assert!(v["state"]["amplitudes"].is_null());
}

#[test]
fn expr_outputs() {
    let o = symqc(&["expr", &corpus("valid/empty-circuit.qc")]);
    assert_eq!(stdout(&o), "1 * ((q1 <-> q1') & (q2 <-> q2') & (q3 <-> q3'))\n");
    let o = symqc(&["expr", &corpus("valid/cnot.qc")]);
    assert_eq!(stdout(&o), "1 * (!q1 & !q1' & (q2 <-> q2') | q1 & q1' & (q2 <-> !q2'))\n");
    let (c, v) = json_report(&["expr", &corpus("valid/deutsch.qc"), "--cross-check"]);
    assert_eq!(c, 0);
    assert_eq!(v["expression"]["term_count"], 3);
    assert_eq!(v["cross_check"]["performed"], true);
    let (_, v) = json_report(&["expr", &corpus("valid/grammar.qc"), "--lazy-quantify", "--cross-check"]);
    assert_eq!(v["command"]["lazy_quantify"], true);
    assert_eq!(v["cross_check"]["agrees"], true);
}

#[test]
fn parse_errors_are_line_accurate() {
    let expected = std::fs::read_to_string(corpus("invalid/expected.txt")).unwrap();
    let mut seen = 0;
    for line in expected.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty()) {
        let mut parts = line.splitn(3, ' ');
        let (file, pos, msg) = (parts.next().unwrap(), parts.next().unwrap(), parts.next().unwrap());
        let path = corpus(&format!("invalid/{file}"));
        let o = symqc(&["expr", &path]);
        assert_eq!(code(&o), 2, "{file}");
        assert_eq!(stderr(&o), format!("error: {path}:{pos}: {msg}\n"));
        seen += 1;
    }
    assert!(seen >= 10);
}

fn strip_time(mut v: Value) -> Value {
    v["stats"]["wall_time_ms"] = Value::Null;
    v
}

#[test]
fn reports_are_deterministic() {
    let runs: [&[&str]; 3] = [
        &["check", &corpus("valid/swap.qc"), &corpus("valid/swap3cnot.qc")],
        &["sim", &corpus("valid/grammar.qc"), "--input", "0110", "--amplitudes"],
        &["expr", &corpus("valid/deutsch.qc")],
    ];
    for args in runs {
        let (c1, a) = json_report(args);
        let (c2, b) = json_report(args);
        assert_eq!(c1, c2);
        assert_eq!(strip_time(a), strip_time(b));
        let (t1, t2) = (symqc(args), symqc(args));
        assert_eq!(stdout(&t1), stdout(&t2));
    }
}

#[test]
fn version_flag() {
    let o = symqc(&["--version"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains(env!("CARGO_PKG_VERSION")));
}

#[test]
fn schema_rejects_drift() {
    let (_, v) = json_report(&["expr", &corpus("valid/cnot.qc")]);
    let schema = validator();
    let mut extra = v.clone();
    extra["surprise"] = Value::Bool(true);
    assert!(!schema.is_valid(&extra));
    let mut bad_status = v.clone();
    bad_status["verdict"] = serde_json::json!({ "status": "maybe", "terms": [1, 1], "witness": null });
    assert!(!schema.is_valid(&bad_status));
    let mut no_stats = v;
    no_stats.as_object_mut().unwrap().remove("stats");
    assert!(!schema.is_valid(&no_stats));
}
