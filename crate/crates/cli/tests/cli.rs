use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

use gurarij_core::io::{read_json, KatetovFile};

fn gurarij(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gurarij"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "bad report ({e}): {}\n{}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn ok(args: &[&str]) -> Value {
    let out = gurarij(args);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    report(&out)
}

fn write(dir: &Path, name: &str, v: &Value) -> String {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string(v).unwrap()).unwrap();
    p.to_string_lossy().into_owned()
}

fn close(a: &Value, b: f64) {
    let a = a.as_f64().unwrap_or_else(|| panic!("not a number: {a}"));
    assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()), "{a} vs {b}");
}

#[test]
fn norm_eval_reports_value_and_metadata() {
    let r = ok(&["norm-eval", "--space", "l1:2", "--vector", "3,-4"]);
    assert_eq!(r["value"], json!(7.0));
    assert_eq!(r["status"], "ok");
    assert_eq!(r["seed"], json!(0));
    assert!(r["tool_version"].is_string());
    assert!(r["tolerances"]["tolerance"].is_number());
    assert!(r["wall_time_s"].is_number());
    let r = ok(&["dual-norm", "--space", "linf:3", "--vector", "1,-2,0.5"]);
    assert_eq!(r["value"], json!(3.5));
}

#[test]
fn non_katetov_input_is_a_domain_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(
        dir.path(),
        "bad.json",
        &json!({"space": "l1:2", "support": [[0, 0], [1, 0]], "values": [0, 0]}),
    );
    let out = gurarij(&["katetov", "check", "--in", &bad]);
    assert_eq!(out.status.code(), Some(2));
    let r = report(&out);
    assert_eq!(r["status"], "error");
    assert_eq!(r["error"]["kind"], "not-katetov");
    let v = r["error"]["details"]["violations"].as_array().unwrap();
    assert_eq!(v[0]["kind"], "separation");
}

#[test]
fn usage_errors_have_their_own_code() {
    assert_eq!(gurarij(&["norm-eval", "--space", "l1:2"]).status.code(), Some(64));
    assert_eq!(gurarij(&["frobnicate"]).status.code(), Some(64));
    let out = gurarij(&["--tolerance", "0.1", "norm-eval", "--space", "l1:2", "--vector", "1,1"]);
    assert_eq!(out.status.code(), Some(64));
    assert_eq!(gurarij(&["--help"]).status.code(), Some(0));
    assert_eq!(gurarij(&["--version"]).status.code(), Some(0));
    let one = gurarij(&["amalgam", "bounds", "--in", "p.json"]);
    assert_eq!(one.status.code(), Some(64));
    let three = gurarij(&["katetov", "dist", "--in", "a", "b", "--in", "c"]);
    assert_eq!(three.status.code(), Some(64));
    let out = gurarij(&["norm-eval", "--space", "l7:2", "--vector", "1,1"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(report(&out)["error"]["kind"], "unknown-space");
}

#[test]
fn builds_are_byte_identical_and_check_out() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        ok(&["build", "--rounds", "2", "--seed", "7", "--out", p.to_str().unwrap()]);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let r = ok(&["gembed-check", "--in", a.to_str().unwrap()]);
    assert_eq!(r["passed"], json!(true));

    let s = dir.path().join("s.json");
    ok(&[
        "build",
        "--rounds",
        "1",
        "--seed",
        "3",
        "--symmetry-axis",
        "0",
        "--out",
        s.to_str().unwrap(),
    ]);
    let r = ok(&["gembed-check", "--in", s.to_str().unwrap()]);
    assert_eq!(r["report"]["elements"], json!(2));
}

#[test]
fn convexify_writes_a_file_that_reads_back() {
    let dir = tempfile::tempdir().unwrap();
    // (0,1) ↦ 1 forces (1,0) down from 5 to 3 in ℓ¹
    let src = write(
        dir.path(),
        "xi.json",
        &json!({"space": "l1:2", "support": [[0, 0], [2, 0]], "values": [1, 3]}),
    );
    let out = dir.path().join("canon.json");
    let r = ok(&[
        "katetov",
        "convexify",
        "--in",
        &src,
        "--write",
        out.to_str().unwrap(),
        "--vector",
        "1,0",
    ]);
    close(&r["value"], 2.0);
    close(&r["value_primal"], 2.0);
    let written: KatetovFile = read_json(&out).unwrap();
    assert!(written.canonical);
    let again = dir.path().join("again.json");
    ok(&[
        "katetov",
        "convexify",
        "--in",
        out.to_str().unwrap(),
        "--write",
        again.to_str().unwrap(),
    ]);
    let second: KatetovFile = read_json(&again).unwrap();
    assert_eq!(written, second);

    let r = ok(&["katetov", "extend", "--in", &src, "--vector", "1,0"]);
    close(&r["value"], 2.0);
    let r = ok(&["katetov", "dist", "--in", &src, "--in", out.to_str().unwrap()]);
    close(&r["value"], 0.0);
    let r = ok(&[
        "katetov",
        "one-point-norm",
        "--in",
        &src,
        "--alpha",
        "-1",
        "--vector",
        "0,0",
    ]);
    close(&r["value"], 1.0);
}

#[test]
fn amalgam_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(
        dir.path(),
        "p.json",
        &json!({"space": "l1:1", "support": [[0]], "values": [1]}),
    );
    let q = write(
        dir.path(),
        "q.json",
        &json!({"space": "l1:1", "support": [[1]], "values": [1]}),
    );
    let r = ok(&["amalgam", "bounds", "--in", &p, "--in", &q]);
    close(&r["r0"], 1.0);
    // min |a| + |a − 1| + 2
    close(&r["r1"], 3.0);
    let r = ok(&[
        "amalgam", "norm", "--in", &p, "--in", &q, "-R", "1.5", "--vector", "0", "--alpha", "1",
        "--beta", "-1",
    ]);
    close(&r["value"], 1.5);
    let out = gurarij(&["amalgam", "norm", "--in", &p, "--in", &q, "-R", "3.5", "--vector", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(report(&out)["error"]["kind"], "radius-out-of-range");
}

#[test]
fn henson_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let h = write(
        dir.path(),
        "h.json",
        &json!({"e": "l1:2", "xs": [[1, 0], [0, 1]], "f": "linf:2", "ys": [[1, 0], [0, 1]]}),
    );
    // ‖s₁e₁ + s₂e₂‖₁ − ‖·‖_∞ peaks at 1/2 on the ℓ¹ sphere
    let r = ok(&["henson", "dist", "--in", &h]);
    close(&r["value"], 0.5);
    assert_eq!(r["side"], "e");
    let r = ok(&["henson", "dist", "--in", &h, "--exact"]);
    close(&r["value"], 0.5);
    let r = ok(&[
        "henson",
        "amalgam-norm",
        "--in",
        &h,
        "--vector-e",
        "1,0",
        "--vector-f",
        "-1,0",
    ]);
    assert!(r["value"].as_f64().unwrap() <= 0.5 + 1e-9);
    let r = ok(&["henson", "amalgam-norm", "--in", &h, "--vector-e", "1,1", "--vector-f", "0,0"]);
    close(&r["value"], 2.0);
}

#[test]
fn arens_eells_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let metric = json!({
        "labels": ["*", "a", "b"],
        "distances": [[0, 1, 2], [1, 0, 2], [2, 2, 0]],
        "base": "*"
    });
    let m = write(dir.path(), "m.json", &metric);
    let mol = write(
        dir.path(),
        "mol.json",
        &json!({"metric": "m.json", "entries": {"a": 1, "b": -1}}),
    );
    let r = ok(&["ae", "norm", "--in", &mol]);
    close(&r["value"], 2.0);
    assert_eq!(r["certified"], json!(true));
    let _ = m;

    let lip = write(
        dir.path(),
        "lip.json",
        &json!({"metric": metric, "values": {"*": 0, "a": 1}}),
    );
    let r = ok(&["ae", "extend-lip", "--in", &lip]);
    // McShane: min(0 + 2, 1 + 2)
    close(&r["extension"]["b"], 2.0);

    let rel = write(
        dir.path(),
        "rel.json",
        &json!({"base_space": "l1:1", "adjoined": [
            {"space": "l1:1", "support": [[0]], "values": [1]},
            {"space": "l1:1", "support": [[1]], "values": [1]}
        ]}),
    );
    let r = ok(&[
        "ae",
        "relative-norm",
        "--in",
        &rel,
        "--vector",
        "0",
        "--alpha",
        "1,-1",
    ]);
    // sup |(|a| + 1) − (|a − 1| + 1)|
    close(&r["value"], 1.0);
    let r = ok(&["ae", "adjoin", "--in", &rel]);
    assert_eq!(r["space"]["dim"], json!(3));
    close(&r["unit_norms"][0], 1.0);
    close(&r["pair_distances"][0][1], 1.0);
    assert!(r["explicit"]["dual_generators"].is_array());
}

#[test]
fn extension_and_perturbation_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    // distance to v = e₂ seen from span(e₁) in ℓ¹: ξ(s) = |s| + 1
    let xi = write(
        dir.path(),
        "cone.json",
        &json!({"space": "pullback", "support": [[0]], "values": [1]}),
    );
    let r = ok(&[
        "gurarij-test",
        "--space",
        "l1:2",
        "--basis",
        "1,0",
        "--in",
        &xi,
        "-R",
        "3",
        "--net",
        "16",
    ]);
    assert_eq!(r["within_bound"], json!(true));
    assert!(r["epsilon_inside"].as_f64().unwrap() <= 1e-7);

    let r = ok(&[
        "perturb-constants",
        "--space",
        "l1:2",
        "--basis",
        "1,0",
        "--vector",
        "0,1",
        "--epsilon",
        "0.1",
    ]);
    close(&r["c"], 1.0);
    close(&r["c_prime"], 1.0);
    close(&r["delta"], 0.1 / 7.1);
}

#[test]
fn teleman_group_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let r = ok(&["teleman-demo", "--group", "s3", "--weight", "0.5", "--samples", "20"]);
    assert_eq!(r["passed"], json!(true));
    let g = write(dir.path(), "g.json", &r["group"]);
    let again = ok(&["teleman-demo", "--in", &g, "--samples", "20"]);
    assert_eq!(again["group"], r["group"]);
    assert_eq!(again["metric"], r["metric"]);
}

#[test]
fn csv_and_out() {
    let dir = tempfile::tempdir().unwrap();
    let out = gurarij(&["--format", "csv", "norm-eval", "--space", "linf:2", "--vector", "3,-4"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("key,value\n"));
    assert!(text.lines().any(|l| l == "value,4.0"));
    let p = dir.path().join("r.json");
    let out = gurarij(&[
        "norm-eval",
        "--space",
        "l1:2",
        "--vector",
        "0.1,0.2",
        "--out",
        p.to_str().unwrap(),
    ]);
    assert!(out.stdout.is_empty());
    let r: Value = read_json(&p).unwrap();
    // 12 significant digits
    assert_eq!(r["value"], json!(0.3));
}

#[test]
fn unknown_criterion_fails() {
    let out = gurarij(&["acceptance", "--only", "99"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("FAIL"));
}
