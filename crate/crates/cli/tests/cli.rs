use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bicomb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bicomb"))
        .args(args)
        .env_remove("BICOMB_TOLERANCE")
        .output()
        .expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}", String::from_utf8_lossy(&out.stderr))
    })
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

#[test]
fn spectral_f2_standard() {
    let out = bicomb(&["spectral", "analyze", "--fixture", "F2_standard"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["verdict"], "pass");
    assert!((r["result"]["lambda"].as_f64().unwrap() - 3.0).abs() < 1e-12);
    let mu: Vec<f64> = serde_json::from_value(r["result"]["mu"].clone()).unwrap();
    let expected = [0.0, 0.25, 0.25, 0.25, 0.25];
    assert_eq!(mu.len(), 5);
    for (a, b) in mu.iter().zip(expected) {
        assert!((a - b).abs() < 1e-12, "{mu:?}");
    }
}

#[test]
fn drift_of_word_length() {
    let out = bicomb(&["clt", "drift", "--fixture", "F2_standard", "--fn", "word-length"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["result"]["drift"].as_f64(), Some(1.0));
    assert_eq!(r["result"]["sigma"].as_f64(), Some(0.0));
    assert_eq!(r["result"]["exact_drift"], "1");
    assert_eq!(r["result"]["exact_variance"], "0");
}

#[test]
fn concatenated_product_is_flagged() {
    let out = bicomb(&["spectral", "analyze", "--fixture", "F2xF2_concat"]);
    assert_eq!(out.status.code(), Some(2));
    let r = report(&out);
    assert_eq!(r["verdict"], "not-almost-semisimple");
    assert_eq!(r["result"]["semisimplicity"]["verdict"], "not_semisimple");
}

#[test]
fn envelope_fields() {
    let out = bicomb(&["spectral", "analyze", "--fixture", "PSL2Z"]);
    let r = report(&out);
    assert_eq!(r["tool"], "bicomb");
    assert_eq!(r["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(r["command"], "spectral analyze");
    assert_eq!(r["config"]["fixture"], "PSL2Z");
    assert_eq!(r["tolerances"]["verdict"].as_f64(), Some(1e-8));
    assert_eq!(r["tolerances"]["source"], "default");
}

#[test]
fn tolerance_override() {
    let out = Command::new(env!("CARGO_BIN_EXE_bicomb"))
        .args(["clt", "drift", "--fixture", "PSL2Z", "--fn", "word-length"])
        .env("BICOMB_TOLERANCE", "1e-6")
        .output()
        .unwrap();
    let r = report(&out);
    assert_eq!(r["tolerances"]["verdict"].as_f64(), Some(1e-6));
    assert_eq!(r["tolerances"]["source"], "environment");

    let bad = Command::new(env!("CARGO_BIN_EXE_bicomb"))
        .args(["clt", "drift", "--fixture", "PSL2Z", "--fn", "word-length"])
        .env("BICOMB_TOLERANCE", "-1")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_one() {
    for args in [
        vec!["spectral", "analyze", "--fixture", "nope"],
        vec!["spectral", "analyze"],
        vec!["clt", "sample", "--fixture", "PSL2Z", "--n", "4", "--count", "2"],
        vec!["clt", "drift", "--fixture", "F2_standard", "--fn", "bogus"],
        vec!["compare", "gensets", "--fixture", "F2_enlarged", "--genset", "S1"],
    ] {
        let out = bicomb(&args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(out.stdout.is_empty());
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    }
    let out = bicomb(&["clt", "sample", "--fixture", "PSL2Z", "--n", "4", "--count", "2"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("--seed"));
}

#[test]
fn sampling_is_byte_deterministic() {
    let args = ["clt", "sample", "--fixture", "PSL2Z", "--fn", "word-length", "--n", "12", "--count", "3000", "--seed", "11"];
    let a = bicomb(&args);
    let b = bicomb(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let r = report(&a);
    let words = r["result"]["words"].as_array().unwrap();
    assert_eq!(words.len(), 3000);
    assert!(r["result"]["phi_values"].as_array().unwrap().iter().all(|v| v == 12));
    let other = bicomb(&["clt", "sample", "--fixture", "PSL2Z", "--n", "12", "--count", "3000", "--seed", "12"]);
    assert_ne!(report(&other)["result"]["words"], r["result"]["words"]);
}

#[test]
fn bundles_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let combing = path(dir.path(), "combing.json");
    let out = bicomb(&["combing", "build", "--fixture", "ZxZ2_L", "--out", &combing]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let out = bicomb(&["combing", "validate", "--combing", &combing, "--radius", "8"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["result"]["passed"], true);

    let function = path(dir.path(), "phi.json");
    let out = bicomb(&["fn", "synthesize", "--fixture", "F2_standard", "--fn", "counting:ab", "--depth", "1", "--out", &function]);
    assert_eq!(out.status.code(), Some(0));
    let out = bicomb(&["clt", "drift", "--function", &function]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["result"]["exact_drift"], "0");
    assert_eq!(r["result"]["exact_variance"], "5/24");
    let out = bicomb(&["fn", "check", "--function", &function]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn group_file_builds_reduced_word_combing() {
    let dir = tempfile::tempdir().unwrap();
    let group = path(dir.path(), "f3.json");
    std::fs::write(&group, r#"{"group": {"kind": "free", "rank": 3}}"#).unwrap();
    let out = bicomb(&["combing", "build", "--group-file", &group]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    assert_eq!(r["result"]["vertices"], 7);
    let bundle = path(dir.path(), "c.json");
    bicomb(&["combing", "build", "--group-file", &group, "--out", &bundle]);
    let out = bicomb(&["spectral", "analyze", "--combing", &bundle]);
    assert_eq!(out.status.code(), Some(0));
    assert!((report(&out)["result"]["lambda"].as_f64().unwrap() - 5.0).abs() < 1e-12);
}

#[test]
fn empirical_writes_histogram() {
    let dir = tempfile::tempdir().unwrap();
    let csv = path(dir.path(), "h.csv");
    let out = bicomb(&[
        "clt", "empirical", "--fixture", "F2_standard", "--fn", "counting:ab", "--depth", "1",
        "--n", "100", "--count", "4000", "--seed", "5", "--histogram", &csv, "--ks-threshold", "0.05",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("bin_left,bin_right,count"));
    let total: usize = lines.map(|l| l.rsplit(',').next().unwrap().parse::<usize>().unwrap()).sum();
    assert_eq!(total, 4000);
    assert_eq!(report(&out)["result"]["mode"], "normal");
}

#[test]
fn holder_violation_exits_two() {
    let small = bicomb(&["qm", "holder", "--fixture", "F2_standard", "--sigma-pattern", "abab", "--a", "ab", "--radius", "8"]);
    assert_eq!(small.status.code(), Some(2));
    assert_eq!(report(&small)["result"]["violation"], true);
    let big = bicomb(&["qm", "holder", "--fixture", "F2_standard", "--sigma-pattern", "abab", "--big", "--a", "ab", "--radius", "8"]);
    assert_eq!(big.status.code(), Some(0));
}

#[test]
fn counting_table() {
    let out = bicomb(&["qm", "count", "--fixture", "F2_standard", "--sigma-pattern", "abab", "--word", "abababab", "--word", "BABA"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = report(&out)["result"]["rows"].clone();
    assert_eq!(rows[0]["phi"], 2);
    assert_eq!(rows[1]["phi"], -1);
}

#[test]
fn failed_synthesis_is_a_verdict() {
    let out = bicomb(&["fn", "synthesize", "--fixture", "ZxZ2_Lprime", "--fn", "zxz2-example", "--depth", "1", "--verify-radius", "6"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    assert_eq!(r["result"]["error"]["kind"], "NotWeaklyCombableAtDepth");
    assert!(r["result"]["error"]["details"]["synthesis_failure"]["shell_max_increment"].is_array());
}

#[test]
fn group_file_builds_lex_first_combing() {
    let dir = tempfile::tempdir().unwrap();
    let group = path(dir.path(), "modular.json");
    std::fs::write(
        &group,
        r#"{"group": {"kind": "free_product_cyclic", "orders": [2, 3]}, "generators": ["s", "t"]}"#,
    )
    .unwrap();
    let out = bicomb(&["combing", "build", "--group-file", &group, "--verify-radius", "8"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    assert!(r["result"]["search"]["cone_depth"].is_number());
    let bundle = path(dir.path(), "c.json");
    std::fs::write(&bundle, &out.stdout).unwrap();
    let out = bicomb(&["combing", "validate", "--combing", &bundle, "--radius", "8"]);
    assert_eq!(out.status.code(), Some(0));
    let out = bicomb(&["spectral", "analyze", "--combing", &bundle]);
    let lambda = report(&out)["result"]["lambda"].as_f64().unwrap();
    assert!((lambda - 2f64.sqrt()).abs() < 1e-9, "{lambda}");
}
