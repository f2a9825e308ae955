use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

use sha2::{Digest, Sha256};

fn bperc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bperc"))
        .args(args)
        .output()
        .expect("bperc runs")
}

fn bperc_stdin(args: &[&str], input: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_bperc"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("bperc runs");
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json payload")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("bperc-cli-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn explicit_certificate_example() {
    let v = stdout_json(&bperc(&["bounds", "explicit", "--p", "0.0014", "--log10L", "500"]));
    assert_eq!(v["certified"], true);
    let ln = stdout_json(&bperc(&["bounds", "explicit", "--p", "0.0014", "--lnL", "1151.2925464970228"]));
    assert_eq!(ln["certified"], true);
}

#[test]
fn closure_reads_file_and_prints_grid() {
    let path = scratch("diag.txt");
    fs::write(&path, "..#\n.#.\n#..\n").unwrap();
    let out = bperc(&["closure", "--model", "modified", "--in", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "###\n###\n###\n");

    // two adjacent sites do not grow in the standard model
    let out = bperc_stdin(&["closure", "--model", "standard"], "##.\n...\n...\n");
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "##.\n...\n...\n");

    let v = stdout_json(&bperc_stdin(&["closure", "--format", "json"], "#.\n.#\n"));
    assert_eq!(v["spanned"], true);
}

#[test]
fn verify_all_passes() {
    let v = stdout_json(&bperc(&["verify", "--suite", "all", "--seed", "7"]));
    assert_eq!(v["passed"], true);
    let suites: std::collections::BTreeSet<String> = v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["suite"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(suites.len(), 5, "{suites:?}");
}

#[test]
fn exit_codes() {
    assert_eq!(bperc(&["simulate", "--L", "8"]).status.code(), Some(2));
    assert_eq!(bperc(&["simulate", "--L", "8", "--p", "1.5"]).status.code(), Some(2));
    assert_eq!(bperc(&["bogus"]).status.code(), Some(2));
    assert_eq!(bperc(&["oracle", "poly", "--L", "6"]).status.code(), Some(3));
    assert_eq!(bperc(&["simulate", "--L", "100000", "--p", "0.1", "--trials", "1"]).status.code(), Some(3));
    assert_eq!(bperc(&["bounds", "constants", "--format", "csv"]).status.code(), Some(2));
}

#[test]
fn manifest_digest_covers_payload() {
    let out_path = scratch("sim.csv");
    let out = bperc(&[
        "simulate", "--L", "12", "--p", "0.15", "--trials", "500", "--seed", "9", "--format", "csv", "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let payload = fs::read(&out_path).unwrap();
    let mut manifest_path = out_path.clone().into_os_string();
    manifest_path.push(".manifest.json");
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(manifest_path).unwrap()).unwrap();
    let hex: String = Sha256::digest(&payload).iter().map(|b| format!("{b:02x}")).collect();
    assert_eq!(manifest["output_digest"], hex.as_str());
    assert_eq!(manifest["seed"], 9);
    assert!(manifest["command_line"].as_array().unwrap().len() > 5);
    let text = String::from_utf8(payload).unwrap();
    assert!(text.starts_with("model,L,p,trials,successes,value,ci_low,ci_high,seed\n"));
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn reruns_are_byte_identical() {
    let args = ["pc", "--L", "24", "--trials", "300", "--tol", "0.01", "--seed", "3"];
    let (a, b) = (bperc(&args), bperc(&args));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn threads_env_does_not_change_sweep() {
    let args = ["sweep", "--L", "10,20", "--p", "0.1,0.2", "--trials", "800", "--format", "csv"];
    let one = Command::new(env!("CARGO_BIN_EXE_bperc")).args(args).env("BPERC_THREADS", "1").output().unwrap();
    let four = Command::new(env!("CARGO_BIN_EXE_bperc")).args(args).env("BPERC_THREADS", "4").output().unwrap();
    assert!(one.status.success());
    assert_eq!(one.stdout, four.stdout);
    assert_eq!(String::from_utf8(one.stdout).unwrap().lines().count(), 5);
}

#[test]
fn mechanism_round_trip_through_files() {
    let spec = r#"{"B":12,"pairs":[[3,7],[7,11]]}"#;
    let v = stdout_json(&bperc(&["mech", "sample", "--spec", spec, "--p", "0.2", "--seed", "4"]));
    let grid = v["grid"].as_str().unwrap().to_string();
    let path = scratch("mech.txt");
    fs::write(&path, &grid).unwrap();
    let p = path.to_str().unwrap();

    let check = stdout_json(&bperc(&["mech", "check", "--event", "e", "--spec", spec, "--in", p]));
    assert_eq!(check["holds"], true);
    let decoded = stdout_json(&bperc(&["mech", "decode", "--B", "12", "--in", p]));
    assert_eq!(decoded, serde_json::from_str::<serde_json::Value>(spec).unwrap());
    let closed = bperc(&["closure", "--in", p]);
    assert_eq!(String::from_utf8(closed.stdout).unwrap(), "############\n".repeat(12));

    let prob = stdout_json(&bperc(&["mech", "prob", "--event", "e", "--spec", spec, "--p", "0.2"]));
    let pr = prob["probability"].as_f64().unwrap();
    assert!(pr > 0.0 && pr < 1.0);
}

#[test]
fn mechanism_lower_family_file_and_dp_agree() {
    // every m = 1 spec at B = 20, p = 0.1: a in 11..=15, b = a + 4
    let specs: Vec<String> = (11..=15).map(|a| format!(r#"{{"B":20,"pairs":[[{a},{}]]}}"#, a + 4)).collect();
    let path = scratch("family.json");
    fs::write(&path, format!("[{}]", specs.join(","))).unwrap();
    let file = stdout_json(&bperc(&["mech", "lower", "--B", "20", "--p", "0.1", "--family", path.to_str().unwrap()]));
    let dp = stdout_json(&bperc(&["mech", "lower", "--B", "20", "--p", "0.1", "--m", "1"]));
    assert_eq!(dp["specs"], 5.0);
    let (a, b) = (file["bound"].as_f64().unwrap(), dp["bound"].as_f64().unwrap());
    assert!((a - b).abs() <= 1e-12 * a, "{a} vs {b}");

    fs::write(&path, format!("[{},{}]", specs[0], specs[0])).unwrap();
    let dup = bperc(&["mech", "lower", "--B", "20", "--p", "0.1", "--family", path.to_str().unwrap()]);
    assert_eq!(dup.status.code(), Some(2));
}

#[test]
fn oracle_and_special_functions() {
    let v = stdout_json(&bperc(&["oracle", "poly", "--L", "2", "--model", "standard"]));
    assert_eq!(v["counts"], serde_json::json!([0, 0, 2, 4, 1]));
    let d = stdout_json(&bperc(&["oracle", "dgap", "--u", "0.5,0.5,0.5"]));
    // 3 fair coins without two consecutive failures: 5/8
    assert!((d["value"].as_f64().unwrap() - 0.625).abs() < 1e-15);
    let s = stdout_json(&bperc(&["bounds", "special", "beta", "--x", "0.5"]));
    assert!((s["value"].as_f64().unwrap() - 0.809_017_0).abs() < 1e-7);
    let w = stdout_json(&bperc(&["bounds", "window", "--eps", "0.1"]));
    assert!(w["C_minus"].as_f64().unwrap() < w["C_plus"].as_f64().unwrap());
}

#[test]
fn lwindow_reports_ordered_endpoints() {
    let v = stdout_json(&bperc(&["lwindow", "--p", "0.3", "--eps", "0.1", "--trials", "400", "--seed", "2"]));
    assert!(v["L_lower"].as_u64().unwrap() <= v["L_upper"].as_u64().unwrap());
}
