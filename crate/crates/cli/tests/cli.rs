use std::path::PathBuf;
use std::process::Command;

use isofill_core::driver::families::{box_chain, parse_space};

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("isofill-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn isofill(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_isofill")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap())
}

#[test]
fn fill_reports_a_verified_boundary_and_the_oracle_mass() {
    let dir = scratch("fill");
    let x = parse_space("grid:3,6,1").unwrap();
    let t = box_chain(&x, &[1, 1, 1], &[3, 4, 3]).unwrap().boundary(&x);
    let cycle = dir.join("cycle.json");
    let filling = dir.join("filling.json");
    std::fs::write(&cycle, t.to_json()).unwrap();
    let (code, stdout) = isofill(&[
        "fill",
        "--space",
        "grid:3,6,1",
        "--cycle",
        cycle.to_str().unwrap(),
        "--oracle",
        "--out",
        filling.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{stdout}");
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["boundary_verified"], true);
    assert_eq!(v["oracle_mass"], "12");
    assert_eq!(v["fill_mass"].as_f64(), Some(12.0));
    let chain = isofill_core::Chain::from_json(&x, &std::fs::read_to_string(filling).unwrap()).unwrap();
    assert_eq!(chain.boundary(&x), t);
}

#[test]
fn experiment_writes_one_row_per_instance_and_method() {
    let dir = scratch("experiment");
    let csv = dir.join("loops.csv");
    let (code, _) = isofill(&[
        "experiment",
        "--family",
        "grid2_loops",
        "--params",
        "m=2..5",
        "--delta",
        "1/2",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("instance_id,k,mass_T,fill_mass,method,delta,runtime_ms"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 8);
    assert_eq!(rows.iter().filter(|r| r.contains(",min_filling,")).count(), 4);
}

#[test]
fn calibrate_writes_loadable_constants() {
    let dir = scratch("calibrate");
    let out = dir.join("c.json");
    let (code, _) = isofill(&["calibrate", "--space", "grid:2,10,1", "--samples", "4", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    let c = isofill_core::driver::Constants::from_json(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert!(c.c_prime > 0.0 && c.kappa_cone > 0.0);
}

#[test]
fn bad_input_exits_with_an_error() {
    let (code, _) = isofill(&["fill", "--space", "grid:0,1,1", "--cycle", "/nonexistent.json"]);
    assert_eq!(code, 1);
    let (code, _) = isofill(&["experiment", "--family", "nope", "--out", "/tmp/x.csv"]);
    assert_eq!(code, 1);
}
