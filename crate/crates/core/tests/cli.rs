use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use atomrank::oracles::{gen_cp_example, gen_tensor_example};
use atomrank::report::{matrix_to_csv, tensor_to_json};
use serde_json::Value;
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_atomrank")).args(args).output().expect("binary runs")
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("bad JSON ({e}): {}\n{}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr))
    })
}

fn bound(r: &Value, name: &str) -> f64 {
    let entries = r["bounds"].as_array().unwrap();
    let e = entries.iter().find(|b| b["name"] == name).unwrap_or_else(|| panic!("no {name} in {r}"));
    e["value"].as_f64().unwrap_or_else(|| panic!("{name} failed: {e}"))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn nonneg_four_thirds() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "a.csv", "1,1\n1,0.5\n");
    let out = run(&["nonneg", "--input", s(&input), "--bounds", "tau"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert!((bound(&r, "tau") - 4.0 / 3.0).abs() < 1e-5);
    assert_eq!(r["schema"], 1);
    assert_eq!(r["instance"]["shape"], serde_json::json!([2, 2]));
    assert_eq!(r["instance"]["support_size"], 4);
    assert_eq!(r["bounds"].as_array().unwrap().len(), 1);
}

#[test]
fn nonneg_identity_tau_and_theta() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "i3.csv", "1,0,0\n0,1,0\n0,0,1\n");
    let r = report(&run(&["nonneg", "--input", s(&input), "--bounds", "tau,theta"]));
    assert!((bound(&r, "tau") - 3.0).abs() < 1e-5);
    assert!((bound(&r, "theta") - 3.0).abs() < 1e-5);
}

#[test]
fn nonneg_all_ones_every_bound_is_one() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "ones.csv", "2,2,2\n2,2,2\n");
    let out = run(&["nonneg", "--input", s(&input), "--bounds", "all"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    let names: Vec<&str> = r["bounds"].as_array().unwrap().iter().map(|b| b["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["tau", "omega", "theta", "chi_frac", "chi", "mutual_info"]);
    for name in names {
        assert!((bound(&r, name) - 1.0).abs() < 1e-5, "{name}");
    }
}

#[test]
fn strengthening_flags_are_echoed_and_used() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "a.csv", "1,1\n1,0.5\n");
    let r = report(&run(&["nonneg", "--input", s(&input), "--extra-2t", "--extra-nonneg", "--full"]));
    assert!((bound(&r, "tau") - 1.5).abs() < 1e-5);
    let b = &r["options"]["builder"];
    assert_eq!(b["use_reduced"], false);
    assert_eq!(b["add_two_minus_t"], true);
    assert_eq!(b["add_entrywise_nonneg"], true);
}

#[test]
fn report_is_deterministic_except_timings() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "m.csv", "1,0,0.5\n0.3,1,0\n0,0.7,1\n");
    let strip = |mut v: Value| {
        for b in v["bounds"].as_array_mut().unwrap() {
            b["wall_time_ms"] = Value::Null;
        }
        serde_json::to_string(&v).unwrap()
    };
    let args = ["nonneg", "--input", s(&input), "--bounds", "all"];
    let a = strip(report(&run(&args)));
    let b = strip(report(&run(&args)));
    assert_eq!(a, b);
}

#[test]
fn input_hash_ignores_formatting() {
    let dir = TempDir::new().unwrap();
    let a = write(&dir, "a.csv", "1,0.5\n0,1\n");
    let b = write(&dir, "b.csv", "# same matrix\n1.0 , 5e-1\n0.0,1\n");
    let ha = report(&run(&["nonneg", "--input", s(&a)]))["instance"]["input_sha256"].clone();
    let hb = report(&run(&["nonneg", "--input", s(&b)]))["instance"]["input_sha256"].clone();
    assert_eq!(ha, hb);
    assert_eq!(ha.as_str().unwrap().len(), 64);
}

#[test]
fn out_flag_and_json_alias_write_files() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "a.csv", "1,1\n1,1\n");
    for flag in ["--out", "--json"] {
        let target = dir.path().join(format!("r{flag}.json"));
        let out = run(&["nonneg", "--input", s(&input), flag, s(&target)]);
        assert_eq!(out.status.code(), Some(0));
        assert!(out.stdout.is_empty());
        let r: Value = serde_json::from_str(&std::fs::read_to_string(&target).unwrap()).unwrap();
        assert!((bound(&r, "tau") - 1.0).abs() < 1e-5);
    }
}

#[test]
fn dump_is_written_and_stable() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "d.csv", "1,0\n0,1\n");
    let d1 = dir.path().join("p1.txt");
    let d2 = dir.path().join("p2.txt");
    run(&["nonneg", "--input", s(&input), "--dump", s(&d1)]);
    run(&["nonneg", "--input", s(&input), "--dump", s(&d2)]);
    let text = std::fs::read_to_string(&d1).unwrap();
    assert_eq!(text, std::fs::read_to_string(&d2).unwrap());
    assert!(text.starts_with("conic-problem v1\nscalar t\nblock X 2 [(1,1) (2,2)]\n"));
    assert!(text.contains("eq zero(1,1)(2,2): 1*X[1,2] = 0\n"));
}

#[test]
fn input_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let neg = write(&dir, "neg.csv", "1,-1\n1,1\n");
    let out = run(&["nonneg", "--input", s(&neg)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("entry (1,2) is negative"));

    let ragged = write(&dir, "ragged.csv", "1,1\n1\n");
    assert_eq!(run(&["nonneg", "--input", s(&ragged)]).status.code(), Some(2));
    assert_eq!(run(&["nonneg", "--input", "/nonexistent/x.csv"]).status.code(), Some(2));
    let ok = write(&dir, "ok.csv", "1\n");
    assert_eq!(run(&["nonneg", "--input", s(&ok), "--bounds", "rank"]).status.code(), Some(2));
    assert_eq!(run(&["nonneg", "--input", s(&ok), "--tol", "2"]).status.code(), Some(2));
    assert_eq!(run(&["nonneg"]).status.code(), Some(2));

    let asym = write(&dir, "asym.csv", "1,0.5\n0,1\n");
    assert_eq!(run(&["cp", "--input", s(&asym)]).status.code(), Some(2));
    let indefinite = write(&dir, "indef.csv", "1,2\n2,1\n");
    assert_eq!(run(&["cp", "--input", s(&indefinite)]).status.code(), Some(2));
}

#[test]
fn size_cap_exits_4_with_report() {
    let dir = TempDir::new().unwrap();
    let n = 6;
    let mut text = String::new();
    for i in 0..n {
        let row: Vec<&str> = (0..n).map(|j| if i == j { "0" } else { "1" }).collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    let input = write(&dir, "big.csv", &text);
    let out = run(&["nonneg", "--input", s(&input), "--bounds", "chi"]);
    assert_eq!(out.status.code(), Some(4));
    let r = report(&out);
    assert!(bound(&r, "tau") > 0.0);
    let chi = &r["bounds"][1];
    assert_eq!(chi["status"], "too-large");
    assert!(chi["value"].is_null());
    assert!(chi["error"].as_str().unwrap().contains("cap is 25"));
}

#[test]
fn tensor_command() {
    let dir = TempDir::new().unwrap();
    let ones = write(&dir, "ones.json", r#"{"shape":[2,2,2],"data":[1,1,1,1,1,1,1,1]}"#);
    let r = report(&run(&["tensor", "--input", s(&ones)]));
    assert!((bound(&r, "tau") - 1.0).abs() < 1e-5);

    let t11 = write(&dir, "t11.json", &tensor_to_json(&gen_tensor_example(1.0, 1.0).unwrap()));
    assert!(bound(&report(&run(&["tensor", "--input", s(&t11)])), "tau") <= 2.0 + 1e-4);
    let t03 = write(&dir, "t03.json", &tensor_to_json(&gen_tensor_example(0.0, 3.0).unwrap()));
    assert!(bound(&report(&run(&["tensor", "--input", s(&t03)])), "tau") >= 1.0);

    let matrix = write(&dir, "m.json", r#"{"shape":[2,2],"data":[1,1,1,1]}"#);
    assert_eq!(run(&["tensor", "--input", s(&matrix)]).status.code(), Some(2));
    let short = write(&dir, "s.json", r#"{"shape":[2,2,2],"data":[1]}"#);
    assert_eq!(run(&["tensor", "--input", s(&short)]).status.code(), Some(2));
}

#[test]
fn cp_command() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "cp.csv", &matrix_to_csv(gen_cp_example(0.0, 0.0).unwrap().as_matrix()));
    let out = run(&["cp", "--input", s(&input), "--bounds", "all"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert!((bound(&r, "tau") - 6.0).abs() < 1e-4);
    assert_eq!(bound(&r, "rank"), 4.0);
    assert!((bound(&r, "c_frac") - 6.0).abs() < 1e-5);
    assert_eq!(bound(&r, "c_exact"), 6.0);

    let i5 = write(&dir, "i5.csv", &matrix_to_csv(&atomrank::NonnegMatrix::identity(5)));
    let r = report(&run(&["cp", "--input", s(&i5), "--bounds", "c_exact"]));
    assert!(bound(&r, "tau") >= 5.0 - 1e-5);
    assert_eq!(bound(&r, "c_exact"), 0.0);
    assert!(r["notes"][0].as_str().unwrap().contains("1,2,3,4,5"));
}

fn csv_rows(out: &Output) -> Vec<Vec<String>> {
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("param1,param2,bound,status"));
    lines.map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn scan_nested_rect() {
    let out = run(&["scan", "--family", "nested-rect", "--grid", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 9);
    let params: Vec<(String, String)> = rows.iter().map(|r| (r[0].clone(), r[1].clone())).collect();
    assert_eq!(params[..4], [("0".into(), "0".into()), ("0".into(), "0.5".into()), ("0".into(), "1".into()), ("0.5".into(), "0".into())]);
    let first: f64 = rows[0][2].parse().unwrap();
    assert!((first - 1.0).abs() < 1e-5);
    assert!(rows.iter().all(|r| r[3] == "ok"));
}

#[test]
fn scan_tensor_and_cp() {
    let out = run(&["scan", "--family", "tensor-2x2x2", "--grid", "3", "--range", "0:2,0:2"]);
    let rows = csv_rows(&out);
    let center = rows.iter().find(|r| r[0] == "1" && r[1] == "1").unwrap();
    assert!(center[2].parse::<f64>().unwrap() <= 2.0 + 1e-4);

    let out = run(&["scan", "--family", "cp-example", "--grid", "2", "--range", "0:3,0:3"]);
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 4);
    assert!((rows[0][2].parse::<f64>().unwrap() - 6.0).abs() < 1e-4);
    assert!((rows[3][2].parse::<f64>().unwrap() - 5.0).abs() < 1e-3);
}

#[test]
fn scan_bad_arguments_exit_2() {
    assert_eq!(run(&["scan", "--family", "nope"]).status.code(), Some(2));
    assert_eq!(run(&["scan", "--family", "nested-rect", "--grid", "1"]).status.code(), Some(2));
    assert_eq!(run(&["scan", "--family", "nested-rect", "--range", "0:2,0:1"]).status.code(), Some(2));
}
