use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn engine() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_entropy-engine"));
    c.env_remove(entropy_cli::OUT_DIR_ENV);
    c
}

fn run(spec: &str, out: &Path, extra: &[&str]) -> Output {
    engine()
        .arg("run")
        .arg(fixture(spec))
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

fn report(out: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

fn stage<'a>(r: &'a Value, name: &str) -> &'a Value {
    r["stages"]
        .as_array()
        .unwrap()
        .iter()
        .find(|s| s["stage"] == name)
        .unwrap_or_else(|| panic!("no stage {name}"))
}

fn files(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    v.sort();
    v
}

#[test]
fn empty_stage_list_gives_exit_zero_and_an_empty_bundle() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = run("empty.json", &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(files(&out), vec!["report.json"]);
    let r = report(&out);
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["stages"], serde_json::json!([]));
    assert_eq!(r["violations"], 0);
}

#[test]
fn oracle_end_to_end_matches_the_oracle() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = run("oracle_pipeline.json", &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let r = report(&out);
    let tables = &stage(&r, "construct_entropy")["result"]["tables"];
    let fit = &tables[0]["oracle_fit"];
    assert_eq!(fit["ok"], true);
    assert!(fit["max_residual"].as_f64().unwrap() <= 2.0 / 128.0);
    assert!(fit["slope"].as_f64().unwrap() > 0.0);
    assert_eq!(stage(&r, "check_ch")["violations"], 0);
    assert_eq!(stage(&r, "verify_principle")["violations"], 0);
    let csv = fs::read_to_string(out.join("entropy.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 64);
    assert!(out.join("principle.csv").exists());
}

#[test]
fn three_state_table_has_three_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = run("three_states.json", &out, &[]);
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(out.join("entropy.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "space,state,S,resolution");
    assert_eq!(lines.len(), 4);
    // References are the extreme states, normalized to 0 and 1.
    assert!(lines.contains(&"gas,cold,0,0.0078125"));
    assert!(lines.contains(&"gas,hot,1,0.0078125"));
}

#[test]
fn broken_transitivity_exits_one_with_a_witness() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = run("broken_pipeline.json", &out, &[]);
    assert_eq!(o.status.code(), Some(1));
    let r = report(&out);
    let scans = stage(&r, "check_axioms")["result"]["scans"].as_array().unwrap();
    let a2 = scans.iter().find(|s| s["axiom"] == "A2").unwrap();
    assert_eq!(a2["violations"], 1);
    assert_eq!(a2["witnesses"][0]["missing"], "(G:X) ≺ (G:Z)");
}

#[test]
fn closed_relation_passes_the_axiom_scans() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = run("chain_pipeline.json", &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let r = report(&out);
    assert_eq!(stage(&r, "check_axioms")["result"]["closed"], true);
    assert!(stage(&r, "close")["result"]["facts"].as_u64().unwrap() > 3);
}

#[test]
fn identical_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for spec in ["simple_pipeline.json", "oracle_pipeline.json", "calibration_pipeline.json"] {
        run(spec, &a, &[]);
        run(spec, &b, &[]);
        assert_eq!(files(&a), files(&b));
        for f in files(&a) {
            assert_eq!(fs::read(a.join(&f)).unwrap(), fs::read(b.join(&f)).unwrap(), "{spec}: {f}");
        }
    }
}

#[test]
fn seed_flag_changes_only_seeded_output() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    run("simple_pipeline.json", &a, &["--seed", "1"]);
    run("simple_pipeline.json", &b, &["--seed", "2"]);
    let (ra, rb) = (report(&a), report(&b));
    assert_eq!(ra["seed"], 1);
    assert_eq!(rb["seed"], 2);
    assert_ne!(
        stage(&ra, "simple_system_suite")["seed"],
        stage(&rb, "simple_system_suite")["seed"]
    );
}

#[test]
fn simple_and_thermal_suites_pass_on_regular_models() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = run("simple_pipeline.json", &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", fs::read_to_string(out.join("report.json")).unwrap());
    let r = report(&out);
    let models = stage(&r, "simple_system_suite")["result"]["models"].as_array().unwrap();
    for m in models {
        assert_eq!(m["nesting"]["cases"].get("crossing"), None);
        assert_eq!(m["lipschitz"]["bound"], 10.0);
    }
    let thermal = &stage(&r, "thermal_suite")["result"];
    assert_eq!(thermal["zeroth_law"]["report"]["violations"], serde_json::json!([]));
    let iso = fs::read_to_string(out.join("isotherms.csv")).unwrap();
    assert!(iso.starts_with("model,T,index,U,V1\n"));
    let adiabats = fs::read_to_string(out.join("adiabats.csv")).unwrap();
    assert!(adiabats.lines().count() > 100);
}

#[test]
fn stage_flags_replace_the_spec_list() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = run("simple_pipeline.json", &out, &["--stage", "simple_system_suite"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(report(&out)["stages"].as_array().unwrap().len(), 1);
    let o = run("simple_pipeline.json", &out, &["--stage", "no_such_stage"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn non_lipschitz_model_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = run("cusp_pipeline.json", &out, &[]);
    assert_eq!(o.status.code(), Some(1));
    let r = report(&out);
    let m = &stage(&r, "simple_system_suite")["result"]["models"][0];
    assert!(m["lipschitz"]["max_quotient"].as_f64().unwrap() > 100.0);
}

#[test]
fn calibration_reports_the_gap_and_inf_sentinels() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = run("calibration_pipeline.json", &out, &[]);
    assert_eq!(o.status.code(), Some(0));
    let r = report(&out);
    let res = &stage(&r, "calibration_suite")["result"];
    assert_eq!(res["infima"]["F"]["1"]["2"], "5");
    assert_eq!(res["infima"]["F"]["2"]["1"], "-3");
    assert_eq!(res["infima"]["D"]["1"]["3"], "inf");
    let gap = res["gaps"].as_array().unwrap().iter().find(|g| g["from"] == "1" && g["to"] == "2").unwrap();
    assert_eq!(gap["gap"], serde_json::json!({"kind": "gap", "width": "2"}));
    let b = &res["constants"]["solution"]["B"];
    let diff: f64 = b["1"].as_str().unwrap().parse::<f64>().unwrap() - b["2"].as_str().unwrap().parse::<f64>().unwrap();
    assert!((3.0..=5.0).contains(&diff));
    let csv = fs::read_to_string(out.join("matrices.csv")).unwrap();
    assert!(csv.starts_with("matrix,from,to,value\n"));
    assert!(csv.contains("D,1,3,inf\n"));
}

#[test]
fn input_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = run("out_of_order.json", &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("requires `close`"));
    assert!(!out.exists());

    let bad = tmp.path().join("bad.json");
    fs::write(&bad, "{\n  \"stages\": [\"close\",\n}").unwrap();
    let o = engine().arg("run").arg(&bad).arg("--out").arg(&out).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));

    let o = engine().arg("run").arg(fixture("empty.json")).output().unwrap();
    assert_eq!(o.status.code(), Some(2), "missing --out");
}

#[test]
fn environment_overrides_the_out_dir() {
    let tmp = tempfile::tempdir().unwrap();
    let flagged = tmp.path().join("flagged");
    let env_dir = tmp.path().join("from_env");
    let o = engine()
        .env(entropy_cli::OUT_DIR_ENV, &env_dir)
        .arg("run")
        .arg(fixture("empty.json"))
        .arg("--out")
        .arg(&flagged)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(env_dir.join("report.json").exists());
    assert!(!flagged.exists());
}

#[test]
fn validate_recognizes_every_file_kind() {
    for (file, kind) in [
        ("oracle_pipeline.json", "pipeline"),
        ("broken.json", "relation"),
        ("oracle_gas.json", "oracle"),
        ("vdw.json", "model"),
        ("gap.json", "graph"),
    ] {
        let o = engine().arg("validate").arg(fixture(file)).output().unwrap();
        assert_eq!(o.status.code(), Some(0), "{file}");
        assert!(String::from_utf8_lossy(&o.stdout).contains(&format!("valid {kind} file")));
    }
    let o = engine().arg("validate").arg(fixture("out_of_order.json")).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = engine().arg("validate").arg(fixture("missing.json")).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}
