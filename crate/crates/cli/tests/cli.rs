use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn cli(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let mut full = vec!["loosecycle"];
    full.extend_from_slice(args);
    let code = loosecycle_cli::run(full, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn json(text: &str) -> Value {
    serde_json::from_str(text).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn extremal_generic_search_is_none() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.hg").display().to_string();
    let (code, _, err) = cli(&["generate", "extremal", "--k", "3", "--n", "9", "--out", &g]);
    assert_eq!(code, 0);
    assert!(err.starts_with("loosecycle: config {"));
    let (code, out, _) = cli(&["find", "--graph", &g, "--what", "generic-hamilton"]);
    assert_eq!(code, 1);
    assert_eq!(json(&out)["result"], "none");
}

#[test]
fn labels_sidecar_records_parts() {
    let dir = tempfile::tempdir().unwrap();
    let labels = dir.path().join("l.json");
    let l = labels.display().to_string();
    let (code, _, _) = cli(&["generate", "extremal", "--k", "3", "--n", "9", "--labels", &l]);
    assert_eq!(code, 0);
    let v = json(&std::fs::read_to_string(&labels).unwrap());
    assert_eq!(v["labels"]["V1"], serde_json::json!([0, 1]));
    let (_, _, _) = cli(&["generate", "ak", "--k", "3", "--labels", &l]);
    let v = json(&std::fs::read_to_string(&labels).unwrap());
    assert_eq!(v["labels"]["U3"], serde_json::json!([6, 7]));
}

#[test]
fn json_outputs_have_sorted_keys_and_config() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "g.hg", "6 3\n0 1 2\n0 1 3\n2 3 4\n");
    let (code, out, _) = cli(&["degrees", "--graph", &g]);
    assert_eq!(code, 0);
    let v = json(&out);
    assert_eq!(v["min_codegree"], 0);
    assert_eq!(v["config"]["command"], "degrees");
    let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    // Key order survives in the text, not only in the parsed map.
    let positions: Vec<usize> = ["\"config\"", "\"histogram\"", "\"k\"", "\"min_codegree\"", "\"n\""]
        .iter()
        .map(|k| out.find(k).unwrap())
        .collect();
    assert!(positions.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn invalid_certificate_exits_one_with_violation() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "g.hg", "5 3\n0 1 2\n2 3 4\n");
    let cert = write(
        dir.path(),
        "c.json",
        r#"{"kind":"loose_path","order":[0,1,2,3,4],"edges":[[0,1,2],[2,3,4]],"exceptional_pair":null}"#,
    );
    assert_eq!(cli(&["check", "--graph", &g, "--cert", &cert]).0, 0);
    let bad = write(
        dir.path(),
        "b.json",
        r#"{"kind":"loose_path","order":[0,1,3,2,4],"edges":[[0,1,2],[2,3,4]],"exceptional_pair":null}"#,
    );
    let (code, out, _) = cli(&["check", "--graph", &g, "--cert", &bad]);
    assert_eq!(code, 1);
    let v = json(&out);
    assert_eq!(v["valid"], false);
    assert!(v["violation"]["kind"].is_string());
}

#[test]
fn exit_codes_for_errors() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = cli(&["find", "--graph", "x.hg", "--what", "loose-hamilton", "--frobnicate"]);
    assert_eq!(code, 3);
    assert!(err.starts_with("loosecycle: error[usage]:"));
    let (code, _, err) = cli(&["degrees", "--graph", "/definitely/not/here.hg"]);
    assert_eq!(code, 4);
    assert!(err.starts_with("loosecycle: error[io]:"));
    let dup = write(dir.path(), "d.hg", "4 3\n0 1 2\n0 1 2\n");
    let (code, _, err) = cli(&["degrees", "--graph", &dup]);
    assert_eq!(code, 4);
    assert!(err.starts_with("loosecycle: error[parse]:"));
    let g = write(dir.path(), "g.hg", "7 3\n0 1 2\n");
    assert_eq!(cli(&["find", "--graph", &g, "--what", "loose-path"]).0, 3);
    assert_eq!(cli(&["generate", "extremal", "--k", "2", "--n", "9"]).0, 3);
    assert_eq!(cli(&["--help"]).0, 0);
}

#[test]
fn budget_exhaustion_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.hg").display().to_string();
    cli(&["generate", "extremal", "--k", "3", "--n", "11", "--out", &g]);
    let (code, out, _) = cli(&["find", "--graph", &g, "--what", "generic-hamilton", "--budget-nodes", "5"]);
    assert_eq!(code, 2);
    assert_eq!(json(&out)["result"], "budget_exhausted");
    let (code, _, _) = cli(&["count", "--graph", &g, "--budget-nodes", "5"]);
    assert_eq!(code, 2);
}

#[test]
fn count_on_complete_graph() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.hg").display().to_string();
    cli(&["generate", "complete", "--k", "3", "--n", "6", "--out", &g]);
    let (code, out, _) = cli(&["count", "--graph", &g]);
    assert_eq!(code, 0);
    assert_eq!(json(&out)["count"], 120);
}

#[test]
fn pack_round_trips_through_library() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.hg").display().to_string();
    cli(&["generate", "complete", "--k", "3", "--n", "16", "--out", &g]);
    let (code, out, _) = cli(&["pack", "--graph", &g, "--augment-rounds", "2", "--connected"]);
    assert_eq!(code, 0);
    let v = json(&out);
    assert_eq!(v["copies"].as_array().unwrap().len(), 2);
    assert_eq!(v["uncovered"], serde_json::json!([]));
    let host = loosecycle::KGraph::parse_text(&std::fs::read_to_string(&g).unwrap()).unwrap();
    let p = loosecycle::Packing::from_json(&v).unwrap();
    assert!(p.validate(&host).is_ok());
}

#[test]
fn plan_reports_ok_and_infeasible() {
    let dir = tempfile::tempdir().unwrap();
    let system = r#"{"k":3,"groups":[{"classes":[4,4,4],"clusters":[0,1,2]},{"classes":[4,4,5],"clusters":[3,4,5]}],"reduced_edges":[[2,3,4]]}"#;
    let s = write(dir.path(), "s.json", system);
    let (code, out, _) = cli(&["plan", "--system", &s, "--from", "1", "--to", "0"]);
    assert_eq!(code, 0, "{out}");
    let v = json(&out);
    assert_eq!(v["plan"]["d"], serde_json::json!([1, 1]));
    assert_eq!(v["config"]["excess"], 1);
    let (code, out, _) = cli(&["plan", "--system", &s, "--from", "1", "--to", "0", "--excess", "0"]);
    assert_eq!(code, 1);
    assert_eq!(json(&out)["result"], "infeasible");
    let split = r#"{"k":3,"groups":[{"classes":[4,4,4],"clusters":[0,1,2]},{"classes":[4,4,5],"clusters":[3,4,5]}],"reduced_edges":[[0,1,2],[3,4,5]]}"#;
    let s2 = write(dir.path(), "s2.json", split);
    assert_eq!(cli(&["plan", "--system", &s2, "--from", "0", "--to", "1"]).0, 1);
    let broken = write(dir.path(), "b.json", r#"{"k":3}"#);
    assert_eq!(cli(&["plan", "--system", &broken, "--from", "0", "--to", "0"]).0, 4);
}

#[test]
fn assemble_is_deterministic_and_checkable() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("h.hg").display().to_string();
    let (c1, out1, _) = cli(&["assemble", "--k", "4", "--groups", "2", "--vertices", "60", "--exceptional", "4", "--seed", "3", "--graph-out", &g]);
    let (c2, out2, _) = cli(&["assemble", "--k", "4", "--groups", "2", "--vertices", "60", "--exceptional", "4", "--seed", "3"]);
    assert_eq!((c1, c2), (0, 0));
    assert_eq!(out1, out2);
    let cert = write(dir.path(), "c.json", &out1);
    assert_eq!(cli(&["check", "--graph", &g, "--cert", &cert, "--hamilton"]).0, 0);
    let (code, out, _) = cli(&["assemble", "--host", "group-local", "--vertices", "44"]);
    assert_eq!(code, 1);
    assert_eq!(json(&out)["failure"]["stage"], "connecting_path");
    assert_eq!(cli(&["assemble", "--host", "sparse"]).0, 3);
}

#[test]
fn split_experiment_echoes_seed_and_repeats() {
    let args = [
        "split-experiment", "--trials", "200", "--seed", "11", "--sizes", "30,30,30", "--targets", "15,15,15",
        "--variant", "independent",
    ];
    let (code, a, _) = cli(&args);
    let (_, b, _) = cli(&args);
    assert_eq!(code, 0);
    assert_eq!(a, b);
    let v = json(&a);
    assert_eq!(v["config"]["seed"], 11);
    assert_eq!(v["variant"], "independent_inclusion");
    assert_eq!(cli(&["split-experiment", "--sizes", "3,3", "--targets", "1"]).0, 3);
}

#[test]
fn out_file_is_replaced_atomically() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "g.hg", "old contents\n");
    assert_eq!(cli(&["generate", "complete", "--k", "3", "--n", "5", "--out", &g]).0, 0);
    assert_eq!(std::fs::read_to_string(&g).unwrap().lines().next(), Some("5 3"));
    let leftovers = std::fs::read_dir(dir.path()).unwrap().count();
    assert_eq!(leftovers, 1);
}

#[test]
fn binary_runs_and_sets_exit_code() {
    let bin = env!("CARGO_BIN_EXE_loosecycle");
    let out = Command::new(bin).args(["generate", "complete", "--k", "3", "--n", "4"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 5);
    let out = Command::new(bin).arg("nonsense").output().unwrap();
    assert_eq!(out.status.code(), Some(3));
}
