use std::fs;
use std::path::PathBuf;
use std::sync::Arc;

use epimc_cli::document::{load_model, load_str, LoadError};
use epimc_core::fuzz::random_setup;
use epimc_core::{
    adequacy_impossible, check_adequacy, enumerate_runs, eval_pw, EpistemicSystem, Formula,
    Literal, Obstruction, Point,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

fn example(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples").join(format!("{name}.json"))
}

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = epimc_cli::run(args, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn missing_model_file_is_a_usage_error() {
    let (code, _, err) = run(&["check", "no/such/model.json", "--soundness"]);
    assert_eq!(code, 2);
    assert!(err.contains("no/such/model.json"), "{err}");
}

#[test]
fn unknown_setup_is_a_usage_error() {
    let path = example("therac_original");
    let (code, _, err) = run(&["check", path.to_str().unwrap(), "--setup", "nonesuch"]);
    assert_eq!(code, 2);
    assert!(err.contains("nonesuch"), "{err}");
}

#[test]
fn undeclared_protocol_action_is_located_by_pointer() {
    let text = fs::read_to_string(example("therac_original")).unwrap();
    let mut doc: Value = serde_json::from_str(&text).unwrap();
    doc["agents"][0]["protocol"][2]["actions"][0] = Value::from("launch");
    let err = load_str(&doc.to_string(), "bad.json").map(|_| ()).unwrap_err();
    assert!(matches!(err, LoadError::Invalid { .. }), "{err}");
    assert_eq!(err.pointer(), Some("/agents/0/protocol/2"));
    assert!(err.to_string().contains("launch"), "{err}");
}

#[test]
fn malformed_json_is_located_by_pointer() {
    let text = fs::read_to_string(example("driver_speeding")).unwrap();
    let mut doc: Value = serde_json::from_str(&text).unwrap();
    doc["states"][1]["locals"] = Value::from(7);
    let err = load_str(&doc.to_string(), "bad.json").map(|_| ()).unwrap_err();
    assert!(matches!(err, LoadError::Parse { .. }), "{err}");
    assert_eq!(err.pointer(), Some("/states/1/locals"));
}

#[test]
fn schema_version_mismatch_is_rejected() {
    let text = fs::read_to_string(example("driver_speeding")).unwrap();
    let mut doc: Value = serde_json::from_str(&text).unwrap();
    doc["schema_version"] = Value::from(2);
    let err = load_str(&doc.to_string(), "v2.json").map(|_| ()).unwrap_err();
    assert!(matches!(err, LoadError::SchemaVersion { .. }), "{err}");
}

fn eval_value(formula: &str) -> bool {
    let path = example("therac_original");
    let args = [
        "eval", path.to_str().unwrap(), "--setup", "naive", "--run", "3", "--time", "3",
        "--formula", formula, "--json",
    ];
    let (code, out, err) = run(&args);
    assert_eq!(code, 0, "{err}");
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["point"]["state"], "g5");
    v["value"].as_bool().unwrap()
}

#[test]
fn eval_at_the_stale_treatment_point() {
    assert!(eval_value("p_bad"));
    assert!(eval_value("p3 & p6"));
    assert!(!eval_value("K[h] p_bad"));
    assert!(!eval_value("Khat p_bad"));
    assert!(eval_value("Khat !p_bad"));
    assert!(eval_value("K[h] (p3 & p6)"));
}

#[test]
fn eval_rejects_points_outside_the_run_set() {
    let path = example("therac_original");
    let (code, _, err) = run(&["eval", path.to_str().unwrap(), "--run", "99", "--time", "0", "--formula", "p1"]);
    assert_eq!(code, 2);
    assert!(!err.is_empty());
}

// Oracle: the stale-treatment state g5 and the correct-treatment state g7 look
// the same to the operator, so no sound setup can flag g5.
#[test]
fn stale_treatment_cannot_be_known_under_any_sound_setup() {
    let loaded = load_model(&example("therac_original")).unwrap();
    let model = loaded.model.clone();
    let runs = Arc::new(enumerate_runs(model.clone(), 8).unwrap());
    let pi = model.interpretation().clone();
    let bad: Formula = "p_bad".parse().unwrap();
    let h = model.human().unwrap();

    let g5 = model.state_id("g5").unwrap();
    let g7 = model.state_id("g7").unwrap();
    assert_eq!(model.state(g5).local(h), model.state(g7).local(h));
    assert_eq!(model.show_local(model.state(g5).local(h)), "(new.data.in, treating)");

    let Obstruction::WitnessPair(p, q) = adequacy_impossible(&runs, &pi, &bad, h).unwrap() else {
        panic!("expected an obstruction");
    };
    assert_eq!(runs.state_at(p).unwrap(), g5);
    assert_eq!(runs.state_at(q).unwrap(), g7);
    assert!(eval_pw(&runs, &pi, p, &bad).unwrap());
    assert!(!eval_pw(&runs, &pi, q, &bad).unwrap());
    assert!(!eval_pw(&runs, &pi, p, &Formula::knows("h", bad.clone())).unwrap());
    // the pair is canonical: the first bad point in run order
    let first_bad = runs.points().find(|&x| eval_pw(&runs, &pi, x, &bad).unwrap()).unwrap();
    assert_eq!(p, first_bad);

    let props = pi.declared().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    let mut setups = vec![loaded.setup("naive").unwrap().clone()];
    for _ in 0..100 {
        let mut s = random_setup(&mut rng, &runs, &props);
        let l = model.state(g5).local(h).clone();
        let mut lits = s.explicit(&l).cloned().unwrap_or_default();
        lits.insert(Literal::pos("p_bad"));
        s.set_explicit(l, lits);
        setups.push(s);
    }
    for s in setups {
        let e = EpistemicSystem::new(runs.clone(), pi.clone(), s).unwrap();
        let verdict = check_adequacy(&e, &bad).unwrap();
        assert!(!verdict.is_adequate());
    }
}

#[test]
fn naive_setup_witnesses_the_unprocessed_edit() {
    let path = example("therac_original");
    let args = ["check", path.to_str().unwrap(), "--adequacy", "--setup", "naive", "--horizon", "8", "--json"];
    let (code, out, _) = run(&args);
    assert_eq!(code, 1);
    let v: Value = serde_json::from_str(&out).unwrap();
    let witnesses = v["soundness"]["witnesses"].as_array().unwrap();
    assert!(witnesses.iter().any(|w| w["clause"] == "1" && w["literal"] == "p5" && w["point"]["state"] == "g4"));
    assert!(witnesses.iter().any(|w| w["clause"] == "2" && w["point"]["state"] == "g5"));
    let missing = v["adequacy"]["missing_knowledge"].as_array().unwrap();
    assert!(!missing.is_empty());
    assert!(missing.iter().all(|p| p["state"] == "g5"));
    assert_eq!(v["obstruction"]["status"], "witness_pair");
}

fn explicit_at(doc: &Value, local: &[(&str, &str)]) -> Vec<String> {
    let setup = doc["setups"]
        .as_array()
        .unwrap()
        .iter()
        .find(|s| s["name"] == "max_sound")
        .expect("synthesized setup present");
    let entry = setup["explicit"]
        .as_array()
        .unwrap()
        .iter()
        .find(|e| local.iter().all(|(k, v)| e["local"][*k] == *v))
        .expect("local state present");
    entry["literals"].as_array().unwrap().iter().map(|l| l.as_str().unwrap().to_string()).collect()
}

#[test]
fn synthesis_withholds_p4_only_where_the_race_hides_it() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("synth.json");
    let path = example("therac_original");
    let (code, _, err) = run(&["synth", path.to_str().unwrap(), "-o", out_path.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let doc: Value = serde_json::from_str(&fs::read_to_string(&out_path).unwrap()).unwrap();
    let ready = explicit_at(&doc, &[("data.entry", "new.data.in"), ("system.status", "sys.ready.yes")]);
    assert!(!ready.contains(&"p4".to_string()) && !ready.contains(&"!p4".to_string()), "{ready:?}");
    assert!(!ready.contains(&"p5".to_string()));
    // the synthesized file loads and checks sound
    let (code, out, _) = run(&["check", out_path.to_str().unwrap(), "--soundness", "--setup", "max_sound"]);
    assert_eq!(code, 0, "{out}");

    let out_path = dir.path().join("synth_mod.json");
    let path = example("therac_modified");
    let (code, _, _) = run(&["synth", path.to_str().unwrap(), "-o", out_path.to_str().unwrap()]);
    assert_eq!(code, 0);
    let doc: Value = serde_json::from_str(&fs::read_to_string(&out_path).unwrap()).unwrap();
    for entry in ["new.data.in", "data.in"] {
        let ready = explicit_at(&doc, &[("data.entry", entry), ("system.status", "sys.ready.yes")]);
        assert!(ready.contains(&"p4".to_string()), "{ready:?}");
    }
}

#[test]
fn impossible_exit_codes() {
    let orig = example("therac_original");
    let modified = example("therac_modified");
    assert_eq!(run(&["impossible", orig.to_str().unwrap()]).0, 1);
    let (code, out, _) = run(&["impossible", modified.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(out.contains("NoObstruction"));
}

const NOP_ONLY: &str = r#"{
  "schema_version": 1,
  "name": "idle",
  "agents": [
    {
      "name": "h",
      "kind": "human",
      "variables": [{ "name": "x", "domain": ["x0"] }],
      "actions": ["nop"],
      "protocol": [{ "local": { "x": "x0" }, "actions": ["nop"] }]
    }
  ],
  "propositions": [{ "name": "p" }],
  "states": [{ "name": "s0", "locals": { "h": { "x": "x0" } } }],
  "initial": "s0",
  "interpretation": { "s0": { "p": true } },
  "transitions": []
}
"#;

#[test]
fn nop_only_model_has_a_single_absorbing_run() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("idle.json");
    fs::write(&path, NOP_ONLY).unwrap();
    let (code, out, err) = run(&["runs", path.to_str().unwrap(), "--horizon", "5", "--count"]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(out.trim(), "1");
    let (_, out, _) = run(&["runs", path.to_str().unwrap(), "--horizon", "5", "--count", "--json"]);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["runs"], 1);
}

#[test]
fn missing_horizon_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("idle.json");
    fs::write(&path, NOP_ONLY).unwrap();
    let (code, _, err) = run(&["runs", path.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("horizon"), "{err}");
    let (code, _, _) = run(&["runs", path.to_str().unwrap(), "--horizon", "0"]);
    assert_eq!(code, 2);
}

#[test]
fn dot_export_shades_only_bad_states() {
    let path = example("therac_original");
    let (code, out, _) = run(&["export-dot", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    let nodes: Vec<&str> = out.lines().filter(|l| l.contains("[label=\"g") && !l.contains("->")).collect();
    assert_eq!(nodes.len(), 9);
    let shaded: Vec<&str> = nodes.iter().copied().filter(|l| l.contains("fillcolor")).collect();
    assert_eq!(shaded.len(), 1);
    assert!(shaded[0].trim_start().starts_with("\"g5\""));

    let modified = example("therac_modified");
    let (_, out, _) = run(&["export-dot", modified.to_str().unwrap()]);
    assert!(!out.contains("fillcolor"));
    assert!(!out.contains("\"m5\""));
}

#[test]
fn point_helper_is_consistent_with_reports() {
    let loaded = load_model(&example("therac_original")).unwrap();
    let runs = enumerate_runs(loaded.model.clone(), 8).unwrap();
    let p = Point::new(3, 3);
    assert_eq!(runs.prefix_names(p).unwrap(), vec!["g0", "g1", "g4", "g5"]);
}
