use std::fs;
use std::path::{Path, PathBuf};

use epimc_cli::corpus::{run_corpus, CASES};
use epimc_cli::document::{load_model, save_string};
use serde_json::Value;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn schema(name: &str) -> jsonschema::JSONSchema {
    let text = fs::read_to_string(root().join("schema").join(name)).unwrap();
    let value: Value = serde_json::from_str(&text).unwrap();
    jsonschema::JSONSchema::compile(&value).unwrap()
}

fn assert_valid(schema: &jsonschema::JSONSchema, instance: &Value, what: &Path) {
    if let Err(errors) = schema.validate(instance) {
        let msgs: Vec<String> = errors.map(|e| format!("{} at {}", e, e.instance_path)).collect();
        panic!("{} fails its schema:\n{}", what.display(), msgs.join("\n"));
    }
}

#[test]
fn corpus_matches_golden_files() {
    let results = run_corpus(&root().join("examples"), &root().join("tests/golden"), false).unwrap();
    let total: usize = CASES.iter().map(|c| c.invocations.len()).sum();
    assert_eq!(results.len(), total);
    for r in &results {
        assert!(
            r.passed(),
            "{} {}: exit {} (expected {})\n{}",
            r.case,
            r.golden,
            r.exit,
            r.expected_exit,
            r.diff
        );
    }
}

#[test]
fn corpus_output_is_deterministic() {
    let examples = root().join("examples");
    let golden = root().join("tests/golden");
    let a = run_corpus(&examples, &golden, false).unwrap();
    let b = run_corpus(&examples, &golden, false).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.output, y.output, "{}", x.golden);
        assert_eq!(x.exit, y.exit);
    }
}

#[test]
fn bundled_models_round_trip_byte_identically() {
    for case in CASES {
        let path = root().join("examples").join(format!("{}.json", case.id));
        let text = fs::read_to_string(&path).unwrap();
        let loaded = load_model(&path).unwrap();
        assert_eq!(save_string(&loaded.document), text, "{}", path.display());
        let again = epimc_cli::document::to_document(&loaded.model, &loaded.setups);
        assert_eq!(save_string(&again), text, "{} via the semantic model", path.display());
    }
}

#[test]
fn bundled_models_match_the_model_schema() {
    let schema = schema("model.schema.json");
    for case in CASES {
        let path = root().join("examples").join(format!("{}.json", case.id));
        let value: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        assert_valid(&schema, &value, &path);
    }
}

#[test]
fn json_verdicts_match_the_verdict_schema() {
    let schema = schema("verdict.schema.json");
    let mut seen = 0;
    for entry in fs::read_dir(root().join("tests/golden")).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            let value: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
            assert_valid(&schema, &value, &path);
            seen += 1;
        }
    }
    assert!(seen >= 2);

    for model in ["therac_original", "therac_modified"] {
        let path = root().join("examples").join(format!("{model}.json"));
        let args = ["impossible", path.to_str().unwrap(), "--json"];
        let mut out = Vec::new();
        epimc_cli::run(&args, &mut out, &mut Vec::new());
        let value: Value = serde_json::from_slice(&out).unwrap();
        assert_valid(&schema, &value, &path);
    }
}

#[test]
fn schemas_reject_malformed_documents() {
    let verdict = schema("verdict.schema.json");
    let path = root().join("tests/golden/therac_original.check.json");
    let mut value: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    value["soundness"]["status"] = Value::from("maybe");
    assert!(!verdict.is_valid(&value));

    let model = schema("model.schema.json");
    let path = root().join("examples/driver_speeding.json");
    let mut value: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    value["agents"][0]["kind"] = Value::from("robot");
    assert!(!model.is_valid(&value));
    value["agents"][0]["kind"] = Value::from("human");
    value["schema_version"] = Value::from(2);
    assert!(!model.is_valid(&value));
}
