use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::rngs::StdRng;
use rand::SeedableRng;
use serde_json::Value;
use tempfile::TempDir;

use storymin::random::{random_instance, random_story, InstanceParams};
use storymin::story;

const BUNDLE_SWAP: &str = r#"{
  "characters": ["a", "b", "c", "d"],
  "scenes": [
    {"id": "s1", "members": ["a", "b"], "begin": 0, "end": 1},
    {"id": "s2", "members": ["c", "d"], "begin": 0, "end": 1},
    {"id": "s3", "members": ["a", "c"], "begin": 2, "end": 3},
    {"id": "s4", "members": ["b", "d"], "begin": 2, "end": 3}
  ]
}"#;

/// s2 starts while s1 is still running and both contain b.
const OVERLAP: &str = r#"{
  "characters": ["a", "b", "c"],
  "scenes": [
    {"id": "s1", "members": ["a", "b"], "begin": 0, "end": 2},
    {"id": "s2", "members": ["b", "c"], "begin": [3, 2], "end": 4}
  ]
}"#;

fn storymin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_storymin"))
        .args(args)
        .env_remove("STORYMIN_TIME_LIMIT")
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn schema_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas")
}

fn load_schema(name: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(schema_dir().join(name)).unwrap()).unwrap()
}

/// Checks `value` against the subset of JSON Schema used by the published
/// schemas; returns the first mismatch.
fn check(schema: &Value, root: &Value, value: &Value, path: &str) -> Result<(), String> {
    if let Some(r) = schema.get("$ref").and_then(Value::as_str) {
        return match r.strip_prefix("#/$defs/") {
            Some(def) => check(&root["$defs"][def], root, value, path),
            None => {
                let other = load_schema(r);
                check(&other, &other, value, path)
            }
        };
    }
    if let Some(options) = schema.get("oneOf").and_then(Value::as_array) {
        let matching = options.iter().filter(|s| check(s, root, value, path).is_ok()).count();
        if matching != 1 {
            return Err(format!("{path}: {matching} oneOf branches match"));
        }
    }
    if let Some(allowed) = schema.get("enum").and_then(Value::as_array) {
        if !allowed.contains(value) {
            return Err(format!("{path}: {value} not in enum"));
        }
    }
    if let Some(t) = schema.get("type").and_then(Value::as_str) {
        let ok = match t {
            "object" => value.is_object(),
            "array" => value.is_array(),
            "string" => value.is_string(),
            "boolean" => value.is_boolean(),
            "null" => value.is_null(),
            "integer" => value.is_i64() || value.is_u64(),
            "number" => value.is_number(),
            _ => return Err(format!("unsupported type {t}")),
        };
        if !ok {
            return Err(format!("{path}: expected {t}, got {value}"));
        }
    }
    if let (Some(min), Some(v)) = (schema.get("minimum").and_then(Value::as_f64), value.as_f64()) {
        if v < min {
            return Err(format!("{path}: {v} below minimum {min}"));
        }
    }
    if let Some(obj) = value.as_object() {
        for key in schema.get("required").and_then(Value::as_array).into_iter().flatten() {
            if !obj.contains_key(key.as_str().unwrap()) {
                return Err(format!("{path}: missing {key}"));
            }
        }
        let props = schema.get("properties").and_then(Value::as_object);
        for (k, v) in obj {
            match props.and_then(|p| p.get(k)) {
                Some(s) => check(s, root, v, &format!("{path}.{k}"))?,
                None if schema.get("additionalProperties") == Some(&Value::Bool(false)) => {
                    return Err(format!("{path}: unexpected property {k}"));
                }
                None => {}
            }
        }
    }
    if let Some(items) = value.as_array() {
        if let Some(n) = schema.get("minItems").and_then(Value::as_u64) {
            if (items.len() as u64) < n {
                return Err(format!("{path}: fewer than {n} items"));
            }
        }
        if let Some(n) = schema.get("maxItems").and_then(Value::as_u64) {
            if items.len() as u64 > n {
                return Err(format!("{path}: more than {n} items"));
            }
        }
        if let Some(s) = schema.get("items") {
            for (i, item) in items.iter().enumerate() {
                check(s, root, item, &format!("{path}[{i}]"))?;
            }
        }
    }
    Ok(())
}

fn assert_conforms(schema_name: &str, value: &Value) {
    let schema = load_schema(schema_name);
    if let Err(e) = check(&schema, &schema, value, "$") {
        panic!("{schema_name}: {e}\n{value:#}");
    }
}

#[test]
fn checker_rejects_bad_documents() {
    let schema = load_schema("solve-stats.schema.json");
    let bad = serde_json::json!({"n_var": 1, "n_oddc": 0, "n_trans": 0, "n_sub": 1, "n_LPs": -1, "time": 0.1});
    assert!(check(&schema, &schema, &bad, "$").is_err());
    let extra = serde_json::json!({"n_var": 1, "n_oddc": 0, "n_trans": 0, "n_sub": 1, "n_LPs": 1, "time": 0.1, "x": 1});
    assert!(check(&schema, &schema, &extra, "$").is_err());
    let story = load_schema("story.schema.json");
    let bad_time: Value = serde_json::from_str(r#"{"characters":["a"],"scenes":[{"id":"s","members":["a"],"begin":[1,2,3],"end":1}]}"#).unwrap();
    assert!(check(&story, &story, &bad_time, "$").is_err());
}

#[test]
fn story_files_conform_to_schema() {
    assert_conforms("story.schema.json", &serde_json::from_str(BUNDLE_SWAP).unwrap());
    assert_conforms("story.schema.json", &serde_json::from_str(OVERLAP).unwrap());
    let mut rng = StdRng::seed_from_u64(3);
    for _ in 0..20 {
        let s = random_story(&mut rng, 5, 4);
        assert_conforms("story.schema.json", &serde_json::from_str(&story::to_json(&s)).unwrap());
    }
}

#[test]
fn solve_bundle_swap_reports_one() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "story.json", BUNDLE_SWAP);
    let stats = dir.path().join("s.json");
    let out = storymin(&["solve", &input, "--stats-json", stats.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("status: optimal"));
    assert!(text.contains("crossings: 1"));
    let stats: Value = serde_json::from_str(&fs::read_to_string(&stats).unwrap()).unwrap();
    assert_conforms("solve-stats.schema.json", &stats);

    let out = storymin(&["solve", &input, "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_conforms("solve-output.schema.json", &v);
    assert_eq!(v["crossings"], 1);
    assert_eq!(v["lower_bound"], 1);
}

#[test]
fn validate_reports_overlapping_pair() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "story.json", OVERLAP);
    let out = storymin(&["validate", &input]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("s1") && text.contains("s2"), "{text}");

    let out = storymin(&["validate", &input, "--format", "json"]);
    assert_eq!(out.status.code(), Some(1));
    let v = stdout_json(&out);
    assert_conforms("validation.schema.json", &v);
    assert_eq!(v["valid"], false);
    let msg = v["errors"][0]["message"].as_str().unwrap();
    assert_eq!(v["errors"][0]["code"], "shared_member_overlap");
    assert!(msg.contains("s1") && msg.contains("s2"));

    // other subcommands refuse the same input with the same exit code
    assert_eq!(storymin(&["solve", &input]).status.code(), Some(1));
}

#[test]
fn validate_accepts_good_input_and_checks_solutions() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "story.json", BUNDLE_SWAP);
    let out = storymin(&["validate", &input, "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    assert_conforms("validation.schema.json", &stdout_json(&out));

    let sol = dir.path().join("sol.txt");
    let out = storymin(&["solve", &input, "--solution-out", sol.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(storymin(&["validate", &input, "--solution", sol.to_str().unwrap()]).status.code(), Some(0));
    let wrong = fs::read_to_string(&sol).unwrap().replace("crossings=1", "crossings=0");
    let wrong = write(&dir, "wrong.txt", &wrong);
    assert_eq!(storymin(&["validate", &input, "--solution", &wrong]).status.code(), Some(1));
}

#[test]
fn syntax_errors_carry_a_location() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "story.json", "{\"characters\": [\"a\"],\n \"scenes\": [}");
    let out = storymin(&["validate", &input, "--format", "json"]);
    assert_eq!(out.status.code(), Some(1));
    let v = stdout_json(&out);
    assert_conforms("validation.schema.json", &v);
    assert_eq!(v["errors"][0]["code"], "syntax");
    assert_eq!(v["errors"][0]["location"]["line"], 2);
}

#[test]
fn oracle_and_solve_agree_on_corpus() {
    let dir = TempDir::new().unwrap();
    let mut rng = StdRng::seed_from_u64(11);
    for k in 0..8 {
        let inst = random_instance(&mut rng, &InstanceParams::default());
        let input = write(&dir, &format!("i{k}.txt"), &inst.to_text());
        let o = storymin(&["oracle", &input, "--format", "json"]);
        assert_eq!(o.status.code(), Some(0));
        let o = stdout_json(&o);
        assert_conforms("oracle-output.schema.json", &o);
        let s = storymin(&["solve", &input, "--format", "json"]);
        assert_eq!(s.status.code(), Some(0));
        let s = stdout_json(&s);
        assert_conforms("solve-output.schema.json", &s);
        assert_eq!(o["crossings"], s["crossings"], "instance {k}");
        let t = storymin(&["solve", &input, "--format", "json", "--threads", "2"]);
        assert_eq!(stdout_json(&t)["crossings"], s["crossings"]);
    }
}

#[test]
fn oracle_budget_exhaustion_is_an_internal_error() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "story.json", BUNDLE_SWAP);
    let out = storymin(&["oracle", &input, "--budget", "1", "--format", "json"]);
    assert_eq!(out.status.code(), Some(3));
    assert_conforms("error.schema.json", &stdout_json(&out));
}

#[test]
fn heuristic_and_timeout() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "story.json", BUNDLE_SWAP);
    let out = storymin(&["heuristic", &input, "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_conforms("solve-output.schema.json", &v);
    assert!(v["crossings"].as_u64().unwrap() >= 1);

    let out = storymin(&["solve", &input, "--heuristic-only", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    assert_conforms("solve-output.schema.json", &stdout_json(&out));

    // a zero time limit either proves optimality at the root or stops with the incumbent
    let out = Command::new(env!("CARGO_BIN_EXE_storymin"))
        .args(["solve", &input, "--format", "json"])
        .env("STORYMIN_TIME_LIMIT", "0")
        .output()
        .unwrap();
    let v = stdout_json(&out);
    assert_conforms("solve-output.schema.json", &v);
    match v["status"].as_str().unwrap() {
        "timeout" => assert_eq!(out.status.code(), Some(2)),
        "optimal" => assert_eq!(out.status.code(), Some(0)),
        other => panic!("unexpected status {other}"),
    }
}

#[test]
fn convert_then_solve_instance_file() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "story.json", BUNDLE_SWAP);
    let inst = dir.path().join("inst.txt");
    let out = storymin(&["convert", &input, "--out", inst.to_str().unwrap(), "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_conforms("convert-output.schema.json", &v);
    assert_eq!(v["layers"], 2);
    assert_eq!(v["layers_before_merge"], 4);
    assert_eq!(fs::read_to_string(&inst).unwrap(), v["instance"].as_str().unwrap());

    let out = storymin(&["convert", &input, "--no-merge", "--format", "json"]);
    assert_eq!(stdout_json(&out)["layers"], 4);

    let out = storymin(&["solve", inst.to_str().unwrap(), "--format", "json"]);
    assert_eq!(stdout_json(&out)["crossings"], 1);

    let out = storymin(&["stats", inst.to_str().unwrap(), "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_conforms("instance-stats.schema.json", &v);
    assert_eq!(v["nodes"], 8);
    assert_eq!(v["edges"], 4);
}

#[test]
fn book_mode_orders_scenes_by_position() {
    let dir = TempDir::new().unwrap();
    let book = r#"{"characters": ["a", "b", "c"], "scenes": [
        {"id": "ch1", "members": ["a", "b"]},
        {"id": "ch2", "members": ["b", "c"]},
        {"id": "ch3", "members": ["a", "c"]}
    ]}"#;
    let input = write(&dir, "book.json", book);
    assert_eq!(storymin(&["validate", &input]).status.code(), Some(1));
    let out = storymin(&["convert", &input, "--book-mode", "--no-merge", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out)["layers"], 3);
}

#[test]
fn render_writes_svg() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "story.json", BUNDLE_SWAP);
    let svg = dir.path().join("out.svg");
    let out = storymin(&[
        "render",
        &input,
        "--out",
        svg.to_str().unwrap(),
        "--width",
        "50",
        "--row-height",
        "10",
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_conforms("render-output.schema.json", &v);
    assert_eq!(v["crossings"], 1);
    let text = fs::read_to_string(&svg).unwrap();
    assert!(text.starts_with("<svg") && text.contains("data-crossings=\"1\""));

    let out = storymin(&["render", &input, "--smooth"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("<path d=\"M ") && text.contains("crossings: 1"));
    assert_eq!(storymin(&["render", &input, "--smooth"]).stdout, text.into_bytes());
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(storymin(&[]).status.code(), Some(64));
    assert_eq!(storymin(&["solve"]).status.code(), Some(64));
    assert_eq!(storymin(&["bogus"]).status.code(), Some(64));
    assert_eq!(storymin(&["solve", "x.json", "--format", "yaml"]).status.code(), Some(64));
    assert_eq!(storymin(&["solve", "x.json", "--threads", "0"]).status.code(), Some(64));
    assert_eq!(storymin(&["--help"]).status.code(), Some(0));
}

#[test]
fn missing_file_is_an_internal_error() {
    let out = storymin(&["solve", "/nonexistent/story.json"]);
    assert_eq!(out.status.code(), Some(3));
}
