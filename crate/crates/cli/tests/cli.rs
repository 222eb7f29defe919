use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn catalog(name: &str) -> PathBuf {
    root().join("catalog").join(format!("{name}.ks"))
}

fn ks(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ks"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("valid JSON on stdout")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Validates the keywords used by docs/report.schema.json: `type`, `properties`,
/// `required`, `additionalProperties: false`, `items`, `enum`, `minimum` and local `$ref`.
fn validate(root: &Value, schema: &Value, value: &Value, at: &str) -> Result<(), String> {
    if let Some(r) = schema.get("$ref").and_then(Value::as_str) {
        let name = r
            .strip_prefix("#/$defs/")
            .ok_or(format!("unsupported $ref {r}"))?;
        return validate(root, &root["$defs"][name], value, at);
    }
    if let Some(t) = schema.get("type") {
        let allowed: Vec<&str> = match t {
            Value::String(s) => vec![s.as_str()],
            Value::Array(a) => a.iter().filter_map(Value::as_str).collect(),
            _ => return Err(format!("{at}: bad type keyword")),
        };
        let ok = allowed.iter().any(|&t| match t {
            "object" => value.is_object(),
            "array" => value.is_array(),
            "string" => value.is_string(),
            "boolean" => value.is_boolean(),
            "null" => value.is_null(),
            "number" => value.is_number(),
            "integer" => value.is_u64() || value.is_i64(),
            _ => false,
        });
        if !ok {
            return Err(format!("{at}: {value} is not {allowed:?}"));
        }
    }
    if let Some(options) = schema.get("enum").and_then(Value::as_array) {
        if !options.contains(value) {
            return Err(format!("{at}: {value} not in {options:?}"));
        }
    }
    if let (Some(min), Some(x)) = (
        schema.get("minimum").and_then(Value::as_f64),
        value.as_f64(),
    ) {
        if x < min {
            return Err(format!("{at}: {x} below {min}"));
        }
    }
    if let Some(obj) = value.as_object() {
        let props = schema.get("properties").and_then(Value::as_object);
        for key in schema
            .get("required")
            .and_then(Value::as_array)
            .into_iter()
            .flatten()
        {
            let key = key.as_str().unwrap();
            if !obj.contains_key(key) {
                return Err(format!("{at}: missing {key}"));
            }
        }
        for (k, v) in obj {
            match props.and_then(|p| p.get(k)) {
                Some(s) => validate(root, s, v, &format!("{at}.{k}"))?,
                None if schema.get("additionalProperties") == Some(&Value::Bool(false)) => {
                    return Err(format!("{at}: unexpected {k}"))
                }
                None => {}
            }
        }
    }
    if let (Some(items), Some(arr)) = (schema.get("items"), value.as_array()) {
        for (i, v) in arr.iter().enumerate() {
            validate(root, items, v, &format!("{at}[{i}]"))?;
        }
    }
    Ok(())
}

fn schema() -> Value {
    let text = std::fs::read_to_string(root().join("docs/report.schema.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn schema_validator_rejects_bad_documents() {
    let s = schema();
    let bad = serde_json::json!({"sets": [], "missing": [], "errors": [], "pass": "yes"});
    assert!(validate(&s, &s, &bad, "$").is_err());
    let extra = serde_json::json!({"sets": [], "missing": [], "errors": [], "pass": true, "x": 1});
    assert!(validate(&s, &s, &extra, "$").is_err());
    let good = serde_json::json!({"sets": [], "missing": [], "errors": [], "pass": true});
    assert!(validate(&s, &s, &good, "$").is_ok());
}

#[test]
fn verify_cabello_passes() {
    let o = ks(&["verify", path_str(&catalog("cabello18"))]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).contains("result: PASS"));
}

#[test]
fn verify_reports_against_schema() {
    let o = ks(&["verify", path_str(&catalog("peres33")), "--format", "json"]);
    let doc = json(&o);
    let s = schema();
    validate(&s, &s["$defs"]["report"], &doc, "$").unwrap();
    assert_eq!(doc["computed"]["rigidity"]["null_dim"], 3);
    assert_eq!(doc["computed"]["parameter_count"], 1);
    assert_eq!(doc["checks"]["parameters"], false);
    assert_eq!(code(&o), 1);
}

#[test]
fn verify_flags_a_wrong_header() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(catalog("cabello18")).unwrap();
    let file = dir.path().join("bad.ks");
    std::fs::write(&file, text.replace("bases: 9", "bases: 99")).unwrap();
    let o = ks(&["verify", path_str(&file), "--format", "json"]);
    assert_eq!(code(&o), 1);
    let doc = json(&o);
    assert_eq!(doc["checks"]["bases"], false);
    assert_eq!(doc["checks"]["vectors"], true);
}

#[test]
fn input_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("broken.ks");
    std::fs::write(&file, "name: x\ndim: 3\n1, 0, (\n").unwrap();
    for cmd in ["verify", "color", "rigidity", "dot"] {
        let o = ks(&[cmd, path_str(&file)]);
        assert_eq!(code(&o), 2, "{cmd}");
        assert!(stderr(&o).contains("line 3"), "{cmd}: {}", stderr(&o));
    }
    let o = ks(&["verify", path_str(&dir.path().join("absent.ks"))]);
    assert_eq!(code(&o), 2);
    let o = ks(&[
        "verify",
        path_str(&catalog("cabello18")),
        "--rank-tol",
        "-1",
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn table_json_is_valid_and_reproducible() {
    let dir = root().join("catalog");
    let args = ["table1", path_str(&dir), "--format", "json", "--seed", "5"];
    let a = ks(&args);
    let b = ks(&args);
    assert_eq!(a.stdout, b.stdout);
    let doc = json(&a);
    let s = schema();
    validate(&s, &s, &doc, "$").unwrap();
    let names: Vec<&str> = doc["sets"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["name"].as_str().unwrap())
        .collect();
    assert_eq!(names, ks_cli::table::CATALOG_ORDER);
    assert_eq!(doc["missing"].as_array().unwrap().len(), 0);
    // some rows disagree with their reference figures, so the table exits 1
    assert_eq!(doc["pass"], false);
    assert_eq!(code(&a), 1);
}

#[test]
fn timing_is_opt_in() {
    let path = catalog("cabello18");
    let plain = json(&ks(&["verify", path_str(&path), "--format", "json"]));
    assert!(plain.get("timing_seconds").is_none());
    let timed = json(&ks(&[
        "verify",
        path_str(&path),
        "--format",
        "json",
        "--timing",
    ]));
    assert!(timed["timing_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn table_of_empty_directory() {
    let dir = tempfile::tempdir().unwrap();
    let o = ks(&["table1", path_str(dir.path())]);
    assert_eq!(code(&o), 2);
    assert_eq!(
        stdout(&o)
            .lines()
            .filter(|l| l.contains("pass") || l.contains("FAIL"))
            .count(),
        0
    );
}

#[test]
fn table_with_a_missing_file() {
    let dir = tempfile::tempdir().unwrap();
    for name in ks_cli::table::CATALOG_ORDER
        .iter()
        .filter(|&&n| n != "schuette33")
    {
        std::fs::copy(catalog(name), dir.path().join(format!("{name}.ks"))).unwrap();
    }
    let o = ks(&["table1", path_str(dir.path()), "--format", "json"]);
    let doc = json(&o);
    assert_eq!(doc["sets"].as_array().unwrap().len(), 8);
    assert_eq!(doc["missing"], serde_json::json!(["schuette33"]));
    assert!(stderr(&o).contains("missing schuette33.ks"));
    assert_eq!(code(&o), 1);
}

#[test]
fn flex_writes_reloadable_sets() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = ks(&[
        "flex",
        path_str(&catalog("peres33")),
        "--steps",
        "5",
        "--out-dir",
        path_str(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let tol = ks_core::Tolerance::default();
    let original = ks_core::build_graph(&ks_cli::load_set(&catalog("peres33")).unwrap(), &tol);
    for k in 1..=5 {
        let file = out.join(format!("peres33-flex-{k:02}.ks"));
        let set = ks_cli::load_set(&file).unwrap();
        assert_eq!(ks_core::build_graph(&set, &tol), original);
    }
    assert_eq!(std::fs::read_dir(&out).unwrap().count(), 5);
}

#[test]
fn flex_refuses_rigid_sets() {
    let dir = tempfile::tempdir().unwrap();
    let o = ks(&[
        "flex",
        path_str(&catalog("cabello18")),
        "--out-dir",
        path_str(dir.path()),
    ]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("set is rigid"));
}

#[test]
fn flex_zero_steps() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("none");
    let o = ks(&[
        "flex",
        path_str(&catalog("peres33")),
        "--steps",
        "0",
        "--out-dir",
        path_str(&out),
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(std::fs::read_dir(&out).map(|d| d.count()).unwrap_or(0), 0);
    let o = ks(&[
        "flex",
        path_str(&catalog("peres33")),
        "--step-size",
        "0.5",
        "--out-dir",
        path_str(&out),
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn dot_output() {
    let o = ks(&["dot", path_str(&catalog("cabello18"))]);
    assert_eq!(code(&o), 0);
    assert_eq!(
        stdout(&o).lines().filter(|l| l.contains(" -- ")).count(),
        63
    );
    let dir = tempfile::tempdir().unwrap();
    let triad = dir.path().join("triad.ks");
    std::fs::write(&triad, "name: triad\ndim: 3\n1,0,0\n0,1,0\n0,0,1\n").unwrap();
    let o = ks(&["dot", path_str(&triad)]);
    let text = stdout(&o);
    assert_eq!(text.lines().filter(|l| l.contains(" -- ")).count(), 3);
    assert_eq!(text.lines().filter(|l| l.contains("label=")).count(), 3);
}

#[test]
fn rigidity_output_is_seed_stable() {
    let path = catalog("peres24");
    let a = ks(&[
        "rigidity",
        path_str(&path),
        "--format",
        "json",
        "--seed",
        "3",
    ]);
    let b = ks(&[
        "rigidity",
        path_str(&path),
        "--format",
        "json",
        "--seed",
        "3",
    ]);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(code(&a), 0);
    let doc = json(&a);
    assert_eq!(doc["parameter_count"], 0);
    assert_eq!(doc["propagation"]["parameters_introduced"], 0);
}

#[test]
fn basis_index_override() {
    let path = catalog("schuette33");
    let o = ks(&[
        "rigidity",
        path_str(&path),
        "--format",
        "json",
        "--basis-index",
        "7",
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["parameter_count"], 0);
    let o = ks(&["rigidity", path_str(&path), "--basis-index", "99"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn color_reports_criticality() {
    let o = ks(&["color", path_str(&catalog("pavicic24")), "--format", "json"]);
    let doc = json(&o);
    assert_eq!(doc["colourable"], false);
    assert_eq!(doc["critical"], false);
    assert!(!doc["non_destroying_deletions"]
        .as_array()
        .unwrap()
        .is_empty());
    assert_eq!(code(&o), 0);
}
