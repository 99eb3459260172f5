use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn logdp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_logdp")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.display().to_string()
}

// Just enough of JSON Schema for docs/summary.schema.json.
fn validate(v: &Value, s: &Value, root: &Value, at: &str, errs: &mut Vec<String>) {
    if let Some(r) = s.get("$ref").and_then(Value::as_str) {
        let name = r.trim_start_matches("#/$defs/");
        return validate(v, &root["$defs"][name], root, at, errs);
    }
    if let Some(c) = s.get("const") {
        if v != c {
            errs.push(format!("{at}: expected {c}"));
        }
    }
    if let Some(e) = s.get("enum").and_then(Value::as_array) {
        if !e.contains(v) {
            errs.push(format!("{at}: {v} not in enum"));
        }
    }
    if let Some(t) = s.get("type") {
        let types: Vec<&str> = match t {
            Value::String(x) => vec![x.as_str()],
            Value::Array(xs) => xs.iter().filter_map(Value::as_str).collect(),
            _ => vec![],
        };
        let ok = types.iter().any(|t| match *t {
            "object" => v.is_object(),
            "array" => v.is_array(),
            "string" => v.is_string(),
            "number" => v.is_number(),
            "integer" => v.is_u64() || v.is_i64(),
            "boolean" => v.is_boolean(),
            "null" => v.is_null(),
            _ => false,
        });
        if !ok {
            errs.push(format!("{at}: {v} is not {types:?}"));
            return;
        }
    }
    if let Some(x) = v.as_f64() {
        if s.get("minimum").and_then(Value::as_f64).is_some_and(|m| x < m) {
            errs.push(format!("{at}: {x} below minimum"));
        }
        if s.get("exclusiveMinimum").and_then(Value::as_f64).is_some_and(|m| x <= m) {
            errs.push(format!("{at}: {x} not above exclusive minimum"));
        }
    }
    if let Some(obj) = v.as_object() {
        for r in s.get("required").and_then(Value::as_array).into_iter().flatten() {
            if !obj.contains_key(r.as_str().unwrap()) {
                errs.push(format!("{at}: missing {r}"));
            }
        }
        let props = s.get("properties").and_then(Value::as_object);
        for (k, val) in obj {
            if let Some(names) = s.get("propertyNames") {
                validate(&Value::String(k.clone()), names, root, &format!("{at}.{k} (name)"), errs);
            }
            match props.and_then(|p| p.get(k)) {
                Some(sub) => validate(val, sub, root, &format!("{at}.{k}"), errs),
                None => match s.get("additionalProperties") {
                    Some(Value::Bool(false)) => errs.push(format!("{at}: unexpected key {k}")),
                    Some(sub @ Value::Object(_)) => validate(val, sub, root, &format!("{at}.{k}"), errs),
                    _ => {}
                },
            }
        }
    }
    if let (Some(items), Some(arr)) = (s.get("items"), v.as_array()) {
        for (i, x) in arr.iter().enumerate() {
            validate(x, items, root, &format!("{at}[{i}]"), errs);
        }
    }
}

fn check_schema(summary: &Path) {
    let schema: Value =
        serde_json::from_str(include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../docs/summary.schema.json")))
            .unwrap();
    let v: Value = serde_json::from_str(&fs::read_to_string(summary).unwrap()).unwrap();
    let mut errs = Vec::new();
    validate(&v, &schema, &schema, "$", &mut errs);
    assert!(errs.is_empty(), "{}: {errs:#?}", summary.display());
}

const EXAMPLE_I: &str = "
mesh.nx = 12
mesh.ny = 12
exponents.p = 2.6
exponents.q = 2.6
exponents.mu = 0.5
rhs.name = example_i
rhs.eps = 0.6
";

#[test]
fn verify_scalar_passes_and_writes_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("v");
    let o = logdp(&["verify", "--suite", "scalar", "--samples", "200", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("scalar.quotient_max") && stdout.contains("overall: pass"));
    let report: Value = serde_json::from_str(&fs::read_to_string(out.join("verify.json")).unwrap()).unwrap();
    assert_eq!(report["pass"], Value::Bool(true));
    assert!(out.join("verify.txt").exists());
}

#[test]
fn verify_negative_control_exits_one() {
    let o = logdp(&["verify", "--suite", "scalar", "--samples", "200", "--corrupt-cr", "1000"]);
    assert_eq!(code(&o), 1);
    let stdout = String::from_utf8(o.stdout).unwrap();
    let failing: Vec<&str> = stdout.lines().filter(|l| l.ends_with("FAIL") && !l.starts_with("overall")).collect();
    assert_eq!(failing.len(), 1, "{stdout}");
    assert!(failing[0].starts_with("scalar.monotone"));
}

#[test]
fn bad_input_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&logdp(&["verify", "--suite", "everything"])), 2);
    let missing = tmp.path().join("nope.cfg");
    assert_eq!(code(&logdp(&["solve", "--config", missing.to_str().unwrap()])), 2);
    let bad = write_config(tmp.path(), "bad.cfg", "rhs.name = zero\nmesh.nx = banana\n");
    let o = logdp(&["solve", "--config", &bad]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
    // q < p breaks (H)
    let h = write_config(tmp.path(), "h.cfg", "rhs.name = zero\nexponents.p = 3\nexponents.q = 2\n");
    let o = logdp(&["solve", "--config", &h]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("(H)"));
}

#[test]
fn solve_all_then_report() {
    let tmp = tempfile::tempdir().unwrap();
    let runs = tmp.path().join("runs");
    for (n, seed) in [(8, "3"), (12, "3")] {
        let text = EXAMPLE_I.replace("12", &n.to_string());
        let c = write_config(tmp.path(), &format!("ex{n}.cfg"), &text);
        let out = runs.join(format!("n{n}"));
        let o = logdp(&["solve", "--config", &c, "--mode", "all", "--seed", seed, "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
        for f in ["u0.csv", "v0.csv", "w0.csv", "summary.json", "config.txt", "fibering_w0.dat"] {
            assert!(out.join(f).exists(), "{f}");
        }
        check_schema(&out.join("summary.json"));
        let s: Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
        assert_eq!(s["seed"], 3);
        assert_eq!(s["energy_ordering"]["nodal_above_constant_sign"], Value::Bool(true));
    }
    // the stored config reproduces the run
    let again = tmp.path().join("again");
    let stored = runs.join("n12/config.txt");
    let o = logdp(&["solve", "--config", stored.to_str().unwrap(), "--seed", "3", "--out", again.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(fs::read(again.join("summary.json")).unwrap(), fs::read(runs.join("n12/summary.json")).unwrap());

    let o = logdp(&["report", runs.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let rep: Value = serde_json::from_str(&fs::read_to_string(runs.join("report.json")).unwrap()).unwrap();
    let rows = rep["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows[0]["energy_diff"].is_null() && rows[1]["energy_diff"].is_number());
    for f in ["report.txt", "energy_vs_h.dat", "fibering_profiles.dat"] {
        assert!(runs.join(f).exists(), "{f}");
    }

    let empty = tmp.path().join("empty");
    fs::create_dir_all(&empty).unwrap();
    assert_eq!(code(&logdp(&["report", empty.to_str().unwrap()])), 0);
}

#[test]
fn force_stamps_the_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "h3.cfg",
        "mesh.nx = 8\nmesh.ny = 8\nexponents.p = 1.5\nexponents.q = 5.5\nexponents.mu = 0.5\nrhs.name = power\nrhs.r = 5.8\nsolver.max_iters = 50\n",
    );
    let out = tmp.path().join("o");
    let o = logdp(&["solve", "--config", &cfg, "--mode", "nodal", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("(H3)"));
    let o = logdp(&["solve", "--config", &cfg, "--mode", "nodal", "--force", "--out", out.to_str().unwrap()]);
    assert!(matches!(code(&o), 0 | 1));
    check_schema(&out.join("summary.json"));
    let s: Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(s["forced"], Value::Bool(true));
    assert!(s["warnings"].as_array().unwrap().iter().any(|w| w.as_str().unwrap().starts_with("forced: (H3)")));
}

#[test]
fn fixed_mode_and_norm() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "lin.cfg",
        "mesh.nx = 16\nmesh.ny = 16\nexponents.p = 2\nexponents.q = 2\nexponents.mu = 0\nrhs.name = constant\nrhs.c = 1\nsolver.tol_residual = 1e-12\n",
    );
    let out = tmp.path().join("o");
    let o = logdp(&["solve", "--config", &cfg, "--mode", "fixed", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    check_schema(&out.join("summary.json"));
    // a fixed right-hand side has no Nehari structure
    assert_eq!(code(&logdp(&["solve", "--config", &cfg, "--mode", "positive", "--out", out.to_str().unwrap()])), 2);

    let field = out.join("u.csv");
    let o = logdp(&["norm", "--config", &cfg, field.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let get = |key: &str| -> f64 {
        text.lines().find(|l| l.starts_with(key)).unwrap().split_whitespace().nth(1).unwrap().parse().unwrap()
    };
    // p = q = 2, mu = 0: the modular is ∫|∇u|² and the norm its square root;
    // for the Poisson solution ∫|∇u|² = ∫u
    let total = get("modular");
    assert!((get("norm") - total.sqrt()).abs() < 1e-9 * total.sqrt());
    assert!(text.contains("pass"));

    let small = write_config(tmp.path(), "small.cfg", "mesh.nx = 4\nmesh.ny = 4\nrhs.name = zero\n");
    assert_eq!(code(&logdp(&["norm", "--config", &small, field.to_str().unwrap()])), 2);
}
