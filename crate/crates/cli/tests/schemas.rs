//! Every file the CLI writes, and every shipped input file, validates against
//! the schema in docs/schemas.

use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

fn workspace() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn load(path: &Path) -> Value {
    let text = std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    serde_json::from_str(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn check(schema: &str, instance: &Value, what: &str) {
    let schema = load(&workspace().join("docs/schemas").join(schema));
    let validator = jsonschema::validator_for(&schema).expect("schema compiles");
    let errors: Vec<String> = validator.iter_errors(instance).map(|e| format!("{e} at {}", e.instance_path())).collect();
    assert!(errors.is_empty(), "{what}: {errors:#?}");
}

fn run(args: &[&str]) {
    let out = Command::new(env!("CARGO_BIN_EXE_pulsekit")).args(args).env_remove("PULSEKIT_SEED").output().unwrap();
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn shipped_inputs_validate() {
    let root = workspace();
    for name in ["single_qubit.json", "star5.json"] {
        check("platform.schema.json", &load(&root.join("platforms").join(name)), name);
    }
    for name in ["single_qubit_qpu.json", "star5_qpu.json"] {
        check("qpu.schema.json", &load(&root.join("platforms").join(name)), name);
    }
    for entry in std::fs::read_dir(root.join("circuits")).unwrap() {
        let path = entry.unwrap().path();
        check("circuit.schema.json", &load(&path), &path.display().to_string());
    }
    for entry in std::fs::read_dir(root.join("benchmarks")).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            check("benchmark_config.schema.json", &load(&path), &path.display().to_string());
        }
    }
    let star = pulsekit::transpiler::Connectivity::star(5).to_json().unwrap();
    check("connectivity.schema.json", &serde_json::from_str(&star).unwrap(), "star connectivity");
}

#[test]
fn outputs_validate() {
    let root = workspace();
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let platform = root.join("platforms/single_qubit.json");
    let star = root.join("platforms/star5.json");
    let ghz = root.join("circuits/ghz5.json");

    run(&["transpile", ghz.to_str().unwrap(), "--connectivity", "star:5", "-o", out]);
    let routed = dir.path().join("transpiled.json");
    run(&["compile", routed.to_str().unwrap(), "--platform", star.to_str().unwrap(), "-o", out]);
    let saved = dir.path().join("platform_out.json");
    run(&[
        "run-experiment",
        "t1",
        "--platform",
        platform.to_str().unwrap(),
        "-o",
        out,
        "--save-platform",
        saved.to_str().unwrap(),
    ]);
    run(&["run-experiment", "standard_rb", "--platform", platform.to_str().unwrap(), "--points", "4", "--nshots", "64", "-o", out]);
    run(&["chsh", "--platform", star.to_str().unwrap(), "--thetas", "0,0.785", "--nshots", "256", "--mitigate", "-o", out]);
    run(&["benchmark", "--suite", "t1,rabi_amplitude", "--compare-batch", "3", "-o", out]);
    run(&["report", out, "-o", out]);

    let d = dir.path();
    check("transpile_summary.schema.json", &load(&d.join("transpile_summary.json")), "transpile summary");
    check("circuit.schema.json", &load(&d.join("transpiled.json")), "transpiled circuit");
    check("compiled.schema.json", &load(&d.join("compiled.json")), "compiled");
    let jsonl = std::fs::read_to_string(d.join("sequence.jsonl")).unwrap();
    assert!(jsonl.lines().count() > 0);
    for line in jsonl.lines() {
        check("pulse.schema.json", &serde_json::from_str(line).unwrap(), "pulse line");
    }
    for report in ["t1.json", "standard_rb.json", "chsh.json"] {
        check("report.schema.json", &load(&d.join(report)), report);
    }
    check("platform.schema.json", &load(&saved), "saved platform");
    check("benchmark_summary.schema.json", &load(&d.join("benchmark.json")), "benchmark summary");
    check("batch_comparison.schema.json", &load(&d.join("batch_vs_loop.json")), "batch comparison");
    let summary = load(&d.join("summary.json"));
    check("summary.schema.json", &summary, "summary");
    assert_eq!(summary["count"], 3);
}
