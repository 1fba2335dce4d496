use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde_json::{json, Value};

/// A routine ran but its fit did not pass the quality checks.
#[derive(Debug, thiserror::Error)]
#[error("{0}: fit failed, platform left unchanged")]
pub struct FitFailed(pub String);

/// 1 for rejected input, 2 for failures while executing or fitting.
pub fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<FitFailed>().is_some() {
        return 2;
    }
    match e.downcast_ref::<pulsekit::Error>() {
        Some(err) if err.is_runtime_failure() => 2,
        _ => 1,
    }
}

/// Files go to a directory when one is given, otherwise to stdout with a
/// header line per file.
pub struct Output {
    dir: Option<PathBuf>,
}

impl Output {
    pub fn new(dir: Option<PathBuf>) -> Result<Self> {
        if let Some(d) = &dir {
            std::fs::create_dir_all(d).with_context(|| format!("cannot create {}", d.display()))?;
        }
        Ok(Output { dir })
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<()> {
        match &self.dir {
            Some(d) => {
                let path = d.join(name);
                std::fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))
            }
            None => {
                if !name.ends_with(".json") {
                    println!("# {name}");
                }
                print!("{contents}");
                Ok(())
            }
        }
    }
}

/// Summary of every report-shaped JSON file (`routine` + `fit`) in `dir`,
/// sorted by file name.
pub fn collate(dir: &Path) -> Result<Value> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("cannot read directory {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json") && p.file_name().is_some_and(|n| n != "summary.json"))
        .collect();
    files.sort();
    let mut reports = Vec::new();
    for path in files {
        let text = std::fs::read_to_string(&path).with_context(|| format!("cannot read {}", path.display()))?;
        let v: Value = serde_json::from_str(&text).with_context(|| format!("{} is not JSON", path.display()))?;
        let Some(routine) = v.get("routine").and_then(Value::as_str) else { continue };
        let success = v.pointer("/fit/success").and_then(Value::as_bool);
        reports.push(json!({
            "file": path.file_name().map(|n| n.to_string_lossy().into_owned()),
            "routine": routine,
            "success": success,
            "fit": v.get("fit"),
            "updated_parameters": v.get("updated_parameters"),
        }));
    }
    Ok(json!({ "count": reports.len(), "reports": reports }))
}
