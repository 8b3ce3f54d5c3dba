//! Report and CSV writers. Every file is written to a temporary sibling and renamed
//! into place, so a failed run never leaves partial output.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::Value;
use tempfile::NamedTempFile;
use uqi_core::synthesis::ScanResult;

use crate::error::CliError;

fn io_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(format!("writing {}: {e}", path.display()))
}

/// Staged file content, made visible by [`Staged::commit`].
pub struct Staged {
    file: NamedTempFile,
    path: PathBuf,
}

pub fn stage(path: &Path, bytes: &[u8]) -> Result<Staged, CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut file = NamedTempFile::new_in(dir).map_err(|e| io_error(path, e))?;
    file.write_all(bytes).map_err(|e| io_error(path, e))?;
    file.as_file().sync_all().map_err(|e| io_error(path, e))?;
    Ok(Staged {
        file,
        path: path.to_path_buf(),
    })
}

impl Staged {
    pub fn commit(self) -> Result<(), CliError> {
        let path = self.path;
        self.file.persist(&path).map_err(|e| io_error(&path, e.error))?;
        Ok(())
    }
}

/// `duration,median_infidelity` rows with LF line endings.
pub fn scan_csv(scan: &ScanResult) -> String {
    let mut out = String::from("duration,median_infidelity\n");
    for p in &scan.points {
        out.push_str(&format!("{},{}\n", p.duration, p.median_infidelity));
    }
    out
}

/// Default CSV location: the report path with its extension replaced by `csv`.
pub fn csv_path_for(output: &Path) -> PathBuf {
    output.with_extension("csv")
}

/// Pretty JSON with purely numeric arrays (vectors, matrices) kept on one line.
pub fn to_json(value: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, value, 0);
    out.push('\n');
    out
}

fn is_numeric(v: &Value) -> bool {
    match v {
        Value::Number(_) => true,
        Value::Array(items) => items.iter().all(is_numeric),
        _ => false,
    }
}

fn write_value(out: &mut String, value: &Value, indent: usize) {
    let pad = |n: usize| "  ".repeat(n);
    match value {
        Value::Array(items) if !items.is_empty() && !is_numeric(value) => {
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write_value(out, item, indent + 1);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        Value::Object(map) if !map.is_empty() => {
            out.push_str("{\n");
            for (i, (k, v)) in map.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                out.push_str(&Value::String(k.clone()).to_string());
                out.push_str(": ");
                write_value(out, v, indent + 1);
                out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
        other => out.push_str(&other.to_string()),
    }
}
