//! JSON-lines files with an optional leading `{"header": {...}}` line.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};

pub fn to_string<T: Serialize>(header: Option<&Value>, items: &[T]) -> Result<String> {
    let mut out = String::new();
    if let Some(h) = header {
        out.push_str(&serde_json::to_string(&serde_json::json!({ "header": h }))?);
        out.push('\n');
    }
    for item in items {
        out.push_str(&serde_json::to_string(item)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn write<T: Serialize>(path: &Path, header: Option<&Value>, items: &[T]) -> Result<()> {
    write_file(path, to_string(header, items)?.as_bytes())
}

/// Writes a file, creating parent directories.
pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_file(path, &bytes)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = std::fs::read(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            Error::MissingArtifact(path.to_path_buf())
        } else {
            Error::io(path, e)
        }
    })?;
    Ok(serde_json::from_slice(&bytes)?)
}

/// Reads a JSONL file, returning its header (if any) and records.
pub fn read<T: DeserializeOwned>(path: &Path) -> Result<(Option<Value>, Vec<T>)> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            Error::MissingArtifact(path.to_path_buf())
        } else {
            Error::io(path, e)
        }
    })?;
    let mut header = None;
    let mut items = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |source| Error::MalformedLine {
            path: path.to_path_buf(),
            line: i + 1,
            source,
        };
        if i == 0 {
            let v: Value = serde_json::from_str(line).map_err(malformed)?;
            if let Some(h) = v
                .get("header")
                .filter(|_| v.as_object().is_some_and(|o| o.len() == 1))
            {
                header = Some(h.clone());
                continue;
            }
            items.push(serde_json::from_value(v).map_err(malformed)?);
            continue;
        }
        items.push(serde_json::from_str(line).map_err(malformed)?);
    }
    Ok((header, items))
}
