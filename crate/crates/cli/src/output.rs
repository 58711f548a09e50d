use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{invalid, CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

/// Where primary outputs go: files in a directory, or stdout.
pub struct Sink {
    dir: Option<PathBuf>,
}

impl Sink {
    pub fn new(dir: Option<PathBuf>) -> CliResult<Self> {
        if let Some(d) = &dir {
            std::fs::create_dir_all(d).map_err(|e| invalid(format!("cannot create {}: {e}", d.display())))?;
        }
        Ok(Self { dir })
    }

    /// Writes `bytes` as `name` inside the output directory (atomically), or
    /// to stdout when no directory was given.
    pub fn emit(&self, name: &str, bytes: &[u8]) -> CliResult<()> {
        match &self.dir {
            Some(dir) => write_atomic(&dir.join(name), bytes),
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(bytes)?;
                out.flush()?;
                Ok(())
            }
        }
    }

    /// Secondary outputs are only written when an output directory is set.
    pub fn emit_secondary(&self, name: &str, bytes: &[u8]) -> CliResult<bool> {
        match &self.dir {
            Some(dir) => write_atomic(&dir.join(name), bytes).map(|_| true),
            None => Ok(false),
        }
    }
}

/// Writes to a temporary file in the target directory, then renames it over
/// `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| CliError::Internal(e.to_string()))?;
    Ok(())
}

/// Pretty JSON with `schema_version` as the first key.
pub fn json_document<T: Serialize>(body: &T) -> CliResult<Vec<u8>> {
    let value = serde_json::to_value(body).map_err(|e| CliError::Internal(e.to_string()))?;
    let mut map = Map::new();
    map.insert("schema_version".into(), Value::from(SCHEMA_VERSION));
    match value {
        Value::Object(fields) => map.extend(fields),
        other => {
            map.insert("data".into(), other);
        }
    }
    let mut bytes = serde_json::to_vec_pretty(&Value::Object(map)).map_err(|e| CliError::Internal(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn read_to_string(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))
}

pub fn read_json(path: &Path) -> CliResult<Value> {
    let text = read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

/// Overlays the top-level keys of `overrides` on `base`; nested objects named
/// in `deep` are merged one level further.
pub fn merge(base: &mut Value, overrides: Map<String, Value>, deep: &[&str]) {
    let Value::Object(target) = base else {
        *base = Value::Object(overrides);
        return;
    };
    for (k, v) in overrides {
        match (target.get_mut(&k), v) {
            (Some(Value::Object(existing)), Value::Object(inner)) if deep.contains(&k.as_str()) => {
                existing.extend(inner);
            }
            (_, v) => {
                target.insert(k, v);
            }
        }
    }
}

/// Parses a comma-separated list of reals.
pub fn parse_list(name: &str, s: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| invalid(format!("--{name}: '{t}' is not a number")))
        })
        .collect()
}

pub fn parse_counts(name: &str, s: &str) -> CliResult<Vec<u64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<u64>()
                .map_err(|_| invalid(format!("--{name}: '{t}' is not a non-negative integer")))
        })
        .collect()
}
