//! File input/output helpers.

use std::fs;
use std::io::Write;
use std::path::Path;

use isac_deploy::{Deployment, Error, Result, UserSet};
use serde::Serialize;
use serde_json::Value;

pub fn read_json(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Accepts a bare array of `[x, y]` pairs or any object with a `users` field
/// (dataset samples, `optimize` output).
pub fn read_users(path: &Path) -> Result<UserSet> {
    let v = read_json(path)?;
    Ok(serde_json::from_value(field_or_self(v, "users"))?)
}

/// Accepts a bare array of `[x, y, z]` triples or an object with a `uavs`
/// field.
pub fn read_deployment(path: &Path) -> Result<Deployment> {
    let v = read_json(path)?;
    Ok(serde_json::from_value(field_or_self(v, "uavs"))?)
}

fn field_or_self(v: Value, key: &str) -> Value {
    match v {
        Value::Object(mut map) if map.contains_key(key) => map.remove(key).unwrap_or(Value::Null),
        other => other,
    }
}

/// Writes to `out`, or to stdout when no path is given.
pub fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(path) => fs::write(path, bytes).map_err(|e| Error::io(path, e)),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes).and_then(|_| stdout.flush()).map_err(|e| Error::io("<stdout>", e))
        }
    }
}

pub fn emit_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    emit(out, text.as_bytes())
}
