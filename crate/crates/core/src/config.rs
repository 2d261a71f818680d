//! Experiment config loading with dotted `key=value` overrides.

use std::path::Path;

use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::harness::ExperimentConfig;

/// Sets `path` (dot separated; numeric segments index arrays) to `value`,
/// parsed as JSON when possible and as a string otherwise.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{assignment}` is not key=value")))?;
    if path.is_empty() {
        return Err(Error::Config("override with empty key".into()));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let segments: Vec<&str> = path.split('.').collect();
    for (k, seg) in segments.iter().enumerate() {
        let last = k + 1 == segments.len();
        node = match node {
            Value::Array(items) => {
                let i: usize = seg.parse().map_err(|_| {
                    Error::Config(format!("`{seg}` in `{path}` is not an array index"))
                })?;
                let len = items.len();
                let slot = items.get_mut(i).ok_or_else(|| {
                    Error::Config(format!("index {i} in `{path}` out of range ({len})"))
                })?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            other => {
                if other.is_null() {
                    *other = Value::Object(Default::default());
                }
                let map = other.as_object_mut().ok_or_else(|| {
                    Error::Config(format!("`{seg}` in `{path}` does not name an object field"))
                })?;
                if last {
                    map.insert(seg.to_string(), value);
                    return Ok(());
                }
                map.entry(seg.to_string()).or_insert(Value::Null)
            }
        };
    }
    unreachable!("loop returns on the last segment")
}

pub fn parse_config(text: &str, overrides: &[String]) -> Result<ExperimentConfig> {
    let mut root: Value = serde_json::from_str(text)
        .map_err(|e| Error::Config(format!("config is not valid JSON: {e}")))?;
    for o in overrides {
        apply_override(&mut root, o)?;
    }
    let cfg: ExperimentConfig =
        serde_json::from_value(root).map_err(|e| Error::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path, overrides: &[String]) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text, overrides)
}

/// Hex SHA-256 of the subcommand and the normalized config.
pub fn config_hash(command: &str, cfg: &ExperimentConfig) -> String {
    let mut h = Sha256::new();
    h.update(command.as_bytes());
    h.update([0u8]);
    h.update(serde_json::to_vec(cfg).expect("config serializes"));
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dotted_overrides() {
        let mut v: Value = serde_json::from_str(r#"{"a": {"b": 1}, "c": [1, 2]}"#).unwrap();
        apply_override(&mut v, "a.b=2.5").unwrap();
        apply_override(&mut v, "c.1=7").unwrap();
        apply_override(&mut v, "d.e=heisenberg-1").unwrap();
        assert_eq!(v["a"]["b"], 2.5);
        assert_eq!(v["c"][1], 7);
        assert_eq!(v["d"]["e"], "heisenberg-1");
        assert!(apply_override(&mut v, "c.9=1").is_err());
        assert!(apply_override(&mut v, "novalue").is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(parse_config(r#"{"algebra": "engel", "bogus": 1}"#, &[]).is_err());
        let cfg = parse_config(
            r#"{"algebra": "engel"}"#,
            &["solve.operator.kind=\"qlap\"".into()],
        )
        .unwrap();
        assert_eq!(cfg.solve.operator.kind, crate::calculus::OperatorKind::Qlap);
    }

    #[test]
    fn hash_depends_on_config_and_command() {
        let a = parse_config(r#"{"algebra": "engel"}"#, &[]).unwrap();
        let b = parse_config(r#"{"algebra": "engel", "seed": 1}"#, &[]).unwrap();
        assert_ne!(config_hash("solve", &a), config_hash("solve", &b));
        assert_ne!(config_hash("solve", &a), config_hash("theorem", &a));
        assert_eq!(config_hash("solve", &a), config_hash("solve", &a.clone()));
    }
}
