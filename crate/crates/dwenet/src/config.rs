//! Config files and `--override key.path=value` plumbing. Overrides
//! edit the JSON value tree before the typed deserialization, so a
//! misspelled key — in the file or on the command line — fails with
//! serde's unknown-field error naming the offender.

use std::path::Path;

use dwenet_core::train::TrainConfig;
use serde_json::Value;

use crate::{Error, Result};

/// Read `path` (or start from defaults when `None`), apply overrides
/// in order, deserialize strictly, and validate.
pub fn load_config(path: Option<&Path>, overrides: &[String]) -> Result<TrainConfig> {
    let mut tree = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::at(p, e))?;
            serde_json::from_str(&text)
                .map_err(|e| Error::Parse(format!("{}: {e}", p.display())))?
        }
        None => serde_json::to_value(TrainConfig::default()).expect("default serializes"),
    };
    if !tree.is_object() {
        return Err(Error::Parse(String::from("config root must be a JSON object")));
    }
    for spec in overrides {
        apply_override(&mut tree, spec)?;
    }
    let config = typed(tree)?;
    config.validate()?;
    Ok(config)
}

/// The strict Value → TrainConfig step, with the field path attached
/// to errors so "invalid type" points at the key that holds it.
fn typed(tree: Value) -> Result<TrainConfig> {
    serde_path_to_error::deserialize(tree)
        .map_err(|e| Error::Parse(format!("config: {e}")))
}

/// Set one dotted path in the tree. The value text is taken as JSON
/// when it parses (numbers, bools, arrays) and as a bare string
/// otherwise, so `training.epochs=3` and `data.train_path=a.jsonl`
/// both do what they look like.
fn apply_override(tree: &mut Value, spec: &str) -> Result<()> {
    let (dotted, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Parse(format!("override {spec:?} is not key.path=value")))?;
    if dotted.is_empty() {
        return Err(Error::Parse(format!("override {spec:?} has an empty key")));
    }
    let mut node = &mut *tree;
    let mut segments = dotted.split('.').peekable();
    while let Some(segment) = segments.next() {
        let map = node.as_object_mut().ok_or_else(|| {
            Error::Parse(format!("override {dotted:?}: {segment:?} is not inside an object"))
        })?;
        let child = map.entry(segment.to_string()).or_insert(Value::Null);
        if segments.peek().is_none() {
            *child = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
            return Ok(());
        }
        match child {
            Value::Null => *child = Value::Object(serde_json::Map::new()),
            Value::Object(_) => {}
            other => {
                return Err(Error::Parse(format!(
                    "override {dotted:?}: {segment:?} holds {other}, not a section"
                )))
            }
        }
        node = child;
    }
    unreachable!("split always yields at least one segment");
}

/// Apply overrides to an existing config (used when the base comes
/// from a checkpoint rather than a file). Same strict semantics as
/// `load_config`.
pub fn with_overrides(config: &TrainConfig, overrides: &[String]) -> Result<TrainConfig> {
    if overrides.is_empty() {
        return Ok(config.clone());
    }
    let mut tree = serde_json::to_value(config).expect("config serializes");
    for spec in overrides {
        apply_override(&mut tree, spec)?;
    }
    let config = typed(tree)?;
    config.validate()?;
    Ok(config)
}

/// The canonical serialized form (pretty JSON + trailing newline) used
/// for `config.echo.json`; loading it back reproduces the run.
pub fn config_json(config: &TrainConfig) -> String {
    let mut text = serde_json::to_string_pretty(config).expect("config serializes");
    text.push('\n');
    text
}
