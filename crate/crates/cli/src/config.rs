//! Config files: `key = value` lines or a JSON object.
//!
//! Dotted keys address nested tables (`disks.radius = [0.1, 0.3]`). Values
//! are read as JSON when they parse as JSON and as bare strings otherwise.
//! Every output file starts with the resolved config, and any such file is
//! accepted back as a config.

use std::fmt;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

/// First line of CSV and text outputs.
pub const ECHO_PREFIX: &str = "# config: ";

#[derive(Debug)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "config line {l}: {}", self.message),
            None => write!(f, "config: {}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

fn err(line: Option<usize>, message: impl Into<String>) -> ConfigError {
    ConfigError {
        line,
        message: message.into(),
    }
}

/// Raw settings plus the source line of each top-level key, when known.
#[derive(Debug, Default)]
pub struct RawConfig {
    pub values: Map<String, Value>,
    lines: Vec<(String, usize)>,
}

impl RawConfig {
    fn line_of(&self, key: &str) -> Option<usize> {
        self.lines.iter().find(|(k, _)| k == key).map(|&(_, l)| l)
    }
}

pub fn read_file(path: &Path) -> Result<RawConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| err(None, format!("cannot read {}: {e}", path.display())))?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<RawConfig, ConfigError> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('{') {
        let value: Value = serde_json::from_str(trimmed).map_err(|e| err(Some(e.line()), e.to_string()))?;
        return from_json(value);
    }
    if let Some(rest) = trimmed.lines().next().and_then(|l| l.strip_prefix(ECHO_PREFIX)) {
        let value: Value = serde_json::from_str(rest).map_err(|e| err(Some(1), e.to_string()))?;
        return from_json(value);
    }
    let mut raw = RawConfig::default();
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        let body = line.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let (key, value) = body
            .split_once('=')
            .ok_or_else(|| err(Some(n), format!("expected `key = value`, found {body:?}")))?;
        let key = key.trim();
        if key.is_empty() || key.split('.').any(str::is_empty) {
            return Err(err(Some(n), format!("malformed key {key:?}")));
        }
        let value = value.trim();
        let parsed = serde_json::from_str(value).unwrap_or_else(|_| Value::String(value.to_string()));
        insert_dotted(&mut raw.values, key, parsed).map_err(|m| err(Some(n), m))?;
        raw.lines.push((key.to_string(), n));
    }
    Ok(raw)
}

/// Accepts either a bare config object or a JSON output with a `config` member.
fn from_json(value: Value) -> Result<RawConfig, ConfigError> {
    let Value::Object(mut map) = value else {
        return Err(err(None, "top level must be an object"));
    };
    if map.contains_key("command") && map.contains_key("config") {
        match map.remove("config") {
            Some(Value::Object(inner)) => map = inner,
            _ => return Err(err(None, "`config` member must be an object")),
        }
    }
    Ok(RawConfig {
        values: map,
        lines: Vec::new(),
    })
}

fn insert_dotted(map: &mut Map<String, Value>, key: &str, value: Value) -> Result<(), String> {
    match key.split_once('.') {
        None => {
            if map.insert(key.to_string(), value).is_some() {
                return Err(format!("duplicate key `{key}`"));
            }
            Ok(())
        }
        Some((head, rest)) => {
            let slot = map.entry(head.to_string()).or_insert_with(|| Value::Object(Map::new()));
            match slot {
                Value::Object(inner) => insert_dotted(inner, rest, value),
                _ => Err(format!("`{head}` is not a table")),
            }
        }
    }
}

/// Rejects keys absent from `template`, recursing into nested tables.
fn check_keys(raw: &RawConfig, given: &Map<String, Value>, template: &Map<String, Value>, prefix: &str) -> Result<(), ConfigError> {
    for (k, v) in given {
        let full = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        let line = raw.line_of(&full).or_else(|| raw.line_of(k));
        let Some(t) = template.get(k) else {
            let mut known: Vec<&str> = template.keys().map(String::as_str).collect();
            known.sort_unstable();
            return Err(err(line, format!("unknown key `{full}` (known: {})", known.join(", "))));
        };
        if let (Value::Object(gv), Value::Object(tv)) = (v, t) {
            check_keys(raw, gv, tv, &full)?;
        }
    }
    Ok(())
}

/// Resolves `raw` over the defaults of `C`, then applies a seed override.
pub fn resolve<C>(raw: &RawConfig, seed: Option<u64>) -> Result<C, ConfigError>
where
    C: Default + Serialize + DeserializeOwned,
{
    let Value::Object(template) = serde_json::to_value(C::default()).expect("config serializes") else {
        unreachable!("configs are structs");
    };
    check_keys(raw, &raw.values, &template, "")?;
    let mut merged = template.clone();
    merge(&mut merged, raw.values.clone());
    if let Some(s) = seed {
        merged.insert("seed".into(), Value::from(s));
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| {
        // Find the first key that fails on its own, for the diagnostic.
        let culprit = raw.values.iter().find(|(k, v)| {
            let mut one = template.clone();
            merge(&mut one, Map::from_iter([((*k).clone(), (*v).clone())]));
            serde_json::from_value::<C>(Value::Object(one)).is_err()
        });
        match culprit {
            Some((k, _)) => err(raw.line_of(k), format!("key `{k}`: {e}")),
            None => err(None, e.to_string()),
        }
    })
}

fn merge(base: &mut Map<String, Value>, over: Map<String, Value>) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(Value::Object(b)), Value::Object(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Debug, Default, Serialize, Deserialize, PartialEq)]
    #[serde(deny_unknown_fields, default)]
    struct Inner {
        radius: (f64, f64),
    }

    #[derive(Debug, Default, Serialize, Deserialize, PartialEq)]
    #[serde(deny_unknown_fields, default)]
    struct Demo {
        width: usize,
        name: String,
        list: Vec<u32>,
        inner: Inner,
        seed: u64,
    }

    #[test]
    fn key_value_with_nesting() {
        let raw = parse("# comment\nwidth = 4\nname = hello\nlist = [1, 2]\ninner.radius = [0.1, 0.2]\n").unwrap();
        let c: Demo = resolve(&raw, Some(9)).unwrap();
        assert_eq!(c.width, 4);
        assert_eq!(c.name, "hello");
        assert_eq!(c.list, vec![1, 2]);
        assert_eq!(c.inner.radius, (0.1, 0.2));
        assert_eq!(c.seed, 9);
    }

    #[test]
    fn unknown_key_reports_line() {
        let raw = parse("width = 4\n\nwidht = 5\n").unwrap();
        let e = resolve::<Demo>(&raw, None).unwrap_err();
        assert_eq!(e.line, Some(3));
        assert!(e.message.contains("unknown key `widht`"));
        let raw = parse("inner.radious = 1\n").unwrap();
        let e = resolve::<Demo>(&raw, None).unwrap_err();
        assert!(e.message.contains("inner.radious"), "{e}");
    }

    #[test]
    fn bad_value_and_syntax() {
        let e = parse("width 4\n").unwrap_err();
        assert_eq!(e.line, Some(1));
        let raw = parse("width = -3\n").unwrap();
        let e = resolve::<Demo>(&raw, None).unwrap_err();
        assert_eq!(e.line, Some(1));
        assert!(parse("a = 1\na = 2\n").is_err());
    }

    #[test]
    fn echoes_are_configs() {
        let raw = parse("# config: {\"width\":7}\nx,y\n1,2\n").unwrap();
        assert_eq!(resolve::<Demo>(&raw, None).unwrap().width, 7);
        let raw = parse("{\"command\":\"demo\",\"config\":{\"width\":8},\"result\":{}}").unwrap();
        assert_eq!(resolve::<Demo>(&raw, None).unwrap().width, 8);
    }
}
