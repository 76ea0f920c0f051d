//! The line-oriented document format shared by intent, policy, config, and
//! scenario files.
//!
//! A document is UTF-8 text, one `dotted.path = value` assignment per line.
//! Blank lines and lines starting with `#` are ignored. List values are
//! comma-separated. A JSON object with the same nested structure is accepted
//! interchangeably: it is flattened to the same dotted paths before schema
//! checks run, so both renderings go through one code path.
//!
//! Schema layers consume fields with [`Fields::take`] and friends; whatever
//! remains at [`Fields::finish`] is an unknown field and rejected. Silent
//! field loss is never allowed.

use std::collections::BTreeMap;

use thiserror::Error;

/// Errors produced while reading any document in the shared format.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    /// The document text itself is malformed (not parseable as lines or JSON).
    #[error("syntax error at line {line}: {message}")]
    Syntax { line: usize, message: String },
    /// The document parses but does not fit the schema. `path` is the dotted
    /// path of the offending field.
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
}

impl ParseError {
    pub fn schema(path: impl Into<String>, message: impl Into<String>) -> ParseError {
        ParseError::Schema {
            path: path.into(),
            message: message.into(),
        }
    }

    fn syntax(line: usize, message: impl Into<String>) -> ParseError {
        ParseError::Syntax {
            line,
            message: message.into(),
        }
    }
}

/// Flat view of a parsed document: dotted path -> raw value text.
#[derive(Debug, Clone, Default)]
pub struct Fields {
    entries: BTreeMap<String, String>,
}

impl Fields {
    /// Parse either rendering, deciding by the first non-space character.
    pub fn parse_auto(input: &str) -> Result<Fields, ParseError> {
        match input.trim_start().chars().next() {
            Some('{') => Fields::parse_json(input),
            _ => Fields::parse_text(input),
        }
    }

    /// Parse the line-oriented rendering.
    pub fn parse_text(input: &str) -> Result<Fields, ParseError> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in input.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ParseError::syntax(line_no, "expected `path = value`"))?;
            let key = key.trim();
            if key.is_empty() || !key_ok(key) {
                return Err(ParseError::syntax(
                    line_no,
                    format!("invalid field path {key:?}"),
                ));
            }
            if entries
                .insert(key.to_string(), value.trim().to_string())
                .is_some()
            {
                return Err(ParseError::schema(key, "duplicate field"));
            }
        }
        Ok(Fields { entries })
    }

    /// Parse the JSON rendering by flattening nested objects to dotted paths.
    pub fn parse_json(input: &str) -> Result<Fields, ParseError> {
        let value: serde_json::Value = serde_json::from_str(input).map_err(|e| {
            ParseError::syntax(e.line(), format!("invalid JSON: {e}"))
        })?;
        let obj = value
            .as_object()
            .ok_or_else(|| ParseError::syntax(1, "top-level JSON value must be an object"))?;
        let mut entries = BTreeMap::new();
        flatten_object("", obj, &mut entries)?;
        Ok(Fields { entries })
    }

    /// Remove and return a field's raw value.
    pub fn take(&mut self, path: &str) -> Option<String> {
        self.entries.remove(path)
    }

    /// Remove a required field.
    pub fn require(&mut self, path: &str) -> Result<String, ParseError> {
        self.take(path)
            .ok_or_else(|| ParseError::schema(path, "required field is missing"))
    }

    pub fn take_f64(&mut self, path: &str) -> Result<Option<f64>, ParseError> {
        match self.take(path) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .map(Some)
                .ok_or_else(|| ParseError::schema(path, format!("expected a number, got {raw:?}"))),
        }
    }

    pub fn require_f64(&mut self, path: &str) -> Result<f64, ParseError> {
        self.take_f64(path)?
            .ok_or_else(|| ParseError::schema(path, "required field is missing"))
    }

    pub fn take_u64(&mut self, path: &str) -> Result<Option<u64>, ParseError> {
        match self.take(path) {
            None => Ok(None),
            Some(raw) => raw.parse::<u64>().map(Some).map_err(|_| {
                ParseError::schema(path, format!("expected a non-negative integer, got {raw:?}"))
            }),
        }
    }

    pub fn require_u64(&mut self, path: &str) -> Result<u64, ParseError> {
        self.take_u64(path)?
            .ok_or_else(|| ParseError::schema(path, "required field is missing"))
    }

    /// Comma-separated list; an empty value is an empty list.
    pub fn take_list(&mut self, path: &str) -> Option<Vec<String>> {
        self.take(path).map(|raw| split_list(&raw))
    }

    /// Paths remaining under a dotted prefix (`prefix.` + one more segment).
    pub fn keys_under(&self, prefix: &str) -> Vec<String> {
        let needle = format!("{prefix}.");
        self.entries
            .keys()
            .filter(|k| k.starts_with(&needle))
            .cloned()
            .collect()
    }

    /// Reject whatever was not consumed by the schema.
    pub fn finish(self) -> Result<(), ParseError> {
        match self.entries.into_iter().next() {
            None => Ok(()),
            Some((path, _)) => Err(ParseError::schema(path, "unknown field")),
        }
    }
}

pub fn split_list(raw: &str) -> Vec<String> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

fn flatten_object(
    prefix: &str,
    obj: &serde_json::Map<String, serde_json::Value>,
    out: &mut BTreeMap<String, String>,
) -> Result<(), ParseError> {
    for (key, value) in obj {
        let path = if prefix.is_empty() {
            key.clone()
        } else {
            format!("{prefix}.{key}")
        };
        match value {
            serde_json::Value::Object(inner) => flatten_object(&path, inner, out)?,
            serde_json::Value::Array(items) => {
                let mut parts = Vec::with_capacity(items.len());
                for item in items {
                    match item {
                        serde_json::Value::String(s) => parts.push(s.clone()),
                        serde_json::Value::Number(n) => parts.push(n.to_string()),
                        _ => {
                            return Err(ParseError::schema(
                                &path,
                                "list items must be strings or numbers",
                            ))
                        }
                    }
                }
                out.insert(path, parts.join(", "));
            }
            serde_json::Value::String(s) => {
                out.insert(path, s.clone());
            }
            serde_json::Value::Number(n) => {
                out.insert(path, n.to_string());
            }
            serde_json::Value::Bool(b) => {
                out.insert(path, b.to_string());
            }
            serde_json::Value::Null => {
                return Err(ParseError::schema(&path, "null is not a valid value"));
            }
        }
    }
    Ok(())
}

fn key_ok(key: &str) -> bool {
    key.bytes()
        .all(|b| b.is_ascii_alphanumeric() || b == b'.' || b == b'_' || b == b'-' || b == b'/')
}

/// Identifier grammar for ids, tenants, clusters, and principals.
pub fn ident_ok(s: &str) -> bool {
    !s.is_empty()
        && s.bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-' || b == b'.')
}

/// Route prefix grammar: `/` or `/seg(/seg)*` with identifier segments.
pub fn prefix_ok(s: &str) -> bool {
    if s == "/" {
        return true;
    }
    match s.strip_prefix('/') {
        None => false,
        Some(rest) => !rest.is_empty() && rest.split('/').all(ident_ok),
    }
}

/// Split a route prefix into its path segments (`/` has none).
pub fn prefix_segments(s: &str) -> Vec<&str> {
    s.split('/').filter(|seg| !seg.is_empty()).collect()
}

/// Segment-aware prefix containment: `a` covers `b` when every path segment
/// of `a` is an initial segment of `b`. "/red" covers "/red/orders" but not
/// "/redx".
pub fn path_covers(a: &str, b: &str) -> bool {
    let a = prefix_segments(a);
    let b = prefix_segments(b);
    a.len() <= b.len() && a.iter().zip(b.iter()).all(|(x, y)| x == y)
}

/// Whether two prefixes overlap: either covers the other.
pub fn paths_overlap(a: &str, b: &str) -> bool {
    path_covers(a, b) || path_covers(b, a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_and_json_flatten_identically() {
        let text = "a.b = 1\na.c = x, y\nd = true\n";
        let json = r#"{"a": {"b": 1, "c": ["x", "y"]}, "d": true}"#;
        let t = Fields::parse_text(text).unwrap();
        let j = Fields::parse_json(json).unwrap();
        assert_eq!(t.entries, j.entries);
    }

    #[test]
    fn comments_and_blanks_ignored() {
        let f = Fields::parse_text("# header\n\n  key = v # not a comment, part of value\n").unwrap();
        assert_eq!(
            f.entries.get("key").map(String::as_str),
            Some("v # not a comment, part of value")
        );
    }

    #[test]
    fn missing_equals_is_syntax_error() {
        let err = Fields::parse_text("just words\n").unwrap_err();
        assert!(matches!(err, ParseError::Syntax { line: 1, .. }));
    }

    #[test]
    fn duplicate_field_rejected() {
        let err = Fields::parse_text("k = 1\nk = 2\n").unwrap_err();
        assert!(matches!(err, ParseError::Schema { ref path, .. } if path == "k"));
    }

    #[test]
    fn unknown_field_surfaces_path() {
        let mut f = Fields::parse_text("known = 1\nmystery.field = 2\n").unwrap();
        f.take("known");
        let err = f.finish().unwrap_err();
        assert!(matches!(err, ParseError::Schema { ref path, .. } if path == "mystery.field"));
    }

    #[test]
    fn path_cover_is_segment_aware() {
        assert!(path_covers("/red", "/red/orders"));
        assert!(path_covers("/red", "/red"));
        assert!(!path_covers("/red", "/redx"));
        assert!(path_covers("/", "/anything"));
        assert!(!path_covers("/red/orders", "/red"));
        assert!(paths_overlap("/red/orders", "/red"));
        assert!(!paths_overlap("/red", "/blue"));
    }

    #[test]
    fn prefix_grammar() {
        assert!(prefix_ok("/"));
        assert!(prefix_ok("/api/v1.2/orders-x"));
        assert!(!prefix_ok("api"));
        assert!(!prefix_ok("/api/"));
        assert!(!prefix_ok(""));
        assert!(!prefix_ok("/a b"));
    }
}
