//! Report assembly and serialization: nested JSON with full provenance, or a
//! flat CSV of the result rows.

use serde::Serialize;
use serde_json::{json, Map, Value};

#[derive(Clone, Debug, Serialize)]
pub struct Assertion {
    pub name: String,
    pub pass: bool,
    /// Signed margin: how far inside (positive) or outside (negative) the
    /// bound the observation landed.
    pub margin: f64,
    pub detail: String,
}

impl Assertion {
    pub fn check(name: &str, margin: f64, detail: String) -> Self {
        Self {
            name: name.to_string(),
            pass: margin >= 0.0,
            margin,
            detail,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    /// Wall-clock stamp; excluded from reproducibility comparisons.
    pub timestamp: u64,
    pub config: Value,
    pub rows: Vec<Value>,
    pub summary: Vec<Assertion>,
}

impl Report {
    pub fn new(config: Value, rows: Vec<Value>, summary: Vec<Assertion>) -> Self {
        Self {
            tool: "specmean".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            config,
            rows,
            summary,
        }
    }

    pub fn all_pass(&self) -> bool {
        self.summary.iter().all(|a| a.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Flat CSV of the rows: union of keys over all rows as the header, in
    /// sorted order (serde_json maps are already sorted).
    pub fn to_csv(&self) -> String {
        let mut keys: Vec<String> = Vec::new();
        for row in &self.rows {
            if let Value::Object(map) = row {
                for key in map.keys() {
                    if !keys.contains(key) {
                        keys.push(key.clone());
                    }
                }
            }
        }
        keys.sort();
        let mut out = String::new();
        out.push_str(&keys.join(","));
        out.push('\n');
        for row in &self.rows {
            let empty = Map::new();
            let map = row.as_object().unwrap_or(&empty);
            let line: Vec<String> = keys
                .iter()
                .map(|k| map.get(k).map(csv_cell).unwrap_or_default())
                .collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::String(s) => {
            if s.contains(',') || s.contains('"') || s.contains('\n') {
                format!("\"{}\"", s.replace('"', "\"\""))
            } else {
                s.clone()
            }
        }
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

/// Serialize any value into a JSON object row.
pub fn row<T: Serialize>(value: &T) -> Value {
    serde_json::to_value(value).expect("row serializes")
}

pub fn merge_row(base: Value, extra: &[(&str, Value)]) -> Value {
    let mut map = match base {
        Value::Object(m) => m,
        other => {
            let mut m = Map::new();
            m.insert("value".to_string(), other);
            m
        }
    };
    for (k, v) in extra {
        map.insert((*k).to_string(), v.clone());
    }
    Value::Object(map)
}

pub fn error_json(message: &str) -> String {
    json!({ "error": message }).to_string()
}
