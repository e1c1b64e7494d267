//! Reports and their canonical JSON text.

use std::io::Write;
use std::path::Path;

use serde_json::{Map, Number, Value};

#[derive(Debug, Clone)]
pub struct Report {
    pub command: Value,
    pub result: Value,
    pub conventions: Vec<String>,
    pub certificates: Map<String, Value>,
    pub error: Option<Value>,
}

impl Report {
    pub fn to_value(&self) -> Value {
        let mut conventions = self.conventions.clone();
        conventions.sort();
        conventions.dedup();
        let mut m = Map::new();
        m.insert("command".into(), self.command.clone());
        m.insert("conventions".into(), Value::Array(conventions.into_iter().map(Value::String).collect()));
        m.insert("certificates".into(), Value::Object(self.certificates.clone()));
        match &self.error {
            None => {
                m.insert("status".into(), "ok".into());
                m.insert("result".into(), self.result.clone());
            }
            Some(e) => {
                m.insert("status".into(), "error".into());
                m.insert("error".into(), e.clone());
            }
        }
        Value::Object(m)
    }
}

/// Sorted keys, two-space indent, −0 written as 0, trailing newline.
pub fn canonical_json(v: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, v, 0);
    out.push('\n');
    out
}

fn write_value(out: &mut String, v: &Value, depth: usize) {
    let pad = |out: &mut String, d: usize| out.push_str(&"  ".repeat(d));
    match v {
        Value::Object(m) => {
            if m.is_empty() {
                out.push_str("{}");
                return;
            }
            let mut keys: Vec<&String> = m.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (i, k) in keys.iter().enumerate() {
                pad(out, depth + 1);
                out.push_str(&serde_json::to_string(k).expect("string"));
                out.push_str(": ");
                write_value(out, &m[*k], depth + 1);
                if i + 1 < keys.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            pad(out, depth);
            out.push('}');
        }
        Value::Array(a) => {
            if a.is_empty() {
                out.push_str("[]");
                return;
            }
            // short arrays of scalars stay on one line
            if a.iter().all(|x| !x.is_object() && !x.is_array()) && a.len() <= 16 {
                out.push('[');
                for (i, x) in a.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    write_value(out, x, depth);
                }
                out.push(']');
                return;
            }
            out.push_str("[\n");
            for (i, x) in a.iter().enumerate() {
                pad(out, depth + 1);
                write_value(out, x, depth + 1);
                if i + 1 < a.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            pad(out, depth);
            out.push(']');
        }
        Value::Number(n) => out.push_str(&normalize_number(n).to_string()),
        other => out.push_str(&serde_json::to_string(other).expect("scalar")),
    }
}

fn normalize_number(n: &Number) -> Number {
    match n.as_f64() {
        Some(f) if n.is_f64() && f == 0.0 => Number::from_f64(0.0).expect("finite"),
        _ => n.clone(),
    }
}

pub fn emit(text: &str, path: Option<&Path>) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()
        }
    }
}
