//! JSON reports: construction, schema validation and diff-stable printing.

use std::fmt::Write as _;
use std::sync::OnceLock;

use serde_json::{Map, Value};

const SCHEMA: &str = include_str!("../schema/report.schema.json");

/// A finite float as a JSON number; non-finite values become strings.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        serde_json::Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
    } else {
        Value::String(format!("{x}"))
    }
}

pub fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| num(x)).collect())
}

pub fn rows(xs: &[Vec<f64>]) -> Value {
    Value::Array(xs.iter().map(|r| nums(r)).collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub command: String,
    pub inputs: Map<String, Value>,
    pub outputs: Map<String, Value>,
    pub residuals: Map<String, Value>,
    pub pass: bool,
}

impl Report {
    pub fn new(command: impl Into<String>) -> Self {
        Self {
            command: command.into(),
            inputs: Map::new(),
            outputs: Map::new(),
            residuals: Map::new(),
            pass: true,
        }
    }

    pub fn input(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.inputs.insert(key.into(), value.into());
        self
    }

    pub fn output(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.outputs.insert(key.into(), value.into());
        self
    }

    pub fn residual(&mut self, key: &str, value: f64) -> &mut Self {
        self.residuals.insert(key.into(), num(value));
        self
    }

    pub fn to_value(&self) -> Value {
        let mut m = Map::new();
        m.insert("command".into(), Value::String(self.command.clone()));
        m.insert("inputs".into(), Value::Object(self.inputs.clone()));
        m.insert("outputs".into(), Value::Object(self.outputs.clone()));
        m.insert("residuals".into(), Value::Object(self.residuals.clone()));
        m.insert("pass".into(), Value::Bool(self.pass));
        Value::Object(m)
    }

    /// Validates against the bundled schema and renders the document.
    pub fn render(&self) -> Result<String, String> {
        let value = self.to_value();
        validate(&value)?;
        Ok(to_json_string(&value))
    }
}

fn validator() -> &'static jsonschema::Validator {
    static V: OnceLock<jsonschema::Validator> = OnceLock::new();
    V.get_or_init(|| {
        let schema: Value = serde_json::from_str(SCHEMA).expect("bundled schema is valid JSON");
        jsonschema::validator_for(&schema).expect("bundled schema compiles")
    })
}

pub fn validate(value: &Value) -> Result<(), String> {
    let errors: Vec<String> = validator().iter_errors(value).map(|e| e.to_string()).collect();
    if errors.is_empty() {
        Ok(())
    } else {
        Err(format!("report violates schema: {}", errors.join("; ")))
    }
}

/// Pretty JSON with floats printed to 17 significant digits.
pub fn to_json_string(value: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, value, 0);
    out.push('\n');
    out
}

fn write_value(out: &mut String, v: &Value, depth: usize) {
    let pad = |out: &mut String, d: usize| out.push_str(&"  ".repeat(d));
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                let x = n.as_f64().expect("f64 number");
                let _ = write!(out, "{x:.16e}");
            } else {
                let _ = write!(out, "{n}");
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("strings serialize")),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            if items.iter().all(|x| !x.is_array() && !x.is_object()) {
                out.push('[');
                for (i, x) in items.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    write_value(out, x, depth);
                }
                out.push(']');
                return;
            }
            out.push_str("[\n");
            for (i, x) in items.iter().enumerate() {
                pad(out, depth + 1);
                write_value(out, x, depth + 1);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            pad(out, depth);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push_str("{\n");
            for (i, (k, x)) in map.iter().enumerate() {
                pad(out, depth + 1);
                out.push_str(&serde_json::to_string(k).expect("keys serialize"));
                out.push_str(": ");
                write_value(out, x, depth + 1);
                out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
            }
            pad(out, depth);
            out.push('}');
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_have_seventeen_digits_and_round_trip() {
        let s = to_json_string(&nums(&[0.1, -2.5e-300, 3.0]));
        assert_eq!(s.trim(), "[1.0000000000000001e-1, -2.5000000000000000e-300, 3.0000000000000000e0]");
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back[0].as_f64().unwrap(), 0.1);
    }

    #[test]
    fn non_finite_values_become_strings() {
        assert_eq!(num(f64::NAN), Value::String("NaN".into()));
        assert_eq!(num(f64::INFINITY), Value::String("inf".into()));
    }

    #[test]
    fn schema_accepts_reports_and_rejects_missing_fields() {
        let mut r = Report::new("cone");
        r.input("k", 2).output("verdict", "boundary").residual("sigma2", 0.0);
        assert!(r.render().is_ok());
        let mut v = r.to_value();
        v.as_object_mut().unwrap().remove("pass");
        assert!(validate(&v).is_err());
        v = r.to_value();
        v["residuals"]["bad"] = Value::Array(vec![]);
        assert!(validate(&v).is_err());
    }
}
