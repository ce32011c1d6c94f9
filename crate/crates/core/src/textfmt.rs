//! Structured text files: TOML in which every float is written as its exact
//! decimal expansion, so reading a file back reproduces each float bit for bit.

use serde::de::DeserializeOwned;
use serde::Serialize;
use toml::{Table, Value};

use crate::decimal::exact_decimal;
use crate::error::{Error, Result};

fn float(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0.0".into() } else { "0.0".into() };
    }
    exact_decimal(x)
}

fn key(k: &str) -> String {
    if !k.is_empty() && k.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-') {
        k.to_string()
    } else {
        Value::String(k.to_string()).to_string()
    }
}

fn inline(v: &Value) -> String {
    match v {
        Value::Float(x) => float(*x),
        Value::Array(a) => format!("[{}]", a.iter().map(inline).collect::<Vec<_>>().join(", ")),
        Value::Table(t) => {
            let parts: Vec<String> = t.iter().map(|(k, v)| format!("{} = {}", key(k), inline(v))).collect();
            format!("{{ {} }}", parts.join(", "))
        }
        other => other.to_string(),
    }
}

fn is_table_array(v: &Value) -> bool {
    matches!(v, Value::Array(a) if !a.is_empty() && a.iter().all(Value::is_table))
}

fn emit_table(out: &mut String, path: &[String], t: &Table) {
    for (k, v) in t {
        if v.is_table() || is_table_array(v) {
            continue;
        }
        match v {
            // long numeric arrays one entry per line
            Value::Array(a) if a.len() > 4 => {
                out.push_str(&format!("{} = [\n", key(k)));
                for x in a {
                    out.push_str(&format!("  {},\n", inline(x)));
                }
                out.push_str("]\n");
            }
            _ => out.push_str(&format!("{} = {}\n", key(k), inline(v))),
        }
    }
    for (k, v) in t {
        let mut p = path.to_vec();
        p.push(key(k));
        match v {
            Value::Table(sub) => {
                out.push_str(&format!("\n[{}]\n", p.join(".")));
                emit_table(out, &p, sub);
            }
            Value::Array(a) if is_table_array(v) => {
                for x in a {
                    out.push_str(&format!("\n[[{}]]\n", p.join(".")));
                    emit_table(out, &p, x.as_table().unwrap());
                }
            }
            _ => {}
        }
    }
}

/// Serialize to exact-decimal TOML. The value must serialize to a table.
pub fn emit<T: Serialize>(value: &T) -> Result<String> {
    let v = Value::try_from(value).map_err(|e| Error::Parse(e.to_string()))?;
    let Value::Table(t) = v else {
        return Err(Error::Parse("top level is not a table".into()));
    };
    let mut out = String::new();
    emit_table(&mut out, &[], &t);
    Ok(out)
}

pub fn parse<T: DeserializeOwned>(text: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

/// Check the `format` and `version` keys before decoding.
pub fn parse_tagged<T: DeserializeOwned>(text: &str, format: &str, version: u32) -> Result<T> {
    let t: Table = parse(text)?;
    let f = t.get("format").and_then(Value::as_str);
    let v = t.get("version").and_then(Value::as_integer);
    if f != Some(format) || v != Some(version as i64) {
        return Err(Error::Parse(format!("expected {format} version {version}, found {f:?} version {v:?}")));
    }
    T::deserialize(Value::Table(t)).map_err(|e| Error::Parse(e.to_string()))
}
