// SPDX-License-Identifier: Apache-2.0

//! JSON form of token values, used by stimulus, trace and manifest files.
//!
//! Scalars are JSON integers (or decimal strings beyond 64 bits), arrays are
//! JSON arrays, structs are objects keyed by field name, a union is a
//! single-key object `{"variant": payload}` and `void` is `null`.

use serde_json::{Map, Value as Json};
use thiserror::Error;

use super::{HWType, Value};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("bad value at `{}`: {reason}", if path.is_empty() { "<root>" } else { path })]
pub struct JsonValueError {
    pub path: String,
    pub reason: String,
}

pub fn value_to_json(v: &Value) -> Json {
    match v {
        Value::Unit => Json::Null,
        Value::UInt(x) => match u64::try_from(*x) {
            Ok(n) => Json::Number(n.into()),
            Err(_) => Json::String(x.to_string()),
        },
        Value::SInt(x) => match i64::try_from(*x) {
            Ok(n) => Json::Number(n.into()),
            Err(_) => Json::String(x.to_string()),
        },
        Value::Array(items) => Json::Array(items.iter().map(value_to_json).collect()),
        Value::Struct(fields) => Json::Object(
            fields
                .iter()
                .map(|(n, v)| (n.to_string(), value_to_json(v)))
                .collect::<Map<_, _>>(),
        ),
        Value::Union(n, payload) => {
            let mut m = Map::new();
            m.insert(n.to_string(), value_to_json(payload));
            Json::Object(m)
        }
    }
}

/// Reads a value of type `ty` and checks it is well-typed.
pub fn value_from_json(j: &Json, ty: &HWType) -> Result<Value, JsonValueError> {
    let v = read(j, ty, &mut String::new())?;
    v.check(ty).map_err(|e| JsonValueError {
        path: e.path,
        reason: e.reason,
    })?;
    Ok(v)
}

fn fail(path: &str, reason: impl Into<String>) -> JsonValueError {
    JsonValueError {
        path: path.to_string(),
        reason: reason.into(),
    }
}

fn int_text(j: &Json) -> Option<String> {
    match j {
        Json::Number(n) => Some(n.to_string()),
        Json::String(s) => Some(s.trim().to_string()),
        _ => None,
    }
}

fn parse_unsigned(s: &str) -> Option<u128> {
    if let Some(hex) = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        u128::from_str_radix(&hex.replace('_', ""), 16).ok()
    } else if let Some(bin) = s.strip_prefix("0b") {
        u128::from_str_radix(&bin.replace('_', ""), 2).ok()
    } else {
        s.parse().ok()
    }
}

fn read(j: &Json, ty: &HWType, path: &mut String) -> Result<Value, JsonValueError> {
    match ty {
        HWType::Void => match j {
            Json::Null => Ok(Value::Unit),
            _ => Err(fail(path, "void value must be null")),
        },
        HWType::Bits(_) | HWType::UInt(_) => {
            let text = int_text(j).ok_or_else(|| fail(path, "expected an integer"))?;
            parse_unsigned(&text)
                .map(Value::UInt)
                .ok_or_else(|| fail(path, format!("`{text}` is not an unsigned integer")))
        }
        HWType::SInt(_) => {
            let text = int_text(j).ok_or_else(|| fail(path, "expected an integer"))?;
            text.parse::<i128>()
                .map(Value::SInt)
                .map_err(|_| fail(path, format!("`{text}` is not a signed integer")))
        }
        HWType::Array(elem, _) => {
            let Json::Array(items) = j else {
                return Err(fail(path, "expected an array"));
            };
            let mut out = Vec::with_capacity(items.len());
            for (i, item) in items.iter().enumerate() {
                let len = path.len();
                path.push_str(&format!("[{i}]"));
                out.push(read(item, elem, path)?);
                path.truncate(len);
            }
            Ok(Value::Array(out))
        }
        HWType::Struct(fields) => {
            let Json::Object(obj) = j else {
                return Err(fail(path, "expected an object"));
            };
            if let Some(extra) = obj.keys().find(|k| !fields.iter().any(|(n, _)| n.as_str() == k.as_str())) {
                return Err(fail(path, format!("unknown field `{extra}`")));
            }
            let mut out = Vec::with_capacity(fields.len());
            for (name, fty) in fields {
                let item = obj
                    .get(name.as_str())
                    .ok_or_else(|| fail(path, format!("missing field `{name}`")))?;
                let len = path.len();
                path.push('.');
                path.push_str(name);
                out.push((name.clone(), read(item, fty, path)?));
                path.truncate(len);
            }
            Ok(Value::Struct(out))
        }
        HWType::Union(variants) => {
            let Json::Object(obj) = j else {
                return Err(fail(path, "expected a single-key object naming the variant"));
            };
            if obj.len() != 1 {
                return Err(fail(path, "union value must have exactly one key"));
            }
            let (key, payload) = obj.iter().next().unwrap();
            let Some((name, vty)) = variants.iter().find(|(n, _)| n.as_str() == key) else {
                return Err(fail(path, format!("unknown variant `{key}`")));
            };
            let len = path.len();
            path.push('.');
            path.push_str(key);
            let v = read(payload, vty, path)?;
            path.truncate(len);
            Ok(Value::Union(name.clone(), Box::new(v)))
        }
    }
}
