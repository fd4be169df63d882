// SPDX-License-Identifier: Apache-2.0

use std::fmt;

use thiserror::Error;

use super::{HWType, Ident};

/// A token value, shaped like the [`HWType`] it was built for.
///
/// `Bits` and `UInt` values are both carried as [`Value::UInt`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Value {
    Unit,
    UInt(u128),
    SInt(i128),
    Array(Vec<Value>),
    Struct(Vec<(Ident, Value)>),
    Union(Ident, Box<Value>),
}

/// A value does not fit its type. `path` locates the offending node, e.g.
/// `.hdr.len` or `[3].B`; it is empty for the root.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("typed-value mismatch at `{}`: {reason}", if path.is_empty() { "<root>" } else { path })]
pub struct ValueError {
    pub path: String,
    pub reason: String,
}

impl ValueError {
    pub(crate) fn new(path: &str, reason: impl Into<String>) -> Self {
        ValueError {
            path: path.to_string(),
            reason: reason.into(),
        }
    }
}

impl Value {
    /// Checks that `self` is well-typed against `ty`.
    pub fn check(&self, ty: &HWType) -> Result<(), ValueError> {
        check_at(self, ty, &mut String::new())
    }

    /// The value whose encoding is all zeros.
    pub fn zero(ty: &HWType) -> Value {
        match ty {
            HWType::Void => Value::Unit,
            HWType::Bits(_) | HWType::UInt(_) => Value::UInt(0),
            HWType::SInt(_) => Value::SInt(0),
            HWType::Array(elem, count) => Value::Array(vec![Value::zero(elem); *count as usize]),
            HWType::Struct(fields) => Value::Struct(
                fields
                    .iter()
                    .map(|(n, t)| (n.clone(), Value::zero(t)))
                    .collect(),
            ),
            HWType::Union(variants) => {
                let (n, t) = &variants[0];
                Value::Union(n.clone(), Box::new(Value::zero(t)))
            }
        }
    }

    pub fn as_u128(&self) -> Option<u128> {
        match self {
            Value::UInt(v) => Some(*v),
            _ => None,
        }
    }

    pub fn field(&self, name: &str) -> Option<&Value> {
        match self {
            Value::Struct(fields) => fields.iter().find(|(n, _)| n.as_str() == name).map(|(_, v)| v),
            _ => None,
        }
    }
}

fn check_at(v: &Value, ty: &HWType, path: &mut String) -> Result<(), ValueError> {
    match (ty, v) {
        (HWType::Void, Value::Unit) => Ok(()),
        (HWType::Bits(w) | HWType::UInt(w), Value::UInt(x)) => {
            if *w >= 128 || *x < (1u128 << *w) {
                Ok(())
            } else {
                Err(ValueError::new(path, format!("{x} does not fit in {w} unsigned bits")))
            }
        }
        (HWType::SInt(w), Value::SInt(x)) => {
            let ok = *w >= 128 || {
                let half = 1i128 << (*w - 1);
                (-half..half).contains(x)
            };
            if ok {
                Ok(())
            } else {
                Err(ValueError::new(path, format!("{x} does not fit in {w} signed bits")))
            }
        }
        (HWType::Array(elem, count), Value::Array(items)) => {
            if items.len() != *count as usize {
                return Err(ValueError::new(
                    path,
                    format!("expected {count} elements, found {}", items.len()),
                ));
            }
            for (i, item) in items.iter().enumerate() {
                let len = path.len();
                path.push_str(&format!("[{i}]"));
                check_at(item, elem, path)?;
                path.truncate(len);
            }
            Ok(())
        }
        (HWType::Struct(fields), Value::Struct(vals)) => {
            if fields.len() != vals.len() {
                return Err(ValueError::new(
                    path,
                    format!("expected {} fields, found {}", fields.len(), vals.len()),
                ));
            }
            for ((fname, fty), (vname, fval)) in fields.iter().zip(vals) {
                if fname != vname {
                    return Err(ValueError::new(
                        path,
                        format!("expected field `{fname}`, found `{vname}`"),
                    ));
                }
                let len = path.len();
                path.push('.');
                path.push_str(fname);
                check_at(fval, fty, path)?;
                path.truncate(len);
            }
            Ok(())
        }
        (HWType::Union(variants), Value::Union(name, payload)) => {
            let Some((_, vty)) = variants.iter().find(|(n, _)| n == name) else {
                return Err(ValueError::new(path, format!("unknown variant `{name}`")));
            };
            let len = path.len();
            path.push('.');
            path.push_str(name);
            check_at(payload, vty, path)?;
            path.truncate(len);
            Ok(())
        }
        (ty, v) => Err(ValueError::new(path, format!("value {v} is not a {ty}"))),
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Unit => f.write_str("()"),
            Value::UInt(v) => write!(f, "{v}"),
            Value::SInt(v) => write!(f, "{v}"),
            Value::Array(items) => {
                f.write_str("[")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{item}")?;
                }
                f.write_str("]")
            }
            Value::Struct(fields) => {
                f.write_str("{")?;
                for (i, (n, v)) in fields.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{n}: {v}")?;
                }
                f.write_str("}")
            }
            Value::Union(n, v) => write!(f, "{n}({v})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::parse_type;

    #[test]
    fn range_checks() {
        assert!(Value::UInt(15).check(&HWType::UInt(4)).is_ok());
        assert!(Value::UInt(16).check(&HWType::UInt(4)).is_err());
        assert!(Value::SInt(-8).check(&HWType::SInt(4)).is_ok());
        assert!(Value::SInt(8).check(&HWType::SInt(4)).is_err());
        assert!(Value::UInt(u128::MAX).check(&HWType::Bits(128)).is_ok());
        assert!(Value::SInt(0).check(&HWType::UInt(4)).is_err());
    }

    #[test]
    fn mismatch_path_names_the_node() {
        let ty = parse_type("struct{hdr: struct{len: uint<4>}, body: array<uint<2>, 2>}").unwrap();
        let id = |s: &str| Ident::new(s).unwrap();
        let v = Value::Struct(vec![
            (id("hdr"), Value::Struct(vec![(id("len"), Value::UInt(3))])),
            (id("body"), Value::Array(vec![Value::UInt(1), Value::UInt(4)])),
        ]);
        let err = v.check(&ty).unwrap_err();
        assert_eq!(err.path, ".body[1]");
    }

    #[test]
    fn zero_is_well_typed() {
        let ty = parse_type("union{a: void, b: array<sint<3>, 2>}").unwrap();
        assert!(Value::zero(&ty).check(&ty).is_ok());
    }
}
