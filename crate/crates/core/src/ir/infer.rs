// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

use super::OpKind;
use crate::types::{index_width, tag_width, HWType};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InferError {
    #[error("expected {expected} inputs, found {found}")]
    Arity { expected: usize, found: usize },
    #[error("type mismatch: {0}")]
    Mismatch(String),
    #[error("unknown field `{0}`")]
    UnknownField(String),
    #[error("unknown variant `{0}`")]
    UnknownVariant(String),
    #[error("index must be {expected}, found {found}")]
    IndexWidth { expected: HWType, found: HWType },
    #[error("bad attribute: {0}")]
    Attribute(String),
}

fn mismatch(msg: String) -> InferError {
    InferError::Mismatch(msg)
}

/// Result type of `op` applied to inputs of the given types.
///
/// For `OutputPort` this is the type of the value it forwards.
pub fn infer_type(op: &OpKind, inputs: &[HWType]) -> Result<HWType, InferError> {
    check_attributes(op)?;
    if let Some(expected) = op.arity() {
        if expected != inputs.len() {
            return Err(InferError::Arity {
                expected,
                found: inputs.len(),
            });
        }
    }
    match op {
        OpKind::InputPort { ty, .. } => Ok(ty.clone()),
        OpKind::OutputPort { .. } => Ok(inputs[0].clone()),
        OpKind::Const { ty, .. } => Ok(ty.clone()),
        OpKind::Add | OpKind::Sub | OpKind::Mul | OpKind::And | OpKind::Or | OpKind::Xor => {
            same_scalar(op, &inputs[0], &inputs[1]).cloned()
        }
        OpKind::Eq => {
            if inputs[0] != inputs[1] {
                return Err(mismatch(format!("eq operands {} and {} differ", inputs[0], inputs[1])));
            }
            Ok(HWType::UInt(1))
        }
        OpKind::Lt => {
            same_scalar(op, &inputs[0], &inputs[1])?;
            Ok(HWType::UInt(1))
        }
        OpKind::Not => {
            if !inputs[0].is_scalar() {
                return Err(mismatch(format!("not expects a scalar, found {}", inputs[0])));
            }
            Ok(inputs[0].clone())
        }
        OpKind::Mux => {
            if inputs[0] != HWType::UInt(1) {
                return Err(mismatch(format!("mux select must be uint<1>, found {}", inputs[0])));
            }
            if inputs[1] != inputs[2] {
                return Err(mismatch(format!("mux arms {} and {} differ", inputs[1], inputs[2])));
            }
            Ok(inputs[1].clone())
        }
        OpKind::StructPack { ty } => {
            let HWType::Struct(fields) = ty else { unreachable!() };
            for ((name, fty), actual) in fields.iter().zip(inputs) {
                if fty != actual {
                    return Err(mismatch(format!("field `{name}` expects {fty}, found {actual}")));
                }
            }
            Ok(ty.clone())
        }
        OpKind::FieldExtract { field } => match &inputs[0] {
            HWType::Struct(_) => inputs[0]
                .entry(field)
                .map(|(_, t)| t.clone())
                .ok_or_else(|| InferError::UnknownField(field.to_string())),
            other => Err(mismatch(format!("field_extract expects a struct, found {other}"))),
        },
        OpKind::ArrayPack { ty } => {
            let HWType::Array(elem, _) = ty else { unreachable!() };
            if let Some((i, bad)) = inputs.iter().enumerate().find(|(_, t)| *t != &**elem) {
                return Err(mismatch(format!("element {i} expects {elem}, found {bad}")));
            }
            Ok(ty.clone())
        }
        OpKind::ArrayIndex => {
            let HWType::Array(elem, count) = &inputs[0] else {
                return Err(mismatch(format!("array_index expects an array, found {}", inputs[0])));
            };
            let expected = HWType::UInt(index_width(*count));
            if inputs[1] != expected {
                return Err(InferError::IndexWidth {
                    expected,
                    found: inputs[1].clone(),
                });
            }
            Ok((**elem).clone())
        }
        OpKind::UnionPack { ty, variant } => {
            let (_, vty) = ty.entry(variant).expect("checked attribute");
            if *vty != inputs[0] {
                return Err(mismatch(format!("variant `{variant}` expects {vty}, found {}", inputs[0])));
            }
            Ok(ty.clone())
        }
        OpKind::TagOf => match &inputs[0] {
            HWType::Union(variants) => Ok(HWType::UInt((tag_width(variants.len()) as u32).max(1))),
            other => Err(mismatch(format!("tag_of expects a union, found {other}"))),
        },
        OpKind::UnwrapVariant { variant } => match &inputs[0] {
            HWType::Union(_) => inputs[0]
                .entry(variant)
                .map(|(_, t)| t.clone())
                .ok_or_else(|| InferError::UnknownVariant(variant.to_string())),
            other => Err(mismatch(format!("unwrap_variant expects a union, found {other}"))),
        },
        OpKind::Delay { ty, .. } => {
            if *ty != inputs[0] {
                return Err(mismatch(format!("delay of {ty} driven by {}", inputs[0])));
            }
            Ok(ty.clone())
        }
    }
}

fn same_scalar<'a>(op: &OpKind, a: &'a HWType, b: &HWType) -> Result<&'a HWType, InferError> {
    if !a.is_scalar() {
        return Err(mismatch(format!("{} expects scalar operands, found {a}", op.code())));
    }
    if a != b {
        return Err(mismatch(format!("{} operands {a} and {b} differ", op.code())));
    }
    Ok(a)
}

/// Validates attribute types and values independently of the inputs.
pub fn check_attributes(op: &OpKind) -> Result<(), InferError> {
    let attr = |e: String| InferError::Attribute(e);
    match op {
        OpKind::InputPort { ty, .. } => ty.validate().map_err(|e| attr(e.to_string())),
        OpKind::Const { ty, value } => {
            ty.validate().map_err(|e| attr(e.to_string()))?;
            value.check(ty).map_err(|e| attr(e.to_string()))
        }
        OpKind::Delay { ty, init } => {
            ty.validate().map_err(|e| attr(e.to_string()))?;
            init.check(ty).map_err(|e| attr(format!("delay init: {e}")))
        }
        OpKind::StructPack { ty } => match ty {
            HWType::Struct(_) => ty.validate().map_err(|e| attr(e.to_string())),
            other => Err(attr(format!("struct_pack needs a struct type, found {other}"))),
        },
        OpKind::ArrayPack { ty } => match ty {
            HWType::Array(..) => ty.validate().map_err(|e| attr(e.to_string())),
            other => Err(attr(format!("array_pack needs an array type, found {other}"))),
        },
        OpKind::UnionPack { ty, variant } => match ty {
            HWType::Union(_) => {
                ty.validate().map_err(|e| attr(e.to_string()))?;
                if ty.entry(variant).is_none() {
                    return Err(InferError::UnknownVariant(variant.to_string()));
                }
                Ok(())
            }
            other => Err(attr(format!("union_pack needs a union type, found {other}"))),
        },
        _ => Ok(()),
    }
}
