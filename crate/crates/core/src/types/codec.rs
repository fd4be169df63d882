// SPDX-License-Identifier: Apache-2.0

//! Bit-level layout shared by every consumer of typed tokens.
//!
//! Scalars are plain binary (two's complement for `sint`). Aggregates pack
//! from the LSB upward: array element 0 and the first struct field sit at
//! bit 0. A union stores its variant index at the LSB with the payload
//! directly above it, zero-padded to the widest variant.

use thiserror::Error;

use super::{bit_width, tag_width, BitPattern, HWType, Value, ValueError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error(transparent)]
    Mismatch(#[from] ValueError),
    #[error("bit pattern has length {actual}, type needs {expected}")]
    WrongLength { expected: u64, actual: u64 },
    #[error("union tag {tag} out of range for {variants} variants at `{path}`")]
    BadTag {
        path: String,
        tag: u128,
        variants: usize,
    },
}

pub fn encode(v: &Value, t: &HWType) -> Result<BitPattern, CodecError> {
    v.check(t)?;
    let mut out = BitPattern::zeros(bit_width(t));
    write_value(v, t, &mut out, 0);
    Ok(out)
}

fn write_value(v: &Value, t: &HWType, out: &mut BitPattern, offset: u64) {
    match (t, v) {
        (HWType::Void, _) => {}
        (HWType::Bits(w) | HWType::UInt(w), Value::UInt(x)) => {
            out.write(offset, &BitPattern::from_u128(*x, u64::from(*w)));
        }
        (HWType::SInt(w), Value::SInt(x)) => {
            out.write(offset, &BitPattern::from_u128(*x as u128, u64::from(*w)));
        }
        (HWType::Array(elem, _), Value::Array(items)) => {
            let ew = bit_width(elem);
            for (i, item) in items.iter().enumerate() {
                write_value(item, elem, out, offset + i as u64 * ew);
            }
        }
        (HWType::Struct(fields), Value::Struct(vals)) => {
            let mut off = offset;
            for ((_, fty), (_, fv)) in fields.iter().zip(vals) {
                write_value(fv, fty, out, off);
                off += bit_width(fty);
            }
        }
        (HWType::Union(variants), Value::Union(name, payload)) => {
            let tw = tag_width(variants.len());
            let (idx, (_, vty)) = variants
                .iter()
                .enumerate()
                .find(|(_, (n, _))| n == name)
                .expect("checked variant");
            out.write(offset, &BitPattern::from_u128(idx as u128, tw));
            write_value(payload, vty, out, offset + tw);
        }
        _ => unreachable!("value checked against type before encoding"),
    }
}

pub fn decode(bits: &BitPattern, t: &HWType) -> Result<Value, CodecError> {
    let expected = bit_width(t);
    if bits.len() != expected {
        return Err(CodecError::WrongLength {
            expected,
            actual: bits.len(),
        });
    }
    read_value(bits, t, 0, &mut String::new())
}

fn read_value(bits: &BitPattern, t: &HWType, offset: u64, path: &mut String) -> Result<Value, CodecError> {
    Ok(match t {
        HWType::Void => Value::Unit,
        HWType::Bits(w) | HWType::UInt(w) => Value::UInt(bits.slice(offset, u64::from(*w)).to_u128()),
        HWType::SInt(w) => Value::SInt(bits.slice(offset, u64::from(*w)).to_i128()),
        HWType::Array(elem, count) => {
            let ew = bit_width(elem);
            let mut items = Vec::with_capacity(*count as usize);
            for i in 0..u64::from(*count) {
                let len = path.len();
                path.push_str(&format!("[{i}]"));
                items.push(read_value(bits, elem, offset + i * ew, path)?);
                path.truncate(len);
            }
            Value::Array(items)
        }
        HWType::Struct(fields) => {
            let mut off = offset;
            let mut vals = Vec::with_capacity(fields.len());
            for (name, fty) in fields {
                let len = path.len();
                path.push('.');
                path.push_str(name);
                vals.push((name.clone(), read_value(bits, fty, off, path)?));
                path.truncate(len);
                off += bit_width(fty);
            }
            Value::Struct(vals)
        }
        HWType::Union(variants) => {
            let tw = tag_width(variants.len());
            let tag = bits.slice(offset, tw).to_u128();
            let Some((name, vty)) = variants.get(tag as usize) else {
                return Err(CodecError::BadTag {
                    path: if path.is_empty() { "<root>".into() } else { path.clone() },
                    tag,
                    variants: variants.len(),
                });
            };
            let len = path.len();
            path.push('.');
            path.push_str(name);
            let payload = read_value(bits, vty, offset + tw, path)?;
            path.truncate(len);
            Value::Union(name.clone(), Box::new(payload))
        }
    })
}
