// SPDX-License-Identifier: Apache-2.0

//! Structural hardware types.
//!
//! Every channel in the IR carries an [`HWType`]. Types compare structurally:
//! two struct types are equal only if their field names, field order and field
//! types all agree. The canonical text syntax (see [`parse_type`]) is what
//! package manifests and tool output use, and the bit-level layout (see
//! [`encode`]) is what generated wrappers and host bridges agree on.

mod bits;
mod codec;
mod json;
mod random;
mod text;
mod value;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub use bits::BitPattern;
pub use codec::{decode, encode, CodecError};
pub use json::{value_from_json, value_to_json, JsonValueError};
pub use random::random_value;
pub use text::{parse_type, print_type, ParseTypeError};
pub use value::{Value, ValueError};

/// Widest scalar the value model can carry.
pub const MAX_SCALAR_WIDTH: u32 = 128;

/// A validated identifier: `[A-Za-z_][A-Za-z0-9_]*`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Ident(Arc<str>);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid identifier {0:?}")]
pub struct InvalidIdent(pub String);

impl Ident {
    pub fn new(s: &str) -> Result<Self, InvalidIdent> {
        if is_identifier(s) {
            Ok(Ident(Arc::from(s)))
        } else {
            Err(InvalidIdent(s.to_string()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl std::str::FromStr for Ident {
    type Err = InvalidIdent;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ident::new(s)
    }
}

pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl fmt::Debug for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

impl fmt::Display for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::ops::Deref for Ident {
    type Target = str;
    fn deref(&self) -> &str {
        &self.0
    }
}

impl std::borrow::Borrow<str> for Ident {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl TryFrom<&str> for Ident {
    type Error = InvalidIdent;
    fn try_from(s: &str) -> Result<Self, InvalidIdent> {
        Ident::new(s)
    }
}

impl Serialize for Ident {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for Ident {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Ident::new(&s).map_err(serde::de::Error::custom)
    }
}

/// A structural hardware data type.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum HWType {
    Void,
    Bits(u32),
    UInt(u32),
    SInt(u32),
    Array(Box<HWType>, u32),
    Struct(Vec<(Ident, HWType)>),
    Union(Vec<(Ident, HWType)>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TypeError {
    #[error("width must be at least 1")]
    ZeroWidth,
    #[error("width {0} exceeds the maximum scalar width of {MAX_SCALAR_WIDTH}")]
    WidthTooLarge(u32),
    #[error("array count must be at least 1")]
    ZeroCount,
    #[error("struct/union must have at least one entry")]
    Empty,
    #[error("duplicate field or variant name `{0}`")]
    DuplicateName(Ident),
}

impl HWType {
    /// Checks the structural invariants: positive widths and counts, nonempty
    /// aggregates and unique entry names.
    pub fn validate(&self) -> Result<(), TypeError> {
        match self {
            HWType::Void => Ok(()),
            HWType::Bits(w) | HWType::UInt(w) | HWType::SInt(w) => match *w {
                0 => Err(TypeError::ZeroWidth),
                w if w > MAX_SCALAR_WIDTH => Err(TypeError::WidthTooLarge(w)),
                _ => Ok(()),
            },
            HWType::Array(elem, count) => {
                if *count == 0 {
                    return Err(TypeError::ZeroCount);
                }
                elem.validate()
            }
            HWType::Struct(entries) | HWType::Union(entries) => {
                if entries.is_empty() {
                    return Err(TypeError::Empty);
                }
                for (i, (name, ty)) in entries.iter().enumerate() {
                    if entries[..i].iter().any(|(n, _)| n == name) {
                        return Err(TypeError::DuplicateName(name.clone()));
                    }
                    ty.validate()?;
                }
                Ok(())
            }
        }
    }

    pub fn bit_width(&self) -> u64 {
        bit_width(self)
    }

    pub fn is_scalar(&self) -> bool {
        matches!(self, HWType::Bits(_) | HWType::UInt(_) | HWType::SInt(_))
    }

    /// Looks up a struct field or union variant by name.
    pub fn entry(&self, name: &str) -> Option<(usize, &HWType)> {
        match self {
            HWType::Struct(entries) | HWType::Union(entries) => entries
                .iter()
                .enumerate()
                .find(|(_, (n, _))| n.as_str() == name)
                .map(|(i, (_, t))| (i, t)),
            _ => None,
        }
    }

    /// Bit offset of the named struct field from the LSB.
    pub fn field_offset(&self, name: &str) -> Option<u64> {
        let HWType::Struct(fields) = self else {
            return None;
        };
        let mut offset = 0;
        for (n, t) in fields {
            if n.as_str() == name {
                return Some(offset);
            }
            offset += t.bit_width();
        }
        None
    }
}

/// Number of bits needed to carry a value of `t`.
pub fn bit_width(t: &HWType) -> u64 {
    match t {
        HWType::Void => 0,
        HWType::Bits(w) | HWType::UInt(w) | HWType::SInt(w) => u64::from(*w),
        HWType::Array(elem, count) => u64::from(*count) * bit_width(elem),
        HWType::Struct(fields) => fields.iter().map(|(_, t)| bit_width(t)).sum(),
        HWType::Union(variants) => {
            tag_width(variants.len())
                + variants.iter().map(|(_, t)| bit_width(t)).max().unwrap_or(0)
        }
    }
}

/// `ceil(log2(n))`, with a single variant needing no tag bits.
pub fn tag_width(variants: usize) -> u64 {
    if variants <= 1 {
        0
    } else {
        u64::from(usize::BITS - (variants - 1).leading_zeros())
    }
}

/// Width of the index operand for an array of `count` elements (minimum 1).
pub fn index_width(count: u32) -> u32 {
    (tag_width(count as usize) as u32).max(1)
}

impl fmt::Display for HWType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_type(self))
    }
}

impl Serialize for HWType {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&print_type(self))
    }
}

impl<'de> Deserialize<'de> for HWType {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        parse_type(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(s: &str) -> Ident {
        Ident::new(s).unwrap()
    }

    #[test]
    fn widths() {
        assert_eq!(bit_width(&HWType::UInt(8)), 8);
        assert_eq!(bit_width(&HWType::Void), 0);
        let u = HWType::Union(vec![(id("I"), HWType::UInt(8)), (id("B"), HWType::UInt(1))]);
        assert_eq!(bit_width(&u), 9);
        let one = HWType::Union(vec![(id("A"), HWType::UInt(3))]);
        assert_eq!(bit_width(&one), 3);
        let arr = HWType::Array(Box::new(HWType::SInt(5)), 3);
        assert_eq!(bit_width(&arr), 15);
    }

    #[test]
    fn tag_widths() {
        assert_eq!(tag_width(1), 0);
        assert_eq!(tag_width(2), 1);
        assert_eq!(tag_width(3), 2);
        assert_eq!(tag_width(4), 2);
        assert_eq!(tag_width(5), 3);
        assert_eq!(index_width(1), 1);
        assert_eq!(index_width(8), 3);
        assert_eq!(index_width(9), 4);
    }

    #[test]
    fn widening_a_scalar_field_adds_one_bit() {
        for w in 1..20 {
            let narrow = HWType::Struct(vec![(id("a"), HWType::UInt(w)), (id("b"), HWType::Void)]);
            let wide = HWType::Struct(vec![(id("a"), HWType::UInt(w + 1)), (id("b"), HWType::Void)]);
            assert_eq!(bit_width(&wide), bit_width(&narrow) + 1);
        }
    }

    #[test]
    fn invalid_types() {
        assert_eq!(HWType::UInt(0).validate(), Err(TypeError::ZeroWidth));
        assert_eq!(HWType::Array(Box::new(HWType::Bits(1)), 0).validate(), Err(TypeError::ZeroCount));
        assert_eq!(HWType::Struct(vec![]).validate(), Err(TypeError::Empty));
        let dup = HWType::Union(vec![(id("a"), HWType::Void), (id("a"), HWType::Bits(2))]);
        assert_eq!(dup.validate(), Err(TypeError::DuplicateName(id("a"))));
        assert!(HWType::SInt(129).validate().is_err());
    }

    #[test]
    fn identifiers() {
        assert!(Ident::new("_x9").is_ok());
        assert!(Ident::new("9x").is_err());
        assert!(Ident::new("").is_err());
        assert!(Ident::new("a-b").is_err());
    }
}
