// SPDX-License-Identifier: Apache-2.0

use rand::Rng;

use super::{HWType, Value};

/// A random well-typed value. Scalars hit 0, 1 and the extremes of their
/// range more often than uniform sampling would.
pub fn random_value<R: Rng + ?Sized>(ty: &HWType, rng: &mut R) -> Value {
    match ty {
        HWType::Void => Value::Unit,
        HWType::Bits(w) | HWType::UInt(w) => Value::UInt(random_bits(*w, rng)),
        HWType::SInt(w) => {
            let raw = random_bits(*w, rng);
            let shift = 128 - w;
            Value::SInt(((raw << shift) as i128) >> shift)
        }
        HWType::Array(elem, count) => Value::Array((0..*count).map(|_| random_value(elem, rng)).collect()),
        HWType::Struct(fields) => Value::Struct(
            fields
                .iter()
                .map(|(n, t)| (n.clone(), random_value(t, rng)))
                .collect(),
        ),
        HWType::Union(variants) => {
            let (n, t) = &variants[rng.gen_range(0..variants.len())];
            Value::Union(n.clone(), Box::new(random_value(t, rng)))
        }
    }
}

fn random_bits<R: Rng + ?Sized>(w: u32, rng: &mut R) -> u128 {
    let mask = if w >= 128 { u128::MAX } else { (1u128 << w) - 1 };
    match rng.gen_range(0..8) {
        0 => 0,
        1 => mask,
        2 => 1 & mask,
        3 => mask >> 1,
        _ => rng.gen::<u128>() & mask,
    }
}
