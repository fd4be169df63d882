// SPDX-License-Identifier: Apache-2.0

use std::fmt;

use smallvec::SmallVec;

/// A fixed-length little-endian bit string. Bit 0 is the LSB.
///
/// Bits at positions `>= len` in the backing words are always zero.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitPattern {
    len: u64,
    words: SmallVec<[u64; 2]>,
}

fn words_for(len: u64) -> usize {
    len.div_ceil(64) as usize
}

impl BitPattern {
    pub fn zeros(len: u64) -> Self {
        BitPattern {
            len,
            words: SmallVec::from_elem(0, words_for(len)),
        }
    }

    /// The low `len` bits of `value`.
    pub fn from_u128(value: u128, len: u64) -> Self {
        let mut p = BitPattern::zeros(len);
        if let Some(w) = p.words.get_mut(0) {
            *w = value as u64;
        }
        if let Some(w) = p.words.get_mut(1) {
            *w = (value >> 64) as u64;
        }
        p.mask_top();
        p
    }

    /// Parses an MSB-first string of `0`/`1` characters.
    pub fn from_binary(s: &str) -> Option<Self> {
        let mut p = BitPattern::zeros(s.len() as u64);
        for (i, c) in s.chars().rev().enumerate() {
            match c {
                '0' => {}
                '1' => p.set(i as u64, true),
                _ => return None,
            }
        }
        Some(p)
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: u64) -> bool {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        (self.words[(i / 64) as usize] >> (i % 64)) & 1 == 1
    }

    pub fn set(&mut self, i: u64, bit: bool) {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        let w = &mut self.words[(i / 64) as usize];
        if bit {
            *w |= 1 << (i % 64);
        } else {
            *w &= !(1 << (i % 64));
        }
    }

    /// The low 128 bits, zero-extended.
    pub fn to_u128(&self) -> u128 {
        let lo = self.words.first().copied().unwrap_or(0) as u128;
        let hi = self.words.get(1).copied().unwrap_or(0) as u128;
        lo | (hi << 64)
    }

    /// The low `min(len, 128)` bits, sign-extended from bit `len - 1`.
    pub fn to_i128(&self) -> i128 {
        let raw = self.to_u128();
        match self.len {
            0 => 0,
            len if len >= 128 => raw as i128,
            len => {
                let shift = 128 - len as u32;
                ((raw << shift) as i128) >> shift
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Bits `[offset, offset + width)` as a new pattern. Positions past the end
    /// read as zero.
    pub fn slice(&self, offset: u64, width: u64) -> BitPattern {
        let mut out = BitPattern::zeros(width);
        if offset.is_multiple_of(64) {
            let first = (offset / 64) as usize;
            for (i, w) in out.words.iter_mut().enumerate() {
                *w = self.words.get(first + i).copied().unwrap_or(0);
            }
        } else {
            let shift = offset % 64;
            let first = (offset / 64) as usize;
            for (i, w) in out.words.iter_mut().enumerate() {
                let lo = self.words.get(first + i).copied().unwrap_or(0) >> shift;
                let hi = self.words.get(first + i + 1).copied().unwrap_or(0) << (64 - shift);
                *w = lo | hi;
            }
        }
        out.mask_top();
        out
    }

    /// Overwrites bits `[offset, offset + src.len())` with `src`.
    pub fn write(&mut self, offset: u64, src: &BitPattern) {
        assert!(offset + src.len <= self.len, "write past end of pattern");
        for i in 0..src.len {
            self.set(offset + i, src.get(i));
        }
    }

    /// Appends `src` above the current MSB.
    pub fn append(&mut self, src: &BitPattern) {
        let offset = self.len;
        self.len += src.len;
        self.words.resize(words_for(self.len), 0);
        self.write(offset, src);
    }

    /// Resizes to `len`, truncating or zero-extending.
    pub fn resized(&self, len: u64) -> BitPattern {
        self.slice(0, len)
    }

    fn mask_top(&mut self) {
        let rem = self.len % 64;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    pub fn to_binary(&self) -> String {
        (0..self.len)
            .rev()
            .map(|i| if self.get(i) { '1' } else { '0' })
            .collect()
    }

    /// Uppercase hexadecimal digits, MSB first, `ceil(len / 4)` characters.
    pub fn to_hex(&self) -> String {
        let digits = self.len.div_ceil(4);
        (0..digits)
            .rev()
            .map(|d| {
                let nibble = self.slice(d * 4, 4).to_u128() as u32;
                char::from_digit(nibble, 16).unwrap().to_ascii_uppercase()
            })
            .collect()
    }
}

impl fmt::Debug for BitPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}'b{}", self.len, self.to_binary())
    }
}

impl fmt::Display for BitPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_binary())
    }
}
