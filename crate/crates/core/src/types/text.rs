// SPDX-License-Identifier: Apache-2.0

//! Canonical type syntax:
//!
//! ```text
//! void | bits<N> | uint<N> | sint<N> | array<T, N>
//!      | struct{name: T, ...} | union{name: T, ...}
//! ```

use thiserror::Error;

use super::{HWType, Ident, TypeError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("type syntax error at byte {offset}: {message}")]
pub struct ParseTypeError {
    pub offset: usize,
    pub message: String,
}

pub fn parse_type(text: &str) -> Result<HWType, ParseTypeError> {
    let mut p = Parser { src: text.as_bytes(), pos: 0 };
    let ty = p.ty()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(ty)
}

pub fn print_type(t: &HWType) -> String {
    let mut s = String::new();
    print_into(t, &mut s);
    s
}

fn print_into(t: &HWType, s: &mut String) {
    match t {
        HWType::Void => s.push_str("void"),
        HWType::Bits(w) => s.push_str(&format!("bits<{w}>")),
        HWType::UInt(w) => s.push_str(&format!("uint<{w}>")),
        HWType::SInt(w) => s.push_str(&format!("sint<{w}>")),
        HWType::Array(elem, n) => {
            s.push_str("array<");
            print_into(elem, s);
            s.push_str(&format!(", {n}>"));
        }
        HWType::Struct(entries) | HWType::Union(entries) => {
            s.push_str(if matches!(t, HWType::Struct(_)) { "struct{" } else { "union{" });
            for (i, (name, ty)) in entries.iter().enumerate() {
                if i > 0 {
                    s.push_str(", ");
                }
                s.push_str(name);
                s.push_str(": ");
                print_into(ty, s);
            }
            s.push('}');
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, message: impl Into<String>) -> ParseTypeError {
        ParseTypeError {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseTypeError> {
        self.skip_ws();
        if self.src.get(self.pos) == Some(&c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected `{}`", c as char)))
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn word(&mut self) -> Result<(usize, &str), ParseTypeError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected identifier"));
        }
        // input is ASCII by construction of the loop above
        Ok((start, std::str::from_utf8(&self.src[start..self.pos]).unwrap()))
    }

    fn number(&mut self) -> Result<u32, ParseTypeError> {
        self.skip_ws();
        let start = self.pos;
        if self.src.get(self.pos) == Some(&b'-') {
            return Err(self.err("width/count must be positive"));
        }
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected a number"));
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let n: u32 = text.parse().map_err(|_| ParseTypeError {
            offset: start,
            message: format!("number `{text}` out of range"),
        })?;
        if n == 0 {
            return Err(ParseTypeError {
                offset: start,
                message: "width/count must be positive".into(),
            });
        }
        Ok(n)
    }

    fn ty(&mut self) -> Result<HWType, ParseTypeError> {
        let (start, kw) = self.word()?;
        let kw = kw.to_string();
        let ty = match kw.as_str() {
            "void" => HWType::Void,
            "bits" | "uint" | "sint" => {
                self.expect(b'<')?;
                let at = self.pos;
                let w = self.number()?;
                self.expect(b'>')?;
                let ty = match kw.as_str() {
                    "bits" => HWType::Bits(w),
                    "uint" => HWType::UInt(w),
                    _ => HWType::SInt(w),
                };
                ty.validate().map_err(|e| ParseTypeError {
                    offset: at,
                    message: e.to_string(),
                })?;
                ty
            }
            "array" => {
                self.expect(b'<')?;
                let elem = self.ty()?;
                self.expect(b',')?;
                let n = self.number()?;
                self.expect(b'>')?;
                HWType::Array(Box::new(elem), n)
            }
            "struct" | "union" => {
                self.expect(b'{')?;
                let mut entries: Vec<(Ident, HWType)> = Vec::new();
                loop {
                    let (at, name) = self.word()?;
                    let name = Ident::new(name).map_err(|e| ParseTypeError {
                        offset: at,
                        message: e.to_string(),
                    })?;
                    if entries.iter().any(|(n, _)| *n == name) {
                        return Err(ParseTypeError {
                            offset: at,
                            message: TypeError::DuplicateName(name).to_string(),
                        });
                    }
                    self.expect(b':')?;
                    let ty = self.ty()?;
                    entries.push((name, ty));
                    match self.peek() {
                        Some(b',') => self.pos += 1,
                        Some(b'}') => {
                            self.pos += 1;
                            break;
                        }
                        _ => return Err(self.err("expected `,` or `}`")),
                    }
                }
                if kw == "struct" {
                    HWType::Struct(entries)
                } else {
                    HWType::Union(entries)
                }
            }
            other => {
                return Err(ParseTypeError {
                    offset: start,
                    message: format!("unknown type keyword `{other}`"),
                })
            }
        };
        Ok(ty)
    }
}
