// SPDX-License-Identifier: Apache-2.0

//! Structural checks on generated Verilog: balanced modules, one driver per
//! net, declared names only, and the `_data/_valid/_ready` port contract.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::ir::Direction;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LintError {
    pub module: String,
    pub message: String,
}

impl fmt::Display for LintError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "module {}: {}", self.module, self.message)
    }
}

/// Port directions of a module defined outside the checked text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interface {
    pub module: String,
    pub ports: Vec<(String, Direction)>,
}

fn tokenize(text: &str) -> Vec<String> {
    let b = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        let c = b[i] as char;
        if c.is_whitespace() {
            i += 1;
        } else if text[i..].starts_with("//") {
            while i < b.len() && b[i] != b'\n' {
                i += 1;
            }
        } else if text[i..].starts_with("/*") {
            i = text[i + 2..].find("*/").map_or(b.len(), |k| i + 2 + k + 2);
        } else if c.is_ascii_alphabetic() || c == '_' || c == '$' {
            let s = i;
            while i < b.len() && ((b[i] as char).is_ascii_alphanumeric() || b[i] == b'_' || b[i] == b'$') {
                i += 1;
            }
            out.push(text[s..i].to_string());
        } else if c.is_ascii_digit() || c == '\'' {
            let s = i;
            while i < b.len() && ((b[i] as char).is_ascii_alphanumeric() || b[i] == b'_' || b[i] == b'\'') {
                i += 1;
            }
            out.push(text[s..i].to_string());
        } else {
            let two = text.get(i..i + 2).unwrap_or("");
            if ["<=", "==", "!=", ">=", "+:", "<<", ">>", "&&", "||"].contains(&two) {
                out.push(two.to_string());
                i += 2;
            } else {
                out.push(c.to_string());
                i += 1;
            }
        }
    }
    out
}

fn is_ident(t: &str) -> bool {
    t.starts_with(|c: char| c.is_ascii_alphabetic() || c == '_')
}

const RESERVED: &[&str] = &[
    "module", "endmodule", "input", "output", "inout", "wire", "reg", "integer", "assign", "always", "posedge",
    "negedge", "begin", "end", "if", "else", "for", "function", "endfunction", "parameter", "localparam",
];

/// An instance port and the identifiers its connection reads.
type PortConn = (String, Vec<String>);

#[derive(Default)]
struct ModuleInfo {
    name: String,
    ports: Vec<(String, Direction, bool)>,
    declared: BTreeMap<String, &'static str>,
    drivers: BTreeMap<String, Vec<String>>,
    reads: Vec<String>,
    instances: Vec<(String, String, Vec<PortConn>)>,
}

struct Parser<'a> {
    toks: &'a [String],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a str> {
        self.toks.get(self.pos).map(String::as_str)
    }
    fn next(&mut self) -> Option<&'a str> {
        let t = self.peek();
        self.pos += 1;
        t
    }
    /// Skips a balanced group starting at the current opening token.
    fn group(&mut self, open: &str, close: &str) -> Vec<&'a str> {
        let mut depth = 0;
        let mut inner = Vec::new();
        while let Some(t) = self.next() {
            if t == open {
                depth += 1;
                if depth == 1 {
                    continue;
                }
            } else if t == close {
                depth -= 1;
                if depth == 0 {
                    break;
                }
            }
            inner.push(t);
        }
        inner
    }
    fn until(&mut self, stop: &str) -> Vec<&'a str> {
        let mut out = Vec::new();
        while let Some(t) = self.next() {
            if t == stop {
                break;
            }
            out.push(t);
        }
        out
    }
}

fn idents<'a>(toks: &[&'a str]) -> Vec<&'a str> {
    toks.iter().copied().filter(|t| is_ident(t) && !RESERVED.contains(t)).collect()
}

fn parse(text: &str) -> (Vec<ModuleInfo>, Vec<LintError>) {
    let toks = tokenize(text);
    let mut p = Parser { toks: &toks, pos: 0 };
    let mut modules = Vec::new();
    let mut errors = Vec::new();
    let err = |m: &str, msg: String| LintError {
        module: m.to_string(),
        message: msg,
    };
    while let Some(t) = p.next() {
        if t == "endmodule" {
            errors.push(err("?", "`endmodule` without `module`".into()));
            continue;
        }
        if t != "module" {
            errors.push(err("?", format!("unexpected `{t}` outside a module")));
            continue;
        }
        let mut m = ModuleInfo {
            name: p.next().unwrap_or("?").to_string(),
            ..Default::default()
        };
        if p.peek() == Some("#") {
            p.next();
            let params = p.group("(", ")");
            let mut prev = "";
            for t in params {
                if prev == "parameter" {
                    m.declared.insert(t.to_string(), "parameter");
                }
                prev = t;
            }
        }
        let header = p.group("(", ")");
        let mut dir = Direction::In;
        let mut is_reg = false;
        let mut depth = 0;
        for t in header {
            match t {
                "input" => (dir, is_reg) = (Direction::In, false),
                "output" => (dir, is_reg) = (Direction::Out, false),
                "reg" => is_reg = true,
                "[" => depth += 1,
                "]" => depth -= 1,
                t if depth == 0 && is_ident(t) && !RESERVED.contains(&t) => {
                    m.ports.push((t.to_string(), dir, is_reg));
                    m.declared.insert(t.to_string(), "port");
                }
                t if depth > 0 && is_ident(t) => m.reads.push(t.to_string()),
                _ => {}
            }
        }
        p.until(";");
        let mut blocks = 0;
        let mut closed = false;
        while let Some(t) = p.next() {
            match t {
                "endmodule" => {
                    closed = true;
                    break;
                }
                "module" => {
                    errors.push(err(&m.name, "nested `module`".into()));
                }
                "wire" | "reg" | "integer" | "localparam" | "parameter" => {
                    let kind: &'static str = match t {
                        "wire" => "wire",
                        "reg" => "reg",
                        "integer" => "integer",
                        _ => "parameter",
                    };
                    let decl = p.until(";");
                    let mut depth = 0;
                    let mut after_eq = false;
                    for d in decl {
                        match d {
                            "[" => depth += 1,
                            "]" => depth -= 1,
                            "=" => after_eq = true,
                            "," => after_eq = false,
                            d if depth == 0 && !after_eq && is_ident(d) => {
                                if m.declared.insert(d.to_string(), kind).is_some() {
                                    errors.push(err(&m.name, format!("`{d}` declared twice")));
                                }
                            }
                            d if is_ident(d) => m.reads.push(d.to_string()),
                            _ => {}
                        }
                    }
                }
                "assign" => {
                    let stmt = p.until(";");
                    if let Some(lhs) = stmt.first() {
                        m.drivers.entry(lhs.to_string()).or_default().push("assign".into());
                    }
                    m.reads.extend(idents(&stmt[1..]).into_iter().map(String::from));
                }
                "function" => {
                    let mut body = Vec::new();
                    while let Some(t) = p.next() {
                        if t == "endfunction" {
                            break;
                        }
                        body.push(t);
                    }
                    // `function [range] name;` with locals and a body that
                    // are not checked.
                    let mut depth = 0;
                    let name = body.iter().copied().find(|t| {
                        match *t {
                            "[" => depth += 1,
                            "]" => depth -= 1,
                            _ => {}
                        }
                        depth == 0 && is_ident(t) && !RESERVED.contains(t)
                    });
                    m.declared.insert(name.unwrap_or("?").to_string(), "function");
                }
                "always" => {
                    blocks += 1;
                    let owner = format!("always block {blocks}");
                    let start = p.pos;
                    // Sensitivity list, then a begin/end body.
                    p.group("(", ")");
                    let mut depth = 0;
                    let mut body = Vec::new();
                    while let Some(t) = p.next() {
                        body.push(t);
                        match t {
                            "begin" => depth += 1,
                            "end" => {
                                depth -= 1;
                                if depth == 0 {
                                    break;
                                }
                            }
                            _ => {}
                        }
                    }
                    let sens = &toks[start..p.pos - body.len()];
                    m.reads.extend(sens.iter().filter(|t| is_ident(t) && !RESERVED.contains(&t.as_str())).cloned());
                    let mut driven = BTreeSet::new();
                    let mut k = 0;
                    while k < body.len() {
                        let t = body[k];
                        let lhs_start = k == 0 || matches!(body[k - 1], "begin" | ";" | ")" | "else");
                        if lhs_start && is_ident(t) && !RESERVED.contains(&t) {
                            let mut j = k + 1;
                            if body.get(j) == Some(&"[") {
                                let mut d = 0;
                                while j < body.len() {
                                    if body[j] == "[" {
                                        d += 1;
                                    } else if body[j] == "]" {
                                        d -= 1;
                                        if d == 0 {
                                            j += 1;
                                            break;
                                        }
                                    }
                                    m.reads.extend(is_ident(body[j]).then(|| body[j].to_string()));
                                    j += 1;
                                }
                            }
                            if body.get(j) == Some(&"<=") {
                                driven.insert(t);
                                k = j + 1;
                                continue;
                            }
                        }
                        if is_ident(t) && !RESERVED.contains(&t) {
                            m.reads.push(t.to_string());
                        }
                        k += 1;
                    }
                    for d in driven {
                        m.drivers.entry(d.to_string()).or_default().push(owner.clone());
                    }
                }
                t if is_ident(t) => {
                    let module = t.to_string();
                    if p.peek() == Some("#") {
                        p.next();
                        let params = p.group("(", ")");
                        m.reads.extend(
                            params
                                .windows(2)
                                .filter(|w| w[0] != ".")
                                .map(|w| w[1])
                                .filter(|t| is_ident(t) && !RESERVED.contains(t))
                                .map(String::from),
                        );
                    }
                    let inst = p.next().unwrap_or("?").to_string();
                    let conns = p.group("(", ")");
                    p.until(";");
                    let mut list = Vec::new();
                    let mut k = 0;
                    while k < conns.len() {
                        if conns[k] == "." && k + 1 < conns.len() {
                            let port = conns[k + 1].to_string();
                            let mut depth = 0;
                            let mut expr = Vec::new();
                            k += 2;
                            while k < conns.len() {
                                match conns[k] {
                                    "(" => depth += 1,
                                    ")" => {
                                        depth -= 1;
                                        if depth == 0 {
                                            k += 1;
                                            break;
                                        }
                                    }
                                    x if depth > 0 => expr.push(x.to_string()),
                                    _ => {}
                                }
                                k += 1;
                            }
                            list.push((port, expr));
                        } else {
                            k += 1;
                        }
                    }
                    if m.declared.insert(inst.clone(), "instance").is_some() {
                        errors.push(err(&m.name, format!("`{inst}` declared twice")));
                    }
                    m.instances.push((module, inst, list));
                }
                t => errors.push(err(&m.name, format!("unexpected `{t}`"))),
            }
        }
        if !closed {
            errors.push(err(&m.name, "missing `endmodule`".into()));
        }
        modules.push(m);
    }
    (modules, errors)
}

fn port_contract(m: &ModuleInfo) -> Vec<String> {
    let mut out = Vec::new();
    let mut groups: BTreeMap<&str, BTreeMap<&str, Direction>> = BTreeMap::new();
    for (name, dir, _) in &m.ports {
        let fixed = ["clk", "rst"].contains(&name.as_str())
            || ["clk_", "host_", "perf_"].iter().any(|p| name.starts_with(p));
        if fixed {
            continue;
        }
        match ["_data", "_valid", "_ready"].iter().find(|s| name.ends_with(*s)) {
            Some(s) => {
                groups
                    .entry(&name[..name.len() - s.len()])
                    .or_default()
                    .insert(&s[1..], *dir);
            }
            None => out.push(format!("port `{name}` is not part of a _data/_valid/_ready channel")),
        }
    }
    for (base, g) in groups {
        match (g.get("valid"), g.get("ready")) {
            (Some(v), Some(r)) if v != r => {
                if g.get("data").is_some_and(|d| d != v) {
                    out.push(format!("`{base}_data` and `{base}_valid` point different ways"));
                }
            }
            (Some(_), Some(_)) => out.push(format!("`{base}_valid` and `{base}_ready` point the same way")),
            _ => out.push(format!("channel `{base}` lacks a valid or ready signal")),
        }
    }
    out
}

/// Checks generated Verilog. `externs` describes instantiated modules that
/// are not defined in `text`.
pub fn lint(text: &str, externs: &[Interface]) -> Vec<LintError> {
    let (modules, mut errors) = parse(text);
    let mut known: BTreeMap<&str, Vec<(String, Direction)>> =
        externs.iter().map(|i| (i.module.as_str(), i.ports.clone())).collect();
    for m in &modules {
        if known.contains_key(m.name.as_str()) {
            errors.push(LintError {
                module: m.name.clone(),
                message: "module defined twice".into(),
            });
        }
        known.insert(&m.name, m.ports.iter().map(|(n, d, _)| (n.clone(), *d)).collect());
    }
    for m in &modules {
        let mut e = |msg: String| {
            errors.push(LintError {
                module: m.name.clone(),
                message: msg,
            })
        };
        let mut drivers = m.drivers.clone();
        for (module, inst, conns) in &m.instances {
            let Some(ports) = known.get(module.as_str()) else {
                e(format!("instance `{inst}` of unknown module `{module}`"));
                continue;
            };
            for (port, expr) in conns {
                match ports.iter().find(|p| p.0 == *port) {
                    None => e(format!("instance `{inst}`: `{module}` has no port `{port}`")),
                    Some((_, Direction::Out)) => match expr.as_slice() {
                        [] => {}
                        [x] if is_ident(x) => drivers.entry(x.clone()).or_default().push(format!("instance `{inst}`")),
                        _ => e(format!("instance `{inst}`: output `{port}` must connect to a plain net")),
                    },
                    Some(_) => {}
                }
            }
            for (port, _) in ports {
                if !conns.iter().any(|c| c.0 == *port) {
                    e(format!("instance `{inst}`: port `{port}` is not connected"));
                }
            }
        }
        let reads = m
            .reads
            .iter()
            .chain(m.instances.iter().flat_map(|i| i.2.iter().flat_map(|c| c.1.iter())));
        for r in reads {
            if is_ident(r) && !r.starts_with('$') && !m.declared.contains_key(r.as_str()) {
                e(format!("`{r}` is not declared"));
            }
        }
        for (net, who) in &drivers {
            match m.declared.get(net.as_str()) {
                None => e(format!("`{net}` is driven but not declared")),
                Some(_) if who.len() > 1 => e(format!("`{net}` has {} drivers: {}", who.len(), who.join(", "))),
                _ => {}
            }
            if m.ports.iter().any(|p| p.0 == *net && p.1 == Direction::In) {
                e(format!("input port `{net}` is driven"));
            }
        }
        for (name, kind) in &m.declared {
            let needs_driver = matches!(*kind, "wire" | "reg")
                || m.ports.iter().any(|p| p.0 == *name && p.1 == Direction::Out);
            if needs_driver && !drivers.contains_key(name) {
                e(format!("`{name}` has no driver"));
            }
        }
        if !m.name.starts_with("llpm_") {
            for msg in port_contract(m) {
                e(msg);
            }
        }
    }
    errors.sort_by(|a, b| (&a.module, &a.message).cmp(&(&b.module, &b.message)));
    errors.dedup();
    errors
}
