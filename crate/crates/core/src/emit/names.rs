// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;

use super::EmitError;

const KEYWORDS: &[&str] = &[
    "always", "and", "assign", "automatic", "begin", "buf", "bufif0", "bufif1", "case", "casex", "casez", "cell",
    "cmos", "config", "deassign", "default", "defparam", "design", "disable", "edge", "else", "end", "endcase",
    "endconfig", "endfunction", "endgenerate", "endmodule", "endprimitive", "endspecify", "endtable", "endtask",
    "event", "for", "force", "forever", "fork", "function", "generate", "genvar", "highz0", "highz1", "if",
    "ifnone", "incdir", "include", "initial", "inout", "input", "instance", "integer", "join", "large",
    "liblist", "library", "localparam", "macromodule", "medium", "module", "nand", "negedge", "nmos", "nor",
    "noshowcancelled", "not", "notif0", "notif1", "or", "output", "parameter", "pmos", "posedge", "primitive",
    "pull0", "pull1", "pulldown", "pullup", "pulsestyle_onevent", "pulsestyle_ondetect", "rcmos", "real",
    "realtime", "reg", "release", "repeat", "rnmos", "rpmos", "rtran", "rtranif0", "rtranif1", "scalared",
    "showcancelled", "signed", "small", "specify", "specparam", "strong0", "strong1", "supply0", "supply1",
    "table", "task", "time", "tran", "tranif0", "tranif1", "tri", "tri0", "tri1", "triand", "trior", "trireg",
    "unsigned", "use", "uwire", "vectored", "wait", "wand", "weak0", "weak1", "while", "wire", "wor", "xnor",
    "xor",
];

pub fn is_keyword(name: &str) -> bool {
    KEYWORDS.contains(&name)
}

/// Appends `_` to Verilog keywords.
pub fn sanitize(name: &str) -> String {
    if is_keyword(name) {
        format!("{name}_")
    } else {
        name.to_string()
    }
}

/// Names declared in one Verilog scope, with what claimed each.
#[derive(Debug, Default)]
pub(crate) struct Scope {
    owners: BTreeMap<String, String>,
}

impl Scope {
    pub(crate) fn claim(&mut self, name: &str, owner: impl Into<String>) -> Result<(), EmitError> {
        let owner = owner.into();
        match self.owners.get(name) {
            Some(prev) => Err(EmitError::Collision {
                name: name.to_string(),
                first: prev.clone(),
                second: owner,
            }),
            None => {
                self.owners.insert(name.to_string(), owner);
                Ok(())
            }
        }
    }
}
