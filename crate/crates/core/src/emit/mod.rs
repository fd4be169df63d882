// SPDX-License-Identifier: Apache-2.0

//! Verilog-2001 backend.
//!
//! Every latency-insensitive port `p` becomes `p_data` (omitted for
//! zero-width types), `p_valid` and `p_ready`. Generated modules also take
//! `clk` and an active-high synchronous `rst`.

mod helpers;
mod lint;
mod module;
mod names;
mod system;

use thiserror::Error;

pub use lint::{lint, Interface, LintError};
pub use module::emit_module;
pub use names::{is_keyword, sanitize};
pub use system::{emit_system, extern_interfaces};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EmitError {
    #[error("name `{name}` is claimed by both {first} and {second}")]
    Collision { name: String, first: String, second: String },
    #[error("netlist: {0}")]
    Netlist(String),
    #[error("instance `{0}` has no netlist")]
    MissingNetlist(String),
    #[error("generated Verilog fails lint: {}", .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "))]
    Lint(Vec<LintError>),
}

/// `[w-1:0] ` for vectors, nothing for single bits.
pub(crate) fn range(width: u64) -> String {
    if width <= 1 {
        String::new()
    } else {
        format!("[{}:0] ", width - 1)
    }
}

#[cfg(test)]
mod tests;
