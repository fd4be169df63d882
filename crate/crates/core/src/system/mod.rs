// SPDX-License-Identifier: Apache-2.0

//! Packages, system assembly and the tools built on assembled systems:
//! deadlock checking, host bridges, performance taps and partitioning.

mod assemble;
mod bridge;
mod deadlock;
mod design;
mod manifest;
mod partition;

use serde::de::DeserializeOwned;
use thiserror::Error;

use crate::ir::Diagnostic;

pub use assemble::{
    assemble, insert_perf_taps, AssembledSystem, Connection, Endpoint, Export, Instance, Report, Storage,
};
pub use bridge::{synth_host_bridge, BridgeChannel, CounterRegion, HostBridgeMap, BRIDGE_WORD_BITS};
pub use deadlock::check_deadlock;
pub use design::{load_design, parse_design, ConnectionSpec, InstanceSpec, SystemDesign};
pub use manifest::{load_package, parse_package, Package, DEFAULT_CLOCK_DOMAIN};
pub use partition::{partition, partition_graph, PartitionMethod, PartitionProblem, PartitionResult, PartitionSpec};

/// Version of the manifest, system design and assembled-system formats.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SystemError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("schema: {0}")]
    Schema(String),
    #[error("{file}: {error}")]
    InFile { file: String, error: Box<SystemError> },
    #[error("module `{module}` does not validate: {}", .diagnostics.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid { module: String, diagnostics: Vec<Diagnostic> },
    #[error("unknown instance `{0}`")]
    UnknownInstance(String),
    #[error("instance `{instance}` has no port `{port}`")]
    UnknownPort { instance: String, port: String },
    #[error("`{endpoint}` is not an {expected} port")]
    Direction { endpoint: String, expected: &'static str },
    #[error("type mismatch: `{from}` is {from_type} but `{to}` is {to_type}")]
    TypeMismatch {
        from: String,
        from_type: String,
        to: String,
        to_type: String,
    },
    #[error("`{0}` is driven by more than one connection")]
    DoubleDriven(String),
    #[error("`{0}` feeds more than one connection")]
    FanOut(String),
    #[error("channel name `{0}` is used twice")]
    DuplicateChannel(String),
    #[error("export: {0}")]
    Export(String),
    #[error("connection `{connection}`: CDC FIFO depth {depth} must be a power of two of at least 2")]
    CdcDepth { connection: String, depth: u64 },
    #[error("instance `{instance}`: {message}")]
    Pipeline { instance: String, message: String },
    #[error("unknown channel `{0}`")]
    UnknownChannel(String),
    #[error("host bridge: {0}")]
    Bridge(String),
    #[error("partition: {0}")]
    Partition(String),
}

impl SystemError {
    /// Malformed or unreadable input, as opposed to a well-formed design
    /// that fails a check.
    pub fn is_input_error(&self) -> bool {
        match self {
            SystemError::Io { .. } | SystemError::Schema(_) => true,
            SystemError::InFile { error, .. } => error.is_input_error(),
            _ => false,
        }
    }

    pub fn in_file(self, path: &std::path::Path) -> SystemError {
        SystemError::InFile {
            file: path.display().to_string(),
            error: Box::new(self),
        }
    }
}

/// Deserializes a document that carries a format version under `field`,
/// rejecting other versions before looking at the rest.
pub(crate) fn read_versioned<T: DeserializeOwned>(text: &str, field: &str) -> Result<T, SystemError> {
    let raw: serde_json::Value = serde_json::from_str(text).map_err(|e| SystemError::Schema(e.to_string()))?;
    match raw.get(field).map(|v| v.as_u64()) {
        Some(Some(v)) if v == u64::from(SCHEMA_VERSION) => {}
        Some(Some(v)) => return Err(SystemError::Schema(format!("unsupported {field} version {v}"))),
        Some(None) => return Err(SystemError::Schema(format!("{field}: expected an integer version"))),
        None => return Err(SystemError::Schema(format!("missing `{field}` version field"))),
    }
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| SystemError::Schema(e.to_string()))
}
