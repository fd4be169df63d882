// SPDX-License-Identifier: Apache-2.0

//! System design files: instances of packages and the connections between
//! their ports.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{load_package, read_versioned, Package, SystemError};
use crate::pipeline::LatencyTable;
use crate::types::Ident;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    /// Package manifest path, relative to the design file.
    pub package: String,
    /// Overrides the package's clock domain.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clock_domain: Option<Ident>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConnectionSpec {
    /// `instance.port` of an output port.
    pub from: String,
    /// `instance.port` of an input port.
    pub to: String,
    /// 0 means a direct wire.
    #[serde(default)]
    pub fifo_depth: u64,
    /// Depth of the CDC FIFO used when the endpoints' clock domains differ.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cdc_depth: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<Ident>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemDesign {
    pub llpm_schema: u32,
    pub name: Ident,
    pub instances: BTreeMap<Ident, InstanceSpec>,
    #[serde(default)]
    pub connections: Vec<ConnectionSpec>,
    /// Top-level names for unconnected ports, keyed by `instance.port`.
    /// Ports not listed are exported as `instance_port`.
    #[serde(default)]
    pub exports: BTreeMap<String, Ident>,
    #[serde(default)]
    pub perf_taps: Vec<String>,
    #[serde(default)]
    pub host_bridge: Vec<String>,
    #[serde(default)]
    pub latency_table: Option<LatencyTable>,
}

impl SystemDesign {
    pub fn new(name: &str) -> Self {
        SystemDesign {
            llpm_schema: super::SCHEMA_VERSION,
            name: Ident::new(name).expect("valid design name"),
            instances: BTreeMap::new(),
            connections: Vec::new(),
            exports: BTreeMap::new(),
            perf_taps: Vec::new(),
            host_bridge: Vec::new(),
            latency_table: None,
        }
    }
}

pub fn parse_design(text: &str) -> Result<SystemDesign, SystemError> {
    read_versioned(text, "llpm_schema")
}

/// Reads a design and every package it references. Packages are keyed by
/// their reference string as written in the design.
pub fn load_design(path: &Path) -> Result<(SystemDesign, BTreeMap<String, Package>), SystemError> {
    let text = std::fs::read_to_string(path).map_err(|e| SystemError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let design = parse_design(&text).map_err(|e| e.in_file(path))?;
    let dir: PathBuf = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut packages = BTreeMap::new();
    for spec in design.instances.values() {
        if !packages.contains_key(&spec.package) {
            packages.insert(spec.package.clone(), load_package(&dir.join(&spec.package))?);
        }
    }
    Ok((design, packages))
}

/// Splits `instance.port`.
pub(crate) fn endpoint(text: &str) -> Result<(&str, &str), SystemError> {
    text.split_once('.')
        .filter(|(i, p)| crate::types::is_identifier(i) && crate::types::is_identifier(p))
        .ok_or_else(|| SystemError::Schema(format!("`{text}` is not of the form instance.port")))
}
