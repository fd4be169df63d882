// SPDX-License-Identifier: Apache-2.0

//! Package manifests: one module plus packaging metadata, as JSON.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

use super::{read_versioned, SystemError, SCHEMA_VERSION};
use crate::ir::json::{graph_from_json, graph_to_json, GraphJson};
use crate::ir::{validate, Body, ExternRtl, Module, Port, PortSignals};
use crate::types::Ident;

pub const DEFAULT_CLOCK_DOMAIN: &str = "clk0";

/// A loaded package.
#[derive(Debug, Clone, PartialEq)]
pub struct Package {
    pub module: Module,
    pub version: semver::Version,
    pub clock_domain: Ident,
    pub area_estimate: f64,
    /// Directory that relative extern source paths resolve against.
    pub dir: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestJson {
    llpm_schema: u32,
    name: Ident,
    version: semver::Version,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    clock_domain: Option<Ident>,
    #[serde(default)]
    area_estimate: f64,
    ports: Vec<Port>,
    body: BodyJson,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum BodyJson {
    Ir {
        graph: GraphJson,
    },
    Extern {
        sources: Vec<String>,
        top: String,
        port_map: BTreeMap<Ident, PortSignals>,
        #[serde(default)]
        registered: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        model: Option<GraphJson>,
    },
}

/// Reads and checks a manifest file.
pub fn load_package(path: &Path) -> Result<Package, SystemError> {
    let text = std::fs::read_to_string(path).map_err(|e| SystemError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_package(&text, &dir).map_err(|e| e.in_file(path))
}

/// Parses manifest text. `dir` anchors relative extern source paths.
pub fn parse_package(text: &str, dir: &Path) -> Result<Package, SystemError> {
    let m: ManifestJson = read_versioned(text, "llpm_schema")?;
    if !(m.area_estimate >= 0.0 && m.area_estimate.is_finite()) {
        return Err(SystemError::Schema(format!(
            "area_estimate: must be a nonnegative number, got {}",
            m.area_estimate
        )));
    }
    let body = match m.body {
        BodyJson::Ir { graph } => Body::Dataflow(
            graph_from_json(&graph, &m.ports).map_err(|e| SystemError::Schema(format!("body.graph.{e}")))?,
        ),
        BodyJson::Extern {
            sources,
            top,
            port_map,
            registered,
            model,
        } => Body::ExternRtl(ExternRtl {
            sources,
            top,
            port_map,
            registered,
            model: model
                .map(|g| graph_from_json(&g, &m.ports))
                .transpose()
                .map_err(|e| SystemError::Schema(format!("body.model.{e}")))?,
        }),
    };
    let module = Module {
        name: m.name,
        ports: m.ports,
        body,
    };
    validate(&module).map_err(|diagnostics| SystemError::Invalid {
        module: module.name.to_string(),
        diagnostics,
    })?;
    Ok(Package {
        module,
        version: m.version,
        clock_domain: m.clock_domain.unwrap_or_else(|| Ident::new(DEFAULT_CLOCK_DOMAIN).unwrap()),
        area_estimate: m.area_estimate,
        dir: dir.to_path_buf(),
    })
}

impl Package {
    pub fn to_json(&self) -> Json {
        let body = match &self.module.body {
            Body::Dataflow(g) => BodyJson::Ir { graph: graph_to_json(g) },
            Body::ExternRtl(x) => BodyJson::Extern {
                sources: x.sources.clone(),
                top: x.top.clone(),
                port_map: x.port_map.clone(),
                registered: x.registered,
                model: x.model.as_ref().map(graph_to_json),
            },
        };
        let m = ManifestJson {
            llpm_schema: SCHEMA_VERSION,
            name: self.module.name.clone(),
            version: self.version.clone(),
            clock_domain: Some(self.clock_domain.clone()),
            area_estimate: self.area_estimate,
            ports: self.module.ports.clone(),
            body,
        };
        serde_json::to_value(m).expect("manifest serializes")
    }

    pub fn is_extern(&self) -> bool {
        matches!(self.module.body, Body::ExternRtl(_))
    }

    /// Extern source paths resolved against the manifest directory.
    pub fn source_paths(&self) -> Vec<PathBuf> {
        match &self.module.body {
            Body::ExternRtl(x) => x.sources.iter().map(|s| self.dir.join(s)).collect(),
            Body::Dataflow(_) => Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXTERN: &str = r#"{
        "llpm_schema": 1,
        "name": "add8_rtl",
        "version": "0.2.0",
        "area_estimate": 4,
        "ports": [
            {"name": "a", "direction": "in", "type": "uint<8>"},
            {"name": "b", "direction": "in", "type": "uint<8>"},
            {"name": "s", "direction": "out", "type": "uint<8>"}
        ],
        "body": {
            "kind": "extern",
            "sources": ["rtl/add8.v"],
            "top": "add8",
            "port_map": {
                "a": {"data": "a_data", "valid": "a_valid", "ready": "a_ready"},
                "b": {"data": "b_data", "valid": "b_valid", "ready": "b_ready"},
                "s": {"data": "s_data", "valid": "s_valid", "ready": "s_ready"}
            }
        }
    }"#;

    #[test]
    fn extern_manifest_loads_with_typed_ports() {
        let p = parse_package(EXTERN, Path::new("pkg")).unwrap();
        assert_eq!(p.module.ports.len(), 3);
        assert!(p.is_extern());
        assert_eq!(p.clock_domain.as_str(), "clk0");
        assert_eq!(p.source_paths(), vec![PathBuf::from("pkg/rtl/add8.v")]);
        let again = parse_package(&p.to_json().to_string(), Path::new("pkg")).unwrap();
        assert_eq!(again, p);
    }

    #[test]
    fn zero_width_port_is_rejected_with_a_path() {
        let bad = EXTERN.replacen("uint<8>", "uint<0>", 1);
        let e = parse_package(&bad, Path::new(".")).unwrap_err().to_string();
        assert!(e.contains("ports[0].type"), "{e}");
    }

    #[test]
    fn schema_version_is_enforced() {
        let bad = EXTERN.replace("\"llpm_schema\": 1", "\"llpm_schema\": 2");
        assert!(parse_package(&bad, Path::new(".")).unwrap_err().to_string().contains("version 2"));
        let missing = EXTERN.replace("\"llpm_schema\": 1,", "");
        assert!(parse_package(&missing, Path::new(".")).is_err());
    }

    #[test]
    fn uncovered_extern_port_is_reported() {
        let bad = EXTERN.replace(r#""s": {"data": "s_data", "valid": "s_valid", "ready": "s_ready"}"#, "").replace(
            r#""ready": "b_ready"},"#,
            r#""ready": "b_ready"}"#,
        );
        let e = parse_package(&bad, Path::new(".")).unwrap_err();
        assert!(matches!(e, SystemError::Invalid { .. }), "{e}");
    }
}
