// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

use super::design::endpoint;
use super::{check_deadlock, parse_package, read_versioned, Package, SystemDesign, SystemError, SCHEMA_VERSION};
use crate::ir::{Body, Direction, Module};
use crate::pipeline::{compile, LatencyTable, PipelinedNetlist};
use crate::types::{HWType, Ident};

pub const DEFAULT_CDC_DEPTH: u64 = 4;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Endpoint {
    pub instance: Ident,
    pub port: Ident,
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.instance, self.port)
    }
}

/// What sits on a connection between producer and consumer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Storage {
    Wire,
    Fifo { depth: u64 },
    Cdc { depth: u64, from_domain: Ident, to_domain: Ident },
}

impl Storage {
    pub fn holds_tokens(&self) -> bool {
        !matches!(self, Storage::Wire)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Connection {
    pub name: Ident,
    pub from: Endpoint,
    pub to: Endpoint,
    #[serde(rename = "type")]
    pub ty: HWType,
    pub storage: Storage,
}

/// An unconnected port surfaced at the top level.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Export {
    pub name: Ident,
    pub instance: Ident,
    pub port: Ident,
    pub direction: Direction,
    #[serde(rename = "type")]
    pub ty: HWType,
    pub clock_domain: Ident,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub name: Ident,
    pub package: Package,
    pub clock_domain: Ident,
    /// Pipelined realization of the module, or of an extern block's
    /// behavioral model.
    pub netlist: Option<PipelinedNetlist>,
}

impl Instance {
    pub fn module(&self) -> &Module {
        &self.package.module
    }

    /// Whether some register separates every input from every output.
    pub fn is_registered(&self) -> bool {
        match &self.package.module.body {
            Body::Dataflow(_) => self.netlist.as_ref().is_some_and(|n| n.latency() >= 1),
            Body::ExternRtl(x) => x.registered,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Report {
    /// Zero-storage cycles, each as the instance sequence around it.
    pub deadlocks: Vec<Vec<Ident>>,
    pub warnings: Vec<String>,
}

impl Report {
    pub fn ok(&self) -> bool {
        self.deadlocks.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssembledSystem {
    pub name: Ident,
    pub latency_table: LatencyTable,
    /// Sorted by name.
    pub instances: Vec<Instance>,
    pub connections: Vec<Connection>,
    /// Sorted by name.
    pub exports: Vec<Export>,
    pub perf_taps: Vec<String>,
    pub host_bridge: Vec<String>,
    pub report: Report,
}

impl AssembledSystem {
    pub fn instance(&self, name: &str) -> Option<&Instance> {
        self.instances.iter().find(|i| i.name.as_str() == name)
    }

    pub fn export(&self, name: &str) -> Option<&Export> {
        self.exports.iter().find(|e| e.name.as_str() == name)
    }

    pub fn connection(&self, name: &str) -> Option<&Connection> {
        self.connections.iter().find(|c| c.name.as_str() == name)
    }

    /// Type of a connection or exported channel.
    pub fn channel_type(&self, name: &str) -> Option<&HWType> {
        self.connection(name)
            .map(|c| &c.ty)
            .or_else(|| self.export(name).map(|e| &e.ty))
    }

    pub fn clock_domains(&self) -> BTreeSet<Ident> {
        self.instances.iter().map(|i| i.clock_domain.clone()).collect()
    }
}

fn port_of<'a>(
    instances: &'a BTreeMap<Ident, Instance>,
    text: &str,
    expected: Direction,
) -> Result<(Endpoint, &'a crate::ir::Port, &'a Instance), SystemError> {
    let (inst, port) = endpoint(text)?;
    let i = instances
        .get(inst)
        .ok_or_else(|| SystemError::UnknownInstance(inst.to_string()))?;
    let p = i.module().port(port).ok_or_else(|| SystemError::UnknownPort {
        instance: inst.to_string(),
        port: port.to_string(),
    })?;
    if p.direction != expected {
        return Err(SystemError::Direction {
            endpoint: text.to_string(),
            expected: if expected == Direction::Out { "output" } else { "input" },
        });
    }
    Ok((
        Endpoint {
            instance: i.name.clone(),
            port: p.name.clone(),
        },
        p,
        i,
    ))
}

/// Resolves a design against its packages: type-checks connections,
/// chooses wire, FIFO or CDC storage, exports unconnected ports, pipelines
/// IR modules and runs the deadlock check.
pub fn assemble(design: &SystemDesign, packages: &BTreeMap<String, Package>) -> Result<AssembledSystem, SystemError> {
    let table = design.latency_table.clone().unwrap_or_default();
    let mut instances = BTreeMap::new();
    for (name, spec) in &design.instances {
        let package = packages
            .get(&spec.package)
            .ok_or_else(|| SystemError::Schema(format!("instances.{name}: package `{}` not loaded", spec.package)))?
            .clone();
        let netlist = pipeline_of(name, &package.module, &table)?;
        instances.insert(
            name.clone(),
            Instance {
                name: name.clone(),
                clock_domain: spec.clock_domain.clone().unwrap_or_else(|| package.clock_domain.clone()),
                package,
                netlist,
            },
        );
    }
    let mut report = Report::default();
    let mut connections = Vec::new();
    let mut driven = BTreeSet::new();
    let mut feeding = BTreeSet::new();
    for (k, c) in design.connections.iter().enumerate() {
        let (from, fp, fi) = port_of(&instances, &c.from, Direction::Out)?;
        let (to, tp, ti) = port_of(&instances, &c.to, Direction::In)?;
        if fp.ty != tp.ty {
            return Err(SystemError::TypeMismatch {
                from: from.to_string(),
                from_type: fp.ty.to_string(),
                to: to.to_string(),
                to_type: tp.ty.to_string(),
            });
        }
        if !driven.insert(to.clone()) {
            return Err(SystemError::DoubleDriven(to.to_string()));
        }
        if !feeding.insert(from.clone()) {
            return Err(SystemError::FanOut(from.to_string()));
        }
        let name = match &c.name {
            Some(n) => n.clone(),
            None => Ident::new(&format!("{}_{}_to_{}_{}", from.instance, from.port, to.instance, to.port)).unwrap(),
        };
        let storage = if fi.clock_domain != ti.clock_domain {
            let depth = c.cdc_depth.unwrap_or(DEFAULT_CDC_DEPTH);
            if depth < 2 || !depth.is_power_of_two() {
                return Err(SystemError::CdcDepth {
                    connection: name.to_string(),
                    depth,
                });
            }
            if c.fifo_depth > 0 {
                report.warnings.push(format!(
                    "connections[{k}] ({name}): fifo_depth {} ignored on a clock-domain crossing; the CDC FIFO has depth {depth}",
                    c.fifo_depth
                ));
            }
            Storage::Cdc {
                depth,
                from_domain: fi.clock_domain.clone(),
                to_domain: ti.clock_domain.clone(),
            }
        } else if c.fifo_depth == 0 {
            Storage::Wire
        } else {
            Storage::Fifo { depth: c.fifo_depth }
        };
        connections.push(Connection {
            name,
            from,
            to,
            ty: fp.ty.clone(),
            storage,
        });
    }
    let mut renames: BTreeMap<Endpoint, Ident> = BTreeMap::new();
    for (text, new) in &design.exports {
        let (inst, port) = endpoint(text)?;
        let i = instances
            .get(inst)
            .ok_or_else(|| SystemError::UnknownInstance(inst.to_string()))?;
        if i.module().port(port).is_none() {
            return Err(SystemError::UnknownPort {
                instance: inst.to_string(),
                port: port.to_string(),
            });
        }
        let ep = Endpoint {
            instance: i.name.clone(),
            port: Ident::new(port).unwrap(),
        };
        if driven.contains(&ep) || feeding.contains(&ep) {
            return Err(SystemError::Export(format!("`{text}` is connected and cannot be exported")));
        }
        renames.insert(ep, new.clone());
    }
    let mut exports = Vec::new();
    for i in instances.values() {
        for p in &i.module().ports {
            let ep = Endpoint {
                instance: i.name.clone(),
                port: p.name.clone(),
            };
            if driven.contains(&ep) || feeding.contains(&ep) {
                continue;
            }
            let name = renames
                .get(&ep)
                .cloned()
                .unwrap_or_else(|| Ident::new(&format!("{}_{}", i.name, p.name)).unwrap());
            exports.push(Export {
                name,
                instance: i.name.clone(),
                port: p.name.clone(),
                direction: p.direction,
                ty: p.ty.clone(),
                clock_domain: i.clock_domain.clone(),
            });
        }
    }
    exports.sort_by(|a, b| a.name.cmp(&b.name));
    let mut names = BTreeSet::new();
    for n in connections.iter().map(|c| &c.name).chain(exports.iter().map(|e| &e.name)) {
        if !names.insert(n.clone()) {
            return Err(SystemError::DuplicateChannel(n.to_string()));
        }
    }
    let mut sys = AssembledSystem {
        name: design.name.clone(),
        latency_table: table,
        instances: instances.into_values().collect(),
        connections,
        exports,
        perf_taps: Vec::new(),
        host_bridge: Vec::new(),
        report,
    };
    sys.report.deadlocks = check_deadlock(&sys);
    insert_perf_taps(&mut sys, &design.perf_taps)?;
    if !design.host_bridge.is_empty() {
        super::synth_host_bridge(&mut sys, &design.host_bridge)?;
    }
    Ok(sys)
}

fn pipeline_of(name: &Ident, module: &Module, table: &LatencyTable) -> Result<Option<PipelinedNetlist>, SystemError> {
    if module.behavior().is_none() {
        return Ok(None);
    }
    compile(module, table).map(Some).map_err(|e| SystemError::Pipeline {
        instance: name.to_string(),
        message: e.to_string(),
    })
}

/// Attaches 32-bit transfer/stall/idle counters to the named channels.
pub fn insert_perf_taps(sys: &mut AssembledSystem, channels: &[String]) -> Result<(), SystemError> {
    for c in channels {
        if sys.channel_type(c).is_none() {
            return Err(SystemError::UnknownChannel(c.clone()));
        }
        if !sys.perf_taps.contains(c) {
            sys.perf_taps.push(c.clone());
        }
    }
    sys.perf_taps.sort();
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AssembledJson {
    llpm_assembled: u32,
    name: Ident,
    latency_table: LatencyTable,
    instances: Vec<InstanceJson>,
    connections: Vec<Connection>,
    exports: Vec<Export>,
    perf_taps: Vec<String>,
    host_bridge: Vec<String>,
    report: Report,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceJson {
    name: Ident,
    clock_domain: Ident,
    latency: Option<u32>,
    package_dir: String,
    package: Json,
}

impl AssembledSystem {
    pub fn to_json(&self) -> Json {
        let j = AssembledJson {
            llpm_assembled: SCHEMA_VERSION,
            name: self.name.clone(),
            latency_table: self.latency_table.clone(),
            instances: self
                .instances
                .iter()
                .map(|i| InstanceJson {
                    name: i.name.clone(),
                    clock_domain: i.clock_domain.clone(),
                    latency: i.netlist.as_ref().map(|n| n.latency()),
                    package_dir: i.package.dir.display().to_string(),
                    package: i.package.to_json(),
                })
                .collect(),
            connections: self.connections.clone(),
            exports: self.exports.clone(),
            perf_taps: self.perf_taps.clone(),
            host_bridge: self.host_bridge.clone(),
            report: self.report.clone(),
        };
        serde_json::to_value(j).expect("assembled system serializes")
    }

    /// Reads the form written by [`AssembledSystem::to_json`]. Netlists are
    /// rebuilt from the embedded packages.
    pub fn from_json(text: &str) -> Result<AssembledSystem, SystemError> {
        let j: AssembledJson = read_versioned(text, "llpm_assembled")?;
        let mut instances = Vec::new();
        for (k, i) in j.instances.into_iter().enumerate() {
            let package = parse_package(&i.package.to_string(), &PathBuf::from(&i.package_dir))
                .map_err(|e| SystemError::Schema(format!("instances[{k}].package: {e}")))?;
            let netlist = pipeline_of(&i.name, &package.module, &j.latency_table)?;
            instances.push(Instance {
                name: i.name,
                package,
                clock_domain: i.clock_domain,
                netlist,
            });
        }
        let sys = AssembledSystem {
            name: j.name,
            latency_table: j.latency_table,
            instances,
            connections: j.connections,
            exports: j.exports,
            perf_taps: j.perf_taps,
            host_bridge: j.host_bridge,
            report: j.report,
        };
        for c in &sys.connections {
            for ep in [&c.from, &c.to] {
                let i = sys
                    .instance(&ep.instance)
                    .ok_or_else(|| SystemError::UnknownInstance(ep.instance.to_string()))?;
                if i.module().port(&ep.port).is_none() {
                    return Err(SystemError::UnknownPort {
                        instance: ep.instance.to_string(),
                        port: ep.port.to_string(),
                    });
                }
            }
        }
        Ok(sys)
    }
}
