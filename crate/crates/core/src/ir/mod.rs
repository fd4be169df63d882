// SPDX-License-Identifier: Apache-2.0

//! The untimed module representation.
//!
//! A [`Module`] has typed ports and a body that is either a rate-1
//! synchronous dataflow graph or a wrapped external RTL block. In the
//! dataflow model every node fires once per step, consuming one token on
//! each input and producing one on its output. [`OpKind::Delay`] is the only
//! state element.

pub(crate) mod exec;
mod graph;
mod infer;
pub(crate) mod json;
mod passes;
mod validate;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::types::{HWType, Ident};

pub use graph::{DataflowGraph, EdgeRef, Node, NodeId, OpCode, OpKind};
pub use infer::{check_attributes, infer_type, InferError};
pub use passes::{dead_node_elim, topo_order, topo_order_with, CycleError};
pub use validate::{infer_graph_types, validate, validate_graph, Diagnostic};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    In,
    Out,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Port {
    pub name: Ident,
    pub direction: Direction,
    #[serde(rename = "type")]
    pub ty: HWType,
}

impl Port {
    pub fn new(name: &str, direction: Direction, ty: HWType) -> Self {
        Port {
            name: Ident::new(name).expect("valid port name"),
            direction,
            ty,
        }
    }
}

/// RTL signal names implementing one latency-insensitive port.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortSignals {
    /// Absent for zero-width (`void`) ports.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<String>,
    pub valid: String,
    pub ready: String,
}

/// Existing RTL wrapped with typed, latency-insensitive port metadata.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExternRtl {
    pub sources: Vec<String>,
    pub top: String,
    pub port_map: BTreeMap<Ident, PortSignals>,
    /// Declares that no combinational path runs from inputs to outputs.
    pub registered: bool,
    /// Behavioral stand-in used by the interpreter and simulator.
    pub model: Option<DataflowGraph>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Body {
    Dataflow(DataflowGraph),
    ExternRtl(ExternRtl),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Module {
    pub name: Ident,
    pub ports: Vec<Port>,
    pub body: Body,
}

impl Module {
    pub fn dataflow(name: &str, ports: Vec<Port>, graph: DataflowGraph) -> Self {
        Module {
            name: Ident::new(name).expect("valid module name"),
            ports,
            body: Body::Dataflow(graph),
        }
    }

    /// The graph that defines this module's behavior: its own body, or the
    /// behavioral model of an extern block.
    pub fn behavior(&self) -> Option<&DataflowGraph> {
        match &self.body {
            Body::Dataflow(g) => Some(g),
            Body::ExternRtl(x) => x.model.as_ref(),
        }
    }

    pub fn port(&self, name: &str) -> Option<&Port> {
        self.ports.iter().find(|p| p.name.as_str() == name)
    }

    pub fn inputs(&self) -> impl Iterator<Item = &Port> {
        self.ports.iter().filter(|p| p.direction == Direction::In)
    }

    pub fn outputs(&self) -> impl Iterator<Item = &Port> {
        self.ports.iter().filter(|p| p.direction == Direction::Out)
    }
}
