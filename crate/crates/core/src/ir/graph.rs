// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::types::{HWType, Ident, Value};

pub type NodeId = u32;

/// One end of an edge: output `output` of node `node`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeRef {
    pub node: NodeId,
    pub output: u32,
}

impl EdgeRef {
    pub fn new(node: NodeId) -> Self {
        EdgeRef { node, output: 0 }
    }
}

impl From<NodeId> for EdgeRef {
    fn from(node: NodeId) -> Self {
        EdgeRef::new(node)
    }
}

impl Serialize for EdgeRef {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.output == 0 {
            s.serialize_u32(self.node)
        } else {
            (self.node, self.output).serialize(s)
        }
    }
}

impl<'de> Deserialize<'de> for EdgeRef {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Node(NodeId),
            Pair(NodeId, u32),
        }
        Ok(match Raw::deserialize(d)? {
            Raw::Node(node) => EdgeRef { node, output: 0 },
            Raw::Pair(node, output) => EdgeRef { node, output },
        })
    }
}

/// Operation kinds without their attributes. Used as latency-table keys.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpCode {
    Input,
    Output,
    Const,
    Add,
    Sub,
    Mul,
    Eq,
    Lt,
    And,
    Or,
    Xor,
    Not,
    Mux,
    StructPack,
    FieldExtract,
    ArrayPack,
    ArrayIndex,
    UnionPack,
    TagOf,
    UnwrapVariant,
    Delay,
}

impl OpCode {
    pub const ALL: [OpCode; 21] = [
        OpCode::Input,
        OpCode::Output,
        OpCode::Const,
        OpCode::Add,
        OpCode::Sub,
        OpCode::Mul,
        OpCode::Eq,
        OpCode::Lt,
        OpCode::And,
        OpCode::Or,
        OpCode::Xor,
        OpCode::Not,
        OpCode::Mux,
        OpCode::StructPack,
        OpCode::FieldExtract,
        OpCode::ArrayPack,
        OpCode::ArrayIndex,
        OpCode::UnionPack,
        OpCode::TagOf,
        OpCode::UnwrapVariant,
        OpCode::Delay,
    ];

    pub fn mnemonic(self) -> &'static str {
        match self {
            OpCode::Input => "input",
            OpCode::Output => "output",
            OpCode::Const => "const",
            OpCode::Add => "add",
            OpCode::Sub => "sub",
            OpCode::Mul => "mul",
            OpCode::Eq => "eq",
            OpCode::Lt => "lt",
            OpCode::And => "and",
            OpCode::Or => "or",
            OpCode::Xor => "xor",
            OpCode::Not => "not",
            OpCode::Mux => "mux",
            OpCode::StructPack => "struct_pack",
            OpCode::FieldExtract => "field_extract",
            OpCode::ArrayPack => "array_pack",
            OpCode::ArrayIndex => "array_index",
            OpCode::UnionPack => "union_pack",
            OpCode::TagOf => "tag_of",
            OpCode::UnwrapVariant => "unwrap_variant",
            OpCode::Delay => "delay",
        }
    }

    pub fn from_mnemonic(s: &str) -> Option<OpCode> {
        OpCode::ALL.into_iter().find(|c| c.mnemonic() == s)
    }
}

impl fmt::Display for OpCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.mnemonic())
    }
}

/// A dataflow operation with its attributes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OpKind {
    InputPort { name: Ident, ty: HWType },
    OutputPort { name: Ident },
    Const { ty: HWType, value: Value },
    Add,
    Sub,
    Mul,
    Eq,
    Lt,
    And,
    Or,
    Xor,
    Not,
    /// `(sel, a, b)`; `sel == 1` selects `a`.
    Mux,
    StructPack { ty: HWType },
    FieldExtract { field: Ident },
    ArrayPack { ty: HWType },
    /// `(array, index)`
    ArrayIndex,
    UnionPack { ty: HWType, variant: Ident },
    TagOf,
    UnwrapVariant { variant: Ident },
    /// The only state element: emits `init`, then each previous input.
    Delay { ty: HWType, init: Value },
}

impl OpKind {
    pub fn code(&self) -> OpCode {
        match self {
            OpKind::InputPort { .. } => OpCode::Input,
            OpKind::OutputPort { .. } => OpCode::Output,
            OpKind::Const { .. } => OpCode::Const,
            OpKind::Add => OpCode::Add,
            OpKind::Sub => OpCode::Sub,
            OpKind::Mul => OpCode::Mul,
            OpKind::Eq => OpCode::Eq,
            OpKind::Lt => OpCode::Lt,
            OpKind::And => OpCode::And,
            OpKind::Or => OpCode::Or,
            OpKind::Xor => OpCode::Xor,
            OpKind::Not => OpCode::Not,
            OpKind::Mux => OpCode::Mux,
            OpKind::StructPack { .. } => OpCode::StructPack,
            OpKind::FieldExtract { .. } => OpCode::FieldExtract,
            OpKind::ArrayPack { .. } => OpCode::ArrayPack,
            OpKind::ArrayIndex => OpCode::ArrayIndex,
            OpKind::UnionPack { .. } => OpCode::UnionPack,
            OpKind::TagOf => OpCode::TagOf,
            OpKind::UnwrapVariant { .. } => OpCode::UnwrapVariant,
            OpKind::Delay { .. } => OpCode::Delay,
        }
    }

    /// Number of inputs the op consumes, or `None` when its attribute type is
    /// malformed and the arity cannot be known.
    pub fn arity(&self) -> Option<usize> {
        Some(match self {
            OpKind::InputPort { .. } | OpKind::Const { .. } => 0,
            OpKind::OutputPort { .. }
            | OpKind::Not
            | OpKind::FieldExtract { .. }
            | OpKind::UnionPack { .. }
            | OpKind::TagOf
            | OpKind::UnwrapVariant { .. }
            | OpKind::Delay { .. } => 1,
            OpKind::Add
            | OpKind::Sub
            | OpKind::Mul
            | OpKind::Eq
            | OpKind::Lt
            | OpKind::And
            | OpKind::Or
            | OpKind::Xor
            | OpKind::ArrayIndex => 2,
            OpKind::Mux => 3,
            OpKind::StructPack { ty } => match ty {
                HWType::Struct(fields) => fields.len(),
                _ => return None,
            },
            OpKind::ArrayPack { ty } => match ty {
                HWType::Array(_, n) => *n as usize,
                _ => return None,
            },
        })
    }

    pub fn num_outputs(&self) -> u32 {
        match self {
            OpKind::OutputPort { .. } => 0,
            _ => 1,
        }
    }

    pub fn is_delay(&self) -> bool {
        matches!(self, OpKind::Delay { .. })
    }

    pub fn port_name(&self) -> Option<&Ident> {
        match self {
            OpKind::InputPort { name, .. } | OpKind::OutputPort { name } => Some(name),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub id: NodeId,
    pub op: OpKind,
    pub inputs: Vec<EdgeRef>,
}

/// A rate-1 synchronous dataflow graph. Node ids are unique but need not be
/// dense; node order carries no meaning.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DataflowGraph {
    pub nodes: Vec<Node>,
}

impl DataflowGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a node with the next free id.
    pub fn add(&mut self, op: OpKind, inputs: impl IntoIterator<Item = NodeId>) -> NodeId {
        let id = self.nodes.iter().map(|n| n.id + 1).max().unwrap_or(0);
        self.nodes.push(Node {
            id,
            op,
            inputs: inputs.into_iter().map(EdgeRef::new).collect(),
        });
        id
    }

    /// Rewires input `index` of `node`. Used to close feedback loops after
    /// both ends exist.
    pub fn connect(&mut self, from: NodeId, node: NodeId, index: usize) {
        let n = self.nodes.iter_mut().find(|n| n.id == node).expect("unknown node");
        if n.inputs.len() <= index {
            n.inputs.resize(index + 1, EdgeRef::new(from));
        }
        n.inputs[index] = EdgeRef::new(from);
    }

    pub fn node(&self, id: NodeId) -> Option<&Node> {
        self.nodes.iter().find(|n| n.id == id)
    }

    /// Map from node id to its position in `nodes`.
    pub fn index(&self) -> BTreeMap<NodeId, usize> {
        self.nodes.iter().enumerate().map(|(i, n)| (n.id, i)).collect()
    }

    pub fn ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().map(|n| n.id)
    }

    /// Consumers of each node as `(consumer, input index)`.
    pub fn consumers(&self) -> BTreeMap<NodeId, Vec<(NodeId, usize)>> {
        let mut out: BTreeMap<NodeId, Vec<(NodeId, usize)>> = self.ids().map(|id| (id, Vec::new())).collect();
        for n in &self.nodes {
            for (i, e) in n.inputs.iter().enumerate() {
                out.entry(e.node).or_default().push((n.id, i));
            }
        }
        out
    }

    pub fn input_port(&self, name: &str) -> Option<&Node> {
        self.nodes
            .iter()
            .find(|n| matches!(&n.op, OpKind::InputPort { name: p, .. } if p.as_str() == name))
    }

    pub fn output_port(&self, name: &str) -> Option<&Node> {
        self.nodes
            .iter()
            .find(|n| matches!(&n.op, OpKind::OutputPort { name: p } if p.as_str() == name))
    }
}
