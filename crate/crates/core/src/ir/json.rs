// SPDX-License-Identifier: Apache-2.0

//! Serialized form of dataflow graphs, shared by package manifests and
//! netlist files.

use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

use super::{DataflowGraph, Direction, EdgeRef, Node, NodeId, OpCode, OpKind, Port};
use crate::types::{value_from_json, value_to_json, HWType, Ident};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct NodeJson {
    pub id: NodeId,
    pub op: OpCode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<Ident>,
    #[serde(default, rename = "type", skip_serializing_if = "Option::is_none")]
    pub ty: Option<HWType>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<Json>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<Json>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<Ident>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<Ident>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inputs: Vec<EdgeRef>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct GraphJson {
    pub nodes: Vec<NodeJson>,
}

pub(crate) fn graph_to_json(graph: &DataflowGraph) -> GraphJson {
    GraphJson {
        nodes: graph.nodes.iter().map(node_to_json).collect(),
    }
}

fn node_to_json(n: &Node) -> NodeJson {
    let mut j = NodeJson {
        id: n.id,
        op: n.op.code(),
        name: None,
        ty: None,
        value: None,
        init: None,
        field: None,
        variant: None,
        inputs: n.inputs.clone(),
    };
    match &n.op {
        OpKind::InputPort { name, ty } => {
            j.name = Some(name.clone());
            j.ty = Some(ty.clone());
        }
        OpKind::OutputPort { name } => j.name = Some(name.clone()),
        OpKind::Const { ty, value } => {
            j.ty = Some(ty.clone());
            j.value = Some(value_to_json(value));
        }
        OpKind::StructPack { ty } | OpKind::ArrayPack { ty } => j.ty = Some(ty.clone()),
        OpKind::FieldExtract { field } => j.field = Some(field.clone()),
        OpKind::UnionPack { ty, variant } => {
            j.ty = Some(ty.clone());
            j.variant = Some(variant.clone());
        }
        OpKind::UnwrapVariant { variant } => j.variant = Some(variant.clone()),
        OpKind::Delay { ty, init } => {
            j.ty = Some(ty.clone());
            j.init = Some(value_to_json(init));
        }
        _ => {}
    }
    j
}

/// Rebuilds a graph. Input nodes without an explicit type take the type of
/// the same-named input port. Errors are prefixed with the node's position.
pub(crate) fn graph_from_json(g: &GraphJson, ports: &[Port]) -> Result<DataflowGraph, String> {
    let nodes = g
        .nodes
        .iter()
        .enumerate()
        .map(|(i, n)| node_from_json(n, ports).map_err(|e| format!("nodes[{i}] (id {}): {e}", n.id)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(DataflowGraph { nodes })
}

fn node_from_json(n: &NodeJson, ports: &[Port]) -> Result<Node, String> {
    let op = n.op;
    let need = |what: &str, present: bool| {
        if present {
            Ok(())
        } else {
            Err(format!("`{op}` requires `{what}`"))
        }
    };
    let ty = || n.ty.clone().ok_or_else(|| format!("`{op}` requires `type`"));
    let allowed: &[&str] = match op {
        OpCode::Input => &["name", "type"],
        OpCode::Output => &["name"],
        OpCode::Const => &["type", "value"],
        OpCode::StructPack | OpCode::ArrayPack => &["type"],
        OpCode::FieldExtract => &["field"],
        OpCode::UnionPack => &["type", "variant"],
        OpCode::UnwrapVariant => &["variant"],
        OpCode::Delay => &["type", "init"],
        _ => &[],
    };
    let present = [
        ("name", n.name.is_some()),
        ("type", n.ty.is_some()),
        ("value", n.value.is_some()),
        ("init", n.init.is_some()),
        ("field", n.field.is_some()),
        ("variant", n.variant.is_some()),
    ];
    if let Some((attr, _)) = present.iter().find(|(a, p)| *p && !allowed.contains(a)) {
        return Err(format!("`{op}` does not take `{attr}`"));
    }
    let op = match op {
        OpCode::Input => {
            need("name", n.name.is_some())?;
            let name = n.name.clone().unwrap();
            let ty = match &n.ty {
                Some(t) => t.clone(),
                None => ports
                    .iter()
                    .find(|p| p.name == name && p.direction == Direction::In)
                    .map(|p| p.ty.clone())
                    .ok_or_else(|| format!("input `{name}` has no type and no matching input port"))?,
            };
            OpKind::InputPort { name, ty }
        }
        OpCode::Output => {
            need("name", n.name.is_some())?;
            OpKind::OutputPort {
                name: n.name.clone().unwrap(),
            }
        }
        OpCode::Const => {
            let ty = ty()?;
            need("value", n.value.is_some())?;
            let value = value_from_json(n.value.as_ref().unwrap(), &ty).map_err(|e| format!("value: {e}"))?;
            OpKind::Const { ty, value }
        }
        OpCode::Add => OpKind::Add,
        OpCode::Sub => OpKind::Sub,
        OpCode::Mul => OpKind::Mul,
        OpCode::Eq => OpKind::Eq,
        OpCode::Lt => OpKind::Lt,
        OpCode::And => OpKind::And,
        OpCode::Or => OpKind::Or,
        OpCode::Xor => OpKind::Xor,
        OpCode::Not => OpKind::Not,
        OpCode::Mux => OpKind::Mux,
        OpCode::StructPack => OpKind::StructPack { ty: ty()? },
        OpCode::ArrayPack => OpKind::ArrayPack { ty: ty()? },
        OpCode::FieldExtract => {
            need("field", n.field.is_some())?;
            OpKind::FieldExtract {
                field: n.field.clone().unwrap(),
            }
        }
        OpCode::ArrayIndex => OpKind::ArrayIndex,
        OpCode::UnionPack => {
            let ty = ty()?;
            need("variant", n.variant.is_some())?;
            OpKind::UnionPack {
                ty,
                variant: n.variant.clone().unwrap(),
            }
        }
        OpCode::TagOf => OpKind::TagOf,
        OpCode::UnwrapVariant => {
            need("variant", n.variant.is_some())?;
            OpKind::UnwrapVariant {
                variant: n.variant.clone().unwrap(),
            }
        }
        OpCode::Delay => {
            let ty = ty()?;
            let init = match &n.init {
                Some(j) => value_from_json(j, &ty).map_err(|e| format!("init: {e}"))?,
                None => crate::types::Value::zero(&ty),
            };
            OpKind::Delay { ty, init }
        }
    };
    Ok(Node {
        id: n.id,
        op,
        inputs: n.inputs.clone(),
    })
}
