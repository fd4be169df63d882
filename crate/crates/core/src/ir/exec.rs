// SPDX-License-Identifier: Apache-2.0

//! Bit-level evaluation shared by the interpreter and the simulators.

use super::{infer_graph_types, topo_order, DataflowGraph, Diagnostic, NodeId, OpKind};
use crate::types::{encode, tag_width, BitPattern, HWType, Ident};

/// The combinational function of one node, with widths resolved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Kernel {
    /// Value supplied from outside: an input token or a register.
    Source,
    Pass,
    Const(BitPattern),
    Add(u64),
    Sub(u64),
    Mul(u64),
    Eq,
    Lt { signed: bool },
    And,
    Or,
    Xor,
    Not(u64),
    Mux,
    /// Arguments placed LSB-first.
    Concat,
    Slice { offset: u64, width: u64 },
    ArrayIndex { elem: u64, count: u64 },
    UnionPack { tag: u128, tag_width: u64, width: u64 },
    TagOf { tag_width: u64 },
}

fn mask(w: u64) -> u128 {
    if w >= 128 {
        u128::MAX
    } else {
        (1u128 << w) - 1
    }
}

impl Kernel {
    /// `inputs` are the input types and `out` the inferred output type.
    pub(crate) fn compile(op: &OpKind, inputs: &[HWType], out: &HWType) -> Kernel {
        let w = out.bit_width();
        match op {
            OpKind::InputPort { .. } | OpKind::Delay { .. } => Kernel::Source,
            OpKind::OutputPort { .. } => Kernel::Pass,
            OpKind::Const { ty, value } => Kernel::Const(encode(value, ty).expect("checked constant")),
            OpKind::Add => Kernel::Add(w),
            OpKind::Sub => Kernel::Sub(w),
            OpKind::Mul => Kernel::Mul(w),
            OpKind::Eq => Kernel::Eq,
            OpKind::Lt => Kernel::Lt {
                signed: matches!(inputs[0], HWType::SInt(_)),
            },
            OpKind::And => Kernel::And,
            OpKind::Or => Kernel::Or,
            OpKind::Xor => Kernel::Xor,
            OpKind::Not => Kernel::Not(w),
            OpKind::Mux => Kernel::Mux,
            OpKind::StructPack { .. } | OpKind::ArrayPack { .. } => Kernel::Concat,
            OpKind::FieldExtract { field } => Kernel::Slice {
                offset: inputs[0].field_offset(field).expect("checked field"),
                width: w,
            },
            OpKind::ArrayIndex => match &inputs[0] {
                HWType::Array(elem, count) => Kernel::ArrayIndex {
                    elem: elem.bit_width(),
                    count: u64::from(*count),
                },
                _ => unreachable!("checked array"),
            },
            OpKind::UnionPack { ty, variant } => {
                let HWType::Union(vs) = ty else { unreachable!("checked union") };
                Kernel::UnionPack {
                    tag: ty.entry(variant).expect("checked variant").0 as u128,
                    tag_width: tag_width(vs.len()),
                    width: w,
                }
            }
            OpKind::TagOf => match &inputs[0] {
                HWType::Union(vs) => Kernel::TagOf {
                    tag_width: tag_width(vs.len()),
                },
                _ => unreachable!("checked union"),
            },
            OpKind::UnwrapVariant { .. } => match &inputs[0] {
                HWType::Union(vs) => Kernel::Slice {
                    offset: tag_width(vs.len()),
                    width: w,
                },
                _ => unreachable!("checked union"),
            },
        }
    }

    pub(crate) fn apply(&self, args: &[&BitPattern]) -> BitPattern {
        let scalar = |i: usize| args[i].to_u128();
        let len = || args[0].len();
        match self {
            Kernel::Source => panic!("source kernels take their value from outside"),
            Kernel::Pass => args[0].clone(),
            Kernel::Const(bits) => bits.clone(),
            Kernel::Add(w) => BitPattern::from_u128(scalar(0).wrapping_add(scalar(1)) & mask(*w), *w),
            Kernel::Sub(w) => BitPattern::from_u128(scalar(0).wrapping_sub(scalar(1)) & mask(*w), *w),
            Kernel::Mul(w) => BitPattern::from_u128(scalar(0).wrapping_mul(scalar(1)) & mask(*w), *w),
            Kernel::Eq => BitPattern::from_u128(u128::from(args[0] == args[1]), 1),
            Kernel::Lt { signed } => {
                let lt = if *signed {
                    args[0].to_i128() < args[1].to_i128()
                } else {
                    scalar(0) < scalar(1)
                };
                BitPattern::from_u128(u128::from(lt), 1)
            }
            Kernel::And => BitPattern::from_u128(scalar(0) & scalar(1), len()),
            Kernel::Or => BitPattern::from_u128(scalar(0) | scalar(1), len()),
            Kernel::Xor => BitPattern::from_u128(scalar(0) ^ scalar(1), len()),
            Kernel::Not(w) => BitPattern::from_u128(!scalar(0) & mask(*w), *w),
            Kernel::Mux => {
                if args[0].get(0) {
                    args[1].clone()
                } else {
                    args[2].clone()
                }
            }
            Kernel::Concat => {
                let mut out = BitPattern::zeros(0);
                for a in args {
                    out.append(a);
                }
                out
            }
            Kernel::Slice { offset, width } => args[0].slice(*offset, *width),
            Kernel::ArrayIndex { elem, count } => {
                let idx = scalar(1);
                if idx < u128::from(*count) {
                    args[0].slice(idx as u64 * elem, *elem)
                } else {
                    BitPattern::zeros(*elem)
                }
            }
            Kernel::UnionPack { tag, tag_width, width } => {
                let mut out = BitPattern::zeros(*width);
                out.write(0, &BitPattern::from_u128(*tag, *tag_width));
                out.write(*tag_width, args[0]);
                out
            }
            Kernel::TagOf { tag_width } => args[0].slice(0, *tag_width).resized((*tag_width).max(1)),
        }
    }
}

/// A validated graph compiled for repeated evaluation.
#[derive(Debug, Clone)]
pub(crate) struct Exec {
    pub ids: Vec<NodeId>,
    pub types: Vec<HWType>,
    pub kernels: Vec<Kernel>,
    pub args: Vec<Vec<usize>>,
    /// Evaluation order as positions.
    pub order: Vec<usize>,
    pub inputs: Vec<(Ident, usize)>,
    pub outputs: Vec<(Ident, usize)>,
    /// Delay positions with their initial contents.
    pub delays: Vec<(usize, BitPattern)>,
}

impl Exec {
    pub(crate) fn compile(graph: &DataflowGraph) -> Result<Exec, Vec<Diagnostic>> {
        let types = infer_graph_types(graph)?;
        let order = topo_order(graph).map_err(|e| vec![Diagnostic { node: e.nodes.first().copied(), message: e.to_string() }])?;
        let index = graph.index();
        let mut exec = Exec {
            ids: graph.ids().collect(),
            types: graph.nodes.iter().map(|n| types[&n.id].clone()).collect(),
            kernels: Vec::with_capacity(graph.nodes.len()),
            args: graph
                .nodes
                .iter()
                .map(|n| n.inputs.iter().map(|e| index[&e.node]).collect())
                .collect(),
            order: order.iter().map(|id| index[id]).collect(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            delays: Vec::new(),
        };
        for (pos, n) in graph.nodes.iter().enumerate() {
            let in_types: Vec<HWType> = n.inputs.iter().map(|e| types[&e.node].clone()).collect();
            exec.kernels.push(Kernel::compile(&n.op, &in_types, &types[&n.id]));
            match &n.op {
                OpKind::InputPort { name, .. } => exec.inputs.push((name.clone(), pos)),
                OpKind::OutputPort { name } => exec.outputs.push((name.clone(), pos)),
                OpKind::Delay { ty, init } => exec.delays.push((pos, encode(init, ty).expect("checked init"))),
                _ => {}
            }
        }
        exec.inputs.sort();
        exec.outputs.sort();
        Ok(exec)
    }

    pub(crate) fn position(&self, id: NodeId) -> Option<usize> {
        self.ids.iter().position(|&x| x == id)
    }

    pub(crate) fn initial_state(&self) -> Vec<BitPattern> {
        self.delays.iter().map(|(_, b)| b.clone()).collect()
    }

    /// One firing of every node. `inputs` follow `self.inputs` and `state`
    /// follows `self.delays`; the state is advanced in place. Returns every
    /// node's value by position.
    pub(crate) fn step(&self, inputs: &[BitPattern], state: &mut [BitPattern], order: &[usize]) -> Vec<BitPattern> {
        let mut vals = vec![BitPattern::default(); self.kernels.len()];
        for (k, (_, pos)) in self.inputs.iter().enumerate() {
            vals[*pos] = inputs[k].clone();
        }
        for (k, (pos, _)) in self.delays.iter().enumerate() {
            vals[*pos] = state[k].clone();
        }
        for &pos in order {
            if self.kernels[pos] == Kernel::Source {
                continue;
            }
            let args: Vec<&BitPattern> = self.args[pos].iter().map(|&a| &vals[a]).collect();
            vals[pos] = self.kernels[pos].apply(&args);
        }
        for (k, (pos, _)) in self.delays.iter().enumerate() {
            state[k] = vals[self.args[*pos][0]].clone();
        }
        vals
    }
}
