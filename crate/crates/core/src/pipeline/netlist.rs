// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::Schedule;
use crate::ir::{topo_order, validate, Body, DataflowGraph, Module, NodeId};
use crate::types::HWType;

pub type RegId = u32;

/// What drives a node operand: a node's combinational output or a pipeline
/// register.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Signal {
    Node(NodeId),
    Reg(RegId),
}

impl fmt::Display for Signal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Signal::Node(id) => write!(f, "n{id}"),
            Signal::Reg(id) => write!(f, "r{id}"),
        }
    }
}

impl FromStr for Signal {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let bad = || format!("bad signal reference {s:?}");
        let (kind, num) = s.split_at_checked(1).ok_or_else(bad)?;
        let num: u32 = num.parse().map_err(|_| bad())?;
        match kind {
            "n" => Ok(Signal::Node(num)),
            "r" => Ok(Signal::Reg(num)),
            _ => Err(bad()),
        }
    }
}

impl Serialize for Signal {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Signal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// A data register between two stages. It is enabled by ¬stall.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Register {
    pub id: RegId,
    pub source: Signal,
    #[serde(rename = "type")]
    pub ty: HWType,
    /// Stage whose token the register output belongs to.
    pub stage: u32,
}

/// A dataflow module realized as a stage-scheduled synchronous circuit with
/// a ready/valid wrapper.
///
/// The control is implicit and fixed: a valid bit per stage, a global stall
/// when the last stage holds a token some output has not yet taken, and
/// per-output `sent` flags so outputs may complete in different cycles.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PipelinedNetlist {
    /// The module with its live graph only.
    pub module: Module,
    pub schedule: Schedule,
    /// Combinational evaluation order.
    pub order: Vec<NodeId>,
    pub registers: Vec<Register>,
    /// Driver of every node input, in input order.
    pub operands: BTreeMap<NodeId, Vec<Signal>>,
}

impl PipelinedNetlist {
    pub fn latency(&self) -> u32 {
        self.schedule.latency
    }

    pub fn graph(&self) -> &DataflowGraph {
        match &self.module.body {
            Body::Dataflow(g) => g,
            Body::ExternRtl(_) => unreachable!("netlists always hold dataflow bodies"),
        }
    }

    pub fn register(&self, id: RegId) -> Option<&Register> {
        self.registers.iter().find(|r| r.id == id)
    }

    /// Deletes one register, wiring its source straight to its readers.
    /// Meant for mutation testing; the result is no longer a faithful
    /// realization of the module.
    pub fn remove_register(&mut self, id: RegId) -> bool {
        let Some(pos) = self.registers.iter().position(|r| r.id == id) else {
            return false;
        };
        let reg = self.registers.remove(pos);
        let old = Signal::Reg(id);
        for r in &mut self.registers {
            if r.source == old {
                r.source = reg.source;
            }
        }
        for ops in self.operands.values_mut() {
            for s in ops.iter_mut() {
                if *s == old {
                    *s = reg.source;
                }
            }
        }
        true
    }

    /// Structural consistency: operand lists match node inputs, every
    /// referenced node and register exists, and register chains are
    /// acyclic.
    pub fn check(&self) -> Result<(), String> {
        validate(&self.module).map_err(|d| {
            d.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; ")
        })?;
        let graph = self.graph();
        let regs: BTreeMap<RegId, &Register> = self.registers.iter().map(|r| (r.id, r)).collect();
        if regs.len() != self.registers.len() {
            return Err("duplicate register id".into());
        }
        let exists = |s: &Signal| match s {
            Signal::Node(n) => graph.node(*n).is_some(),
            Signal::Reg(r) => regs.contains_key(r),
        };
        for r in &self.registers {
            if !exists(&r.source) {
                return Err(format!("register r{} reads missing {}", r.id, r.source));
            }
            let mut seen = 0;
            let mut s = r.source;
            while let Signal::Reg(x) = s {
                seen += 1;
                if seen > self.registers.len() {
                    return Err(format!("register chain through r{} loops", r.id));
                }
                s = regs[&x].source;
            }
        }
        for n in &graph.nodes {
            let ops = self
                .operands
                .get(&n.id)
                .ok_or_else(|| format!("no operands recorded for node {}", n.id))?;
            if ops.len() != n.inputs.len() {
                return Err(format!("node {} has {} operands for {} inputs", n.id, ops.len(), n.inputs.len()));
            }
            for s in ops {
                if !exists(s) {
                    return Err(format!("node {} reads missing {s}", n.id));
                }
            }
            if !self.schedule.stages.contains_key(&n.id) {
                return Err(format!("node {} is not scheduled", n.id));
            }
        }
        let mut order = self.order.clone();
        order.sort_unstable();
        let mut ids: Vec<NodeId> = graph.ids().collect();
        ids.sort_unstable();
        if order != ids {
            return Err("evaluation order is not a permutation of the nodes".into());
        }
        Ok(())
    }
}

/// Builds the netlist for `module` under `schedule`: one register per stage
/// boundary crossed by each edge.
pub(crate) fn build(module: Module, schedule: Schedule) -> PipelinedNetlist {
    let graph = match &module.body {
        Body::Dataflow(g) => g,
        Body::ExternRtl(_) => unreachable!("caller passes a dataflow module"),
    };
    let order = topo_order(graph).expect("validated graph");
    let types = crate::ir::infer_graph_types(graph).expect("validated graph");
    let mut registers = Vec::new();
    let mut operands = BTreeMap::new();
    for n in &graph.nodes {
        let to = schedule.stage(n.id);
        let mut ops = Vec::with_capacity(n.inputs.len());
        for e in &n.inputs {
            let from = schedule.stage(e.node);
            let mut sig = Signal::Node(e.node);
            for s in from..to {
                let id = registers.len() as RegId;
                registers.push(Register {
                    id,
                    source: sig,
                    ty: types[&e.node].clone(),
                    stage: s + 1,
                });
                sig = Signal::Reg(id);
            }
            ops.push(sig);
        }
        operands.insert(n.id, ops);
    }
    PipelinedNetlist {
        module,
        schedule,
        order,
        registers,
        operands,
    }
}
