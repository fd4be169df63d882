// SPDX-License-Identifier: Apache-2.0

//! Automatic pipelining.
//!
//! A dataflow graph is scheduled ASAP into stages under a latency table,
//! then realized as a synchronous circuit: registers on every edge for each
//! stage boundary it crosses, a valid bit per stage and a global stall.
//! The result accepts one token per cycle when unstalled and emits the same
//! token streams as the interpreter.

mod netlist;
mod schedule;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ir::json::{graph_from_json, graph_to_json, GraphJson};
use crate::ir::{dead_node_elim, validate, Body, Diagnostic, Module, NodeId, Port};
use crate::types::Ident;

pub use netlist::{PipelinedNetlist, RegId, Register, Signal};
pub use schedule::{schedule, LatencyTable, LatencyTableError, Schedule, ScheduleError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PipelineError {
    #[error("module `{0}` has no dataflow graph to pipeline")]
    NoGraph(Ident),
    #[error("module does not validate: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Diagnostic>),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error("schedule is not legal for this graph: {0}")]
    IllegalSchedule(String),
}

/// Checks every stage constraint of `schedule` against the module's live
/// graph.
pub fn check_schedule(module: &Module, schedule: &Schedule, table: &LatencyTable) -> Result<(), String> {
    let graph = dead_node_elim(module.behavior().ok_or("module has no dataflow graph")?);
    for n in &graph.nodes {
        let to = *schedule.stages.get(&n.id).ok_or_else(|| format!("node {} is not scheduled", n.id))?;
        if matches!(n.op, crate::ir::OpKind::OutputPort { .. }) && to != schedule.latency {
            return Err(format!("output node {} is at stage {to}, not {}", n.id, schedule.latency));
        }
        for e in &n.inputs {
            let from = *schedule.stages.get(&e.node).ok_or_else(|| format!("node {} is not scheduled", e.node))?;
            let p = graph.node(e.node).unwrap();
            let w = schedule::edge_weight(&p.op, &n.op, table);
            if i64::from(to) - i64::from(from) < w {
                return Err(format!(
                    "edge {} -> {} spans {} stages, needs {w}",
                    e.node,
                    n.id,
                    i64::from(to) - i64::from(from)
                ));
            }
        }
    }
    Ok(())
}

/// Realizes `module` under a schedule produced by [`schedule`] with `table`.
pub fn pipeline(module: &Module, schedule: &Schedule, table: &LatencyTable) -> Result<PipelinedNetlist, PipelineError> {
    let graph = module.behavior().ok_or_else(|| PipelineError::NoGraph(module.name.clone()))?;
    validate(module).map_err(PipelineError::Invalid)?;
    check_schedule(module, schedule, table).map_err(PipelineError::IllegalSchedule)?;
    let live = dead_node_elim(graph);
    let kept: Schedule = Schedule {
        stages: live.ids().map(|id| (id, schedule.stage(id))).collect(),
        latency: schedule.latency,
    };
    let m = Module {
        name: module.name.clone(),
        ports: module.ports.clone(),
        body: Body::Dataflow(live),
    };
    Ok(netlist::build(m, kept))
}

/// Validates, drops dead nodes, schedules and pipelines in one go.
pub fn compile(module: &Module, table: &LatencyTable) -> Result<PipelinedNetlist, PipelineError> {
    let graph = module.behavior().ok_or_else(|| PipelineError::NoGraph(module.name.clone()))?;
    validate(module).map_err(PipelineError::Invalid)?;
    let live = dead_node_elim(graph);
    let sched = schedule::schedule_unchecked(&live, table)?;
    let m = Module {
        name: module.name.clone(),
        ports: module.ports.clone(),
        body: Body::Dataflow(live),
    };
    Ok(netlist::build(m, sched))
}

pub const NETLIST_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetlistJson {
    llpm_netlist: u32,
    name: Ident,
    ports: Vec<Port>,
    graph: GraphJson,
    latency: u32,
    stages: BTreeMap<NodeId, u32>,
    order: Vec<NodeId>,
    registers: Vec<Register>,
    operands: BTreeMap<NodeId, Vec<Signal>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("netlist: {0}")]
pub struct NetlistFormatError(pub String);

impl PipelinedNetlist {
    pub fn to_json(&self) -> serde_json::Value {
        let j = NetlistJson {
            llpm_netlist: NETLIST_FORMAT_VERSION,
            name: self.module.name.clone(),
            ports: self.module.ports.clone(),
            graph: graph_to_json(self.graph()),
            latency: self.schedule.latency,
            stages: self.schedule.stages.clone(),
            order: self.order.clone(),
            registers: self.registers.clone(),
            operands: self.operands.clone(),
        };
        serde_json::to_value(j).expect("netlist serializes")
    }

    pub fn from_json(text: &str) -> Result<PipelinedNetlist, NetlistFormatError> {
        let version = serde_json::from_str::<serde_json::Value>(text)
            .map_err(|e| NetlistFormatError(e.to_string()))?
            .get("llpm_netlist")
            .and_then(|v| v.as_u64());
        match version {
            Some(v) if v == u64::from(NETLIST_FORMAT_VERSION) => {}
            Some(v) => return Err(NetlistFormatError(format!("unsupported llpm_netlist version {v}"))),
            None => return Err(NetlistFormatError("missing `llpm_netlist` version field".into())),
        }
        let de = &mut serde_json::Deserializer::from_str(text);
        let j: NetlistJson = serde_path_to_error::deserialize(de).map_err(|e| NetlistFormatError(e.to_string()))?;
        let graph = graph_from_json(&j.graph, &j.ports).map_err(|e| NetlistFormatError(format!("graph.{e}")))?;
        let n = PipelinedNetlist {
            module: Module {
                name: j.name,
                ports: j.ports,
                body: Body::Dataflow(graph),
            },
            schedule: Schedule {
                stages: j.stages,
                latency: j.latency,
            },
            order: j.order,
            registers: j.registers,
            operands: j.operands,
        };
        n.check().map_err(NetlistFormatError)?;
        Ok(n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{DataflowGraph, Direction, OpKind};
    use crate::types::{HWType, Value};

    fn id(s: &str) -> Ident {
        Ident::new(s).unwrap()
    }

    fn inp(name: &str, w: u32) -> OpKind {
        OpKind::InputPort {
            name: id(name),
            ty: HWType::UInt(w),
        }
    }

    fn out(name: &str) -> OpKind {
        OpKind::OutputPort { name: id(name) }
    }

    fn ports(ins: &[&str], outs: &[&str], w: u32) -> Vec<Port> {
        ins.iter()
            .map(|n| Port::new(n, Direction::In, HWType::UInt(w)))
            .chain(outs.iter().map(|n| Port::new(n, Direction::Out, HWType::UInt(w))))
            .collect()
    }

    #[test]
    fn adder_schedule() {
        let mut g = DataflowGraph::new();
        let a = g.add(inp("a", 8), []);
        let b = g.add(inp("b", 8), []);
        let s = g.add(OpKind::Add, [a, b]);
        let o = g.add(out("s"), [s]);
        let m = Module::dataflow("add8", ports(&["a", "b"], &["s"], 8), g);
        let n = compile(&m, &LatencyTable::default()).unwrap();
        assert_eq!(n.latency(), 1);
        assert_eq!(n.schedule.stage(a), 0);
        assert_eq!(n.schedule.stage(s), 0);
        assert_eq!(n.schedule.stage(o), 1);
        assert_eq!(n.registers.len(), 1);
        assert_eq!(n.operands[&o], vec![Signal::Reg(0)]);
    }

    #[test]
    fn add_then_mul_balances_the_fresh_input() {
        let mut g = DataflowGraph::new();
        let a = g.add(inp("a", 8), []);
        let b = g.add(inp("b", 8), []);
        let c = g.add(inp("c", 8), []);
        let s = g.add(OpKind::Add, [a, b]);
        let p = g.add(OpKind::Mul, [s, c]);
        let o = g.add(out("p"), [p]);
        let m = Module::dataflow("am", ports(&["a", "b", "c"], &["p"], 8), g);
        let n = compile(&m, &LatencyTable::default()).unwrap();
        assert_eq!(n.schedule.stage(p), 1);
        assert_eq!(n.schedule.stage(o), 3);
        assert_eq!(n.latency(), 3);
        // c -> mul crosses one boundary, add -> mul one, mul -> out two
        assert_eq!(n.registers.len(), 4);
        assert!(matches!(n.operands[&p][1], Signal::Reg(_)));
    }

    #[test]
    fn passthrough_has_no_latency() {
        let mut g = DataflowGraph::new();
        let a = g.add(inp("a", 3), []);
        g.add(out("b"), [a]);
        let m = Module::dataflow("wire", ports(&["a"], &["b"], 3), g);
        let n = compile(&m, &LatencyTable::default()).unwrap();
        assert_eq!(n.latency(), 0);
        assert!(n.registers.is_empty());
    }

    fn feedback(op: OpKind) -> Module {
        let mut g = DataflowGraph::new();
        let a = g.add(inp("x", 8), []);
        let d = g.add(
            OpKind::Delay {
                ty: HWType::UInt(8),
                init: Value::UInt(0),
            },
            [a],
        );
        let s = g.add(op, [a, d]);
        g.connect(s, d, 0);
        g.add(out("y"), [s]);
        Module::dataflow("fb", ports(&["x"], &["y"], 8), g)
    }

    #[test]
    fn single_cycle_feedback_fits_but_multiplier_does_not() {
        let n = compile(&feedback(OpKind::Add), &LatencyTable::default()).unwrap();
        assert_eq!(n.latency(), 1);
        let err = compile(&feedback(OpKind::Mul), &LatencyTable::default()).unwrap_err();
        assert!(matches!(err, PipelineError::Schedule(ScheduleError::Recurrence { ref nodes }) if nodes == &[1, 2]));
    }

    #[test]
    fn removing_a_register_rewires_readers() {
        let mut g = DataflowGraph::new();
        let a = g.add(inp("a", 8), []);
        let n1 = g.add(OpKind::Not, [a]);
        let n2 = g.add(OpKind::Not, [n1]);
        let o = g.add(out("b"), [n2]);
        let m = Module::dataflow("nn", ports(&["a"], &["b"], 8), g);
        let mut n = compile(&m, &LatencyTable::default()).unwrap();
        assert_eq!(n.registers.len(), 2);
        assert!(n.remove_register(0));
        assert_eq!(n.operands[&n2], vec![Signal::Node(n1)]);
        assert!(n.remove_register(1));
        assert_eq!(n.operands[&o], vec![Signal::Node(n2)]);
        assert!(!n.remove_register(1));
        n.check().unwrap();
    }

    #[test]
    fn json_roundtrip() {
        let n = compile(&feedback(OpKind::Add), &LatencyTable::default()).unwrap();
        let text = serde_json::to_string_pretty(&n.to_json()).unwrap();
        assert_eq!(PipelinedNetlist::from_json(&text).unwrap(), n);
        let bumped = text.replace("\"llpm_netlist\": 1", "\"llpm_netlist\": 2");
        assert!(PipelinedNetlist::from_json(&bumped).unwrap_err().0.contains("version 2"));
    }

    #[test]
    fn latency_table_overrides() {
        let t: LatencyTable = serde_json::from_str(r#"{"mul": 3, "add": 0}"#).unwrap();
        assert_eq!(t.get(crate::ir::OpCode::Mul), 3);
        assert_eq!(t.get(crate::ir::OpCode::Add), 0);
        assert_eq!(t.get(crate::ir::OpCode::Sub), 1);
        assert!(serde_json::from_str::<LatencyTable>(r#"{"delay": 2}"#).is_err());
        assert!(serde_json::from_str::<LatencyTable>(r#"{"fma": 2}"#).is_err());
    }
}
