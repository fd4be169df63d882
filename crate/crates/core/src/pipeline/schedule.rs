// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::ir::{validate_graph, DataflowGraph, Diagnostic, NodeId, OpCode, OpKind, Port};

/// Cycles of latency per op kind.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatencyTable {
    table: BTreeMap<OpCode, u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LatencyTableError {
    #[error("unknown op `{0}` in latency table")]
    UnknownOp(String),
    #[error("delay latency is fixed at 1, got {0}")]
    DelayLatency(u32),
}

impl Default for LatencyTable {
    fn default() -> Self {
        let table = OpCode::ALL
            .into_iter()
            .map(|op| {
                let lat = match op {
                    OpCode::Delay => 1,
                    OpCode::Add
                    | OpCode::Sub
                    | OpCode::Eq
                    | OpCode::Lt
                    | OpCode::And
                    | OpCode::Or
                    | OpCode::Xor
                    | OpCode::Not
                    | OpCode::Mux
                    | OpCode::ArrayIndex => 1,
                    OpCode::Mul => 2,
                    _ => 0,
                };
                (op, lat)
            })
            .collect();
        LatencyTable { table }
    }
}

impl LatencyTable {
    pub fn get(&self, op: OpCode) -> u32 {
        self.table[&op]
    }

    pub fn set(&mut self, op: OpCode, latency: u32) -> Result<(), LatencyTableError> {
        if op == OpCode::Delay && latency != 1 {
            return Err(LatencyTableError::DelayLatency(latency));
        }
        self.table.insert(op, latency);
        Ok(())
    }

    /// The defaults with the given mnemonic-keyed overrides applied.
    pub fn with_overrides<'a>(
        overrides: impl IntoIterator<Item = (&'a str, u32)>,
    ) -> Result<LatencyTable, LatencyTableError> {
        let mut t = LatencyTable::default();
        for (name, lat) in overrides {
            let op = OpCode::from_mnemonic(name).ok_or_else(|| LatencyTableError::UnknownOp(name.to_string()))?;
            t.set(op, lat)?;
        }
        Ok(t)
    }

    pub fn iter(&self) -> impl Iterator<Item = (OpCode, u32)> + '_ {
        self.table.iter().map(|(k, v)| (*k, *v))
    }
}

impl Serialize for LatencyTable {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_map(self.table.iter().map(|(k, v)| (k.mnemonic(), v)))
    }
}

impl<'de> Deserialize<'de> for LatencyTable {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = BTreeMap::<String, u32>::deserialize(d)?;
        LatencyTable::with_overrides(raw.iter().map(|(k, v)| (k.as_str(), *v))).map_err(serde::de::Error::custom)
    }
}

/// Start stage of every node and the total latency `L`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub stages: BTreeMap<NodeId, u32>,
    pub latency: u32,
}

impl Schedule {
    pub fn stage(&self, id: NodeId) -> u32 {
        self.stages[&id]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScheduleError {
    #[error("graph does not validate: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Diagnostic>),
    #[error("feedback through nodes {nodes:?} has more latency than its delays absorb; it cannot be pipelined at II=1")]
    Recurrence { nodes: Vec<NodeId> },
}

/// Minimum stage distance along edge `producer -> consumer`.
///
/// A Delay's value is readable in its own stage, so it contributes no
/// latency as a producer. As a consumer its register stands in for one
/// register of the producer's latency.
pub(crate) fn edge_weight(producer: &OpKind, consumer: &OpKind, table: &LatencyTable) -> i64 {
    let lat = if producer.is_delay() {
        0
    } else {
        i64::from(table.get(producer.code()))
    };
    if consumer.is_delay() {
        lat - lat.min(1)
    } else {
        lat
    }
}

/// ASAP schedule by longest path over the edge weights. Output ports are
/// all placed at the largest output stage so every output leaves together.
pub fn schedule(graph: &DataflowGraph, ports: &[Port], table: &LatencyTable) -> Result<Schedule, ScheduleError> {
    validate_graph(graph, ports).map_err(ScheduleError::Invalid)?;
    schedule_unchecked(graph, table)
}

pub(crate) fn schedule_unchecked(graph: &DataflowGraph, table: &LatencyTable) -> Result<Schedule, ScheduleError> {
    let index = graph.index();
    let mut edges = Vec::new();
    for (ci, n) in graph.nodes.iter().enumerate() {
        for e in &n.inputs {
            let pi = index[&e.node];
            edges.push((pi, ci, edge_weight(&graph.nodes[pi].op, &n.op, table)));
        }
    }
    let n = graph.nodes.len();
    let mut stage = vec![0i64; n];
    let mut rounds = 0;
    loop {
        let mut changed = false;
        for &(p, c, w) in &edges {
            if stage[p] + w > stage[c] {
                stage[c] = stage[p] + w;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        rounds += 1;
        if rounds > n {
            return Err(ScheduleError::Recurrence {
                nodes: positive_cycle(graph, &edges, n),
            });
        }
    }
    let latency = graph
        .nodes
        .iter()
        .zip(&stage)
        .filter(|(n, _)| matches!(n.op, OpKind::OutputPort { .. }))
        .map(|(_, s)| *s)
        .max()
        .unwrap_or(0);
    let stages = graph
        .nodes
        .iter()
        .zip(&stage)
        .map(|(n, &s)| {
            let s = if matches!(n.op, OpKind::OutputPort { .. }) { latency } else { s };
            (n.id, s as u32)
        })
        .collect();
    Ok(Schedule {
        stages,
        latency: latency as u32,
    })
}

/// Nodes on some positive-weight cycle, found by relaxing once more and
/// walking predecessor links back into the cycle.
fn positive_cycle(graph: &DataflowGraph, edges: &[(usize, usize, i64)], n: usize) -> Vec<NodeId> {
    let mut dist = vec![0i64; n];
    let mut pred = vec![usize::MAX; n];
    let mut last = usize::MAX;
    for _ in 0..=n {
        last = usize::MAX;
        for &(p, c, w) in edges {
            if dist[p] + w > dist[c] {
                dist[c] = dist[p] + w;
                pred[c] = p;
                last = c;
            }
        }
    }
    if last == usize::MAX {
        return Vec::new();
    }
    let mut v = last;
    for _ in 0..n {
        v = pred[v];
    }
    let mut cycle = vec![graph.nodes[v].id];
    let mut u = pred[v];
    while u != v {
        cycle.push(graph.nodes[u].id);
        u = pred[u];
    }
    cycle.sort_unstable();
    cycle
}
