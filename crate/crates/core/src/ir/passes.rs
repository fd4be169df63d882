// SPDX-License-Identifier: Apache-2.0

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

use rand::Rng;
use thiserror::Error;

use super::{DataflowGraph, NodeId, OpKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("combinational cycle among nodes {nodes:?}")]
pub struct CycleError {
    pub nodes: Vec<NodeId>,
}

/// Dependency lists over combinational edges: edges into Delay nodes are
/// dropped, as are edges naming missing nodes.
fn deps(graph: &DataflowGraph) -> (Vec<usize>, Vec<Vec<usize>>) {
    let index = graph.index();
    let n = graph.nodes.len();
    let mut indeg = vec![0; n];
    let mut succ = vec![Vec::new(); n];
    for (ci, node) in graph.nodes.iter().enumerate() {
        if node.op.is_delay() {
            continue;
        }
        for e in &node.inputs {
            if let Some(&pi) = index.get(&e.node) {
                succ[pi].push(ci);
                indeg[ci] += 1;
            }
        }
    }
    (indeg, succ)
}

/// Kahn's algorithm with the smallest ready id first. Nodes on or behind a
/// combinational cycle are left out.
pub(crate) fn partial_order(graph: &DataflowGraph) -> Vec<NodeId> {
    let (mut indeg, succ) = deps(graph);
    let mut ready: BinaryHeap<Reverse<(NodeId, usize)>> = indeg
        .iter()
        .enumerate()
        .filter(|(_, d)| **d == 0)
        .map(|(i, _)| Reverse((graph.nodes[i].id, i)))
        .collect();
    let mut order = Vec::with_capacity(graph.nodes.len());
    while let Some(Reverse((id, i))) = ready.pop() {
        order.push(id);
        for &s in &succ[i] {
            indeg[s] -= 1;
            if indeg[s] == 0 {
                ready.push(Reverse((graph.nodes[s].id, s)));
            }
        }
    }
    order
}

fn leftover(graph: &DataflowGraph, order: &[NodeId]) -> CycleError {
    let done: BTreeSet<NodeId> = order.iter().copied().collect();
    CycleError {
        nodes: graph.ids().filter(|id| !done.contains(id)).collect::<BTreeSet<_>>().into_iter().collect(),
    }
}

/// Deterministic topological order of the combinational dependencies.
pub fn topo_order(graph: &DataflowGraph) -> Result<Vec<NodeId>, CycleError> {
    let order = partial_order(graph);
    if order.len() == graph.nodes.len() {
        Ok(order)
    } else {
        Err(leftover(graph, &order))
    }
}

/// A topological order with ties broken at random.
pub fn topo_order_with<R: Rng + ?Sized>(graph: &DataflowGraph, rng: &mut R) -> Result<Vec<NodeId>, CycleError> {
    let (mut indeg, succ) = deps(graph);
    let mut ready: Vec<usize> = (0..indeg.len()).filter(|&i| indeg[i] == 0).collect();
    let mut order = Vec::with_capacity(graph.nodes.len());
    while !ready.is_empty() {
        let i = ready.swap_remove(rng.gen_range(0..ready.len()));
        order.push(graph.nodes[i].id);
        for &s in &succ[i] {
            indeg[s] -= 1;
            if indeg[s] == 0 {
                ready.push(s);
            }
        }
    }
    if order.len() == graph.nodes.len() {
        Ok(order)
    } else {
        Err(leftover(graph, &order))
    }
}

/// Removes nodes that cannot influence any output port. Input ports are
/// always kept so the module interface does not change.
pub fn dead_node_elim(graph: &DataflowGraph) -> DataflowGraph {
    let index = graph.index();
    let mut live = vec![false; graph.nodes.len()];
    let mut stack: Vec<usize> = graph
        .nodes
        .iter()
        .enumerate()
        .filter(|(_, n)| matches!(n.op, OpKind::OutputPort { .. }))
        .map(|(i, _)| i)
        .collect();
    while let Some(i) = stack.pop() {
        if live[i] {
            continue;
        }
        live[i] = true;
        for e in &graph.nodes[i].inputs {
            if let Some(&p) = index.get(&e.node) {
                stack.push(p);
            }
        }
    }
    DataflowGraph {
        nodes: graph
            .nodes
            .iter()
            .zip(live)
            .filter(|(n, l)| *l || matches!(n.op, OpKind::InputPort { .. }))
            .map(|(n, _)| n.clone())
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{HWType, Ident, Value};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn input(name: &str) -> OpKind {
        OpKind::InputPort {
            name: Ident::new(name).unwrap(),
            ty: HWType::UInt(4),
        }
    }

    fn output(name: &str) -> OpKind {
        OpKind::OutputPort {
            name: Ident::new(name).unwrap(),
        }
    }

    fn respects_edges(g: &DataflowGraph, order: &[NodeId]) -> bool {
        let pos = |id: NodeId| order.iter().position(|&x| x == id).unwrap();
        g.nodes
            .iter()
            .filter(|n| !n.op.is_delay())
            .all(|n| n.inputs.iter().all(|e| pos(e.node) < pos(n.id)))
    }

    #[test]
    fn orders_respect_edges() {
        let mut g = DataflowGraph::new();
        let a = g.add(input("a"), []);
        let b = g.add(input("b"), []);
        let d = g.add(
            OpKind::Delay {
                ty: HWType::UInt(4),
                init: Value::UInt(0),
            },
            [a],
        );
        let s = g.add(OpKind::Add, [b, d]);
        let x = g.add(OpKind::Xor, [s, a]);
        g.connect(x, d, 0);
        g.add(output("x"), [x]);
        let order = topo_order(&g).unwrap();
        assert!(respects_edges(&g, &order));
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let o = topo_order_with(&g, &mut rng).unwrap();
            assert_eq!(o.len(), g.nodes.len());
            assert!(respects_edges(&g, &o));
        }
    }

    #[test]
    fn cycle_is_reported() {
        let mut g = DataflowGraph::new();
        let a = g.add(input("a"), []);
        let s = g.add(OpKind::Add, [a, a]);
        let t = g.add(OpKind::Not, [s]);
        g.connect(t, s, 1);
        let o = g.add(output("o"), [t]);
        assert_eq!(topo_order(&g), Err(CycleError { nodes: vec![s, t, o] }));
    }

    #[test]
    fn dead_nodes_are_removed() {
        let mut g = DataflowGraph::new();
        let a = g.add(input("a"), []);
        let unused = g.add(input("u"), []);
        let n = g.add(OpKind::Not, [a]);
        let dead = g.add(OpKind::Add, [a, n]);
        g.add(output("o"), [n]);
        let live = dead_node_elim(&g);
        assert!(live.node(dead).is_none());
        assert!(live.node(unused).is_some());
        assert_eq!(live.nodes.len(), 4);
        assert_eq!(dead_node_elim(&live), live);
    }
}
