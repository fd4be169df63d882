// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::{check_attributes, infer_type, Body, DataflowGraph, Direction, Module, NodeId, OpKind, Port};
use crate::types::HWType;

/// A validation finding. `node` is set when the problem is local to a node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub node: Option<NodeId>,
    pub message: String,
}

impl Diagnostic {
    fn at(node: NodeId, message: impl Into<String>) -> Self {
        Diagnostic {
            node: Some(node),
            message: message.into(),
        }
    }

    fn global(message: impl Into<String>) -> Self {
        Diagnostic {
            node: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node {
            Some(id) => write!(f, "node {id}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

/// Checks every module invariant. Never panics on malformed input; all
/// problems come back as diagnostics.
pub fn validate(module: &Module) -> Result<(), Vec<Diagnostic>> {
    let mut diags = Vec::new();
    if module.ports.is_empty() {
        diags.push(Diagnostic::global("module has no ports"));
    }
    for (i, p) in module.ports.iter().enumerate() {
        if module.ports[..i].iter().any(|q| q.name == p.name) {
            diags.push(Diagnostic::global(format!("duplicate port `{}`", p.name)));
        }
        if let Err(e) = p.ty.validate() {
            diags.push(Diagnostic::global(format!("port `{}`: {e}", p.name)));
        }
    }
    match &module.body {
        Body::Dataflow(g) => {
            if let Err(d) = validate_graph(g, &module.ports) {
                diags.extend(d);
            }
        }
        Body::ExternRtl(x) => {
            if x.top.is_empty() {
                diags.push(Diagnostic::global("extern body has no top-level RTL name"));
            }
            if x.sources.is_empty() {
                diags.push(Diagnostic::global("extern body lists no RTL sources"));
            }
            for p in &module.ports {
                match x.port_map.get(&p.name) {
                    None => diags.push(Diagnostic::global(format!("extern port map does not cover `{}`", p.name))),
                    Some(sig) => {
                        let zero = p.ty.bit_width() == 0;
                        if zero && sig.data.is_some() {
                            diags.push(Diagnostic::global(format!("zero-width port `{}` maps a data signal", p.name)));
                        }
                        if !zero && sig.data.is_none() {
                            diags.push(Diagnostic::global(format!("port `{}` maps no data signal", p.name)));
                        }
                    }
                }
            }
            for name in x.port_map.keys() {
                if module.port(name).is_none() {
                    diags.push(Diagnostic::global(format!("extern port map names unknown port `{name}`")));
                }
            }
            if let Some(model) = &x.model {
                if let Err(d) = validate_graph(model, &module.ports) {
                    diags.extend(d.into_iter().map(|mut d| {
                        d.message = format!("behavioral model: {}", d.message);
                        d
                    }));
                }
            }
        }
    }
    if diags.is_empty() {
        Ok(())
    } else {
        Err(diags)
    }
}

/// Validates a graph against a port list and returns the type of every node.
pub fn validate_graph(graph: &DataflowGraph, ports: &[Port]) -> Result<BTreeMap<NodeId, HWType>, Vec<Diagnostic>> {
    let mut diags = structural(graph);
    diags.extend(boundary(graph, ports));
    let structurally_sound = diags.is_empty();
    if structurally_sound {
        diags.extend(combinational_cycles(graph));
    }
    let mut types = BTreeMap::new();
    if structurally_sound {
        let (t, d) = typecheck(graph);
        types = t;
        diags.extend(d);
        for n in &graph.nodes {
            if let OpKind::OutputPort { name } = &n.op {
                if let (Some(p), Some(t)) = (ports.iter().find(|p| &p.name == name), types.get(&n.id)) {
                    if &p.ty != t {
                        diags.push(Diagnostic::at(
                            n.id,
                            format!("output `{name}` is typed {} but driven by {t}", p.ty),
                        ));
                    }
                }
            }
        }
    }
    if diags.is_empty() {
        Ok(types)
    } else {
        Err(diags)
    }
}

/// Types every node of a graph without consulting a port list.
pub fn infer_graph_types(graph: &DataflowGraph) -> Result<BTreeMap<NodeId, HWType>, Vec<Diagnostic>> {
    let mut diags = structural(graph);
    if diags.is_empty() {
        diags.extend(combinational_cycles(graph));
    }
    if !diags.is_empty() {
        return Err(diags);
    }
    let (types, diags) = typecheck(graph);
    if diags.is_empty() {
        Ok(types)
    } else {
        Err(diags)
    }
}

fn structural(graph: &DataflowGraph) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let mut seen = BTreeSet::new();
    for n in &graph.nodes {
        if !seen.insert(n.id) {
            diags.push(Diagnostic::at(n.id, "duplicate node id"));
        }
    }
    let index = graph.index();
    for n in &graph.nodes {
        if let Err(e) = check_attributes(&n.op) {
            diags.push(Diagnostic::at(n.id, e.to_string()));
            continue;
        }
        if let Some(arity) = n.op.arity() {
            if arity != n.inputs.len() {
                diags.push(Diagnostic::at(
                    n.id,
                    format!("{} expects {arity} inputs, found {}", n.op.code(), n.inputs.len()),
                ));
            }
        }
        for (i, e) in n.inputs.iter().enumerate() {
            match index.get(&e.node) {
                None => diags.push(Diagnostic::at(n.id, format!("input {i} driven by missing node {}", e.node))),
                Some(&p) => {
                    let outputs = graph.nodes[p].op.num_outputs();
                    if e.output >= outputs {
                        diags.push(Diagnostic::at(
                            n.id,
                            format!("input {i} reads output {} of node {}, which has {outputs}", e.output, e.node),
                        ));
                    }
                }
            }
        }
    }
    diags
}

fn boundary(graph: &DataflowGraph, ports: &[Port]) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let mut bound: BTreeMap<&str, Vec<NodeId>> = BTreeMap::new();
    for n in &graph.nodes {
        let (name, dir) = match &n.op {
            OpKind::InputPort { name, .. } => (name, Direction::In),
            OpKind::OutputPort { name } => (name, Direction::Out),
            _ => continue,
        };
        bound.entry(name.as_str()).or_default().push(n.id);
        match ports.iter().find(|p| &p.name == name) {
            None => diags.push(Diagnostic::at(n.id, format!("boundary node for unknown port `{name}`"))),
            Some(p) if p.direction != dir => diags.push(Diagnostic::at(
                n.id,
                format!("boundary node direction does not match port `{name}`"),
            )),
            Some(p) => {
                if let OpKind::InputPort { ty, .. } = &n.op {
                    if *ty != p.ty {
                        diags.push(Diagnostic::at(
                            n.id,
                            format!("input `{name}` node is typed {ty} but the port is {}", p.ty),
                        ));
                    }
                }
            }
        }
    }
    for p in ports {
        match bound.get(p.name.as_str()).map(Vec::len).unwrap_or(0) {
            0 => diags.push(Diagnostic::global(format!("port `{}` has no boundary node", p.name))),
            1 => {}
            _ => diags.push(Diagnostic::global(format!("port `{}` has several boundary nodes", p.name))),
        }
    }
    diags
}

/// Strongly connected components of the graph with edges into Delay nodes
/// removed. Any nontrivial component is a combinational cycle.
fn combinational_cycles(graph: &DataflowGraph) -> Vec<Diagnostic> {
    let index = graph.index();
    let n = graph.nodes.len();
    // successors over non-Delay edges
    let mut succ = vec![Vec::new(); n];
    for (ci, node) in graph.nodes.iter().enumerate() {
        if node.op.is_delay() {
            continue;
        }
        for e in &node.inputs {
            succ[index[&e.node]].push(ci);
        }
    }
    let sccs = tarjan(&succ);
    let mut diags = Vec::new();
    for comp in sccs {
        let cyclic = comp.len() > 1 || succ[comp[0]].contains(&comp[0]);
        if cyclic {
            let mut ids: Vec<NodeId> = comp.iter().map(|&i| graph.nodes[i].id).collect();
            ids.sort_unstable();
            let list = ids.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(", ");
            diags.push(Diagnostic::at(ids[0], format!("combinational cycle through nodes {list}")));
        }
    }
    diags
}

fn tarjan(succ: &[Vec<usize>]) -> Vec<Vec<usize>> {
    struct State<'a> {
        succ: &'a [Vec<usize>],
        index: Vec<Option<usize>>,
        low: Vec<usize>,
        on_stack: Vec<bool>,
        stack: Vec<usize>,
        next: usize,
        out: Vec<Vec<usize>>,
    }
    fn visit(s: &mut State<'_>, v: usize) {
        s.index[v] = Some(s.next);
        s.low[v] = s.next;
        s.next += 1;
        s.stack.push(v);
        s.on_stack[v] = true;
        for i in 0..s.succ[v].len() {
            let w = s.succ[v][i];
            match s.index[w] {
                None => {
                    visit(s, w);
                    s.low[v] = s.low[v].min(s.low[w]);
                }
                Some(iw) if s.on_stack[w] => s.low[v] = s.low[v].min(iw),
                _ => {}
            }
        }
        if Some(s.low[v]) == s.index[v] {
            let mut comp = Vec::new();
            loop {
                let w = s.stack.pop().unwrap();
                s.on_stack[w] = false;
                comp.push(w);
                if w == v {
                    break;
                }
            }
            s.out.push(comp);
        }
    }
    let n = succ.len();
    let mut s = State {
        succ,
        index: vec![None; n],
        low: vec![0; n],
        on_stack: vec![false; n],
        stack: Vec::new(),
        next: 0,
        out: Vec::new(),
    };
    for v in 0..n {
        if s.index[v].is_none() {
            visit(&mut s, v);
        }
    }
    s.out
}

/// Infers node types in dependency order. Delay nodes take their declared
/// type up front so feedback loops can be typed; their inputs are checked at
/// the end. Nodes downstream of an error are skipped rather than reported.
fn typecheck(graph: &DataflowGraph) -> (BTreeMap<NodeId, HWType>, Vec<Diagnostic>) {
    let mut types: BTreeMap<NodeId, HWType> = BTreeMap::new();
    let mut diags = Vec::new();
    let order = super::passes::partial_order(graph);
    for &id in &order {
        let node = graph.node(id).unwrap();
        if let OpKind::Delay { ty, .. } = &node.op {
            types.insert(id, ty.clone());
            continue;
        }
        let inputs: Option<Vec<HWType>> = node.inputs.iter().map(|e| types.get(&e.node).cloned()).collect();
        let Some(inputs) = inputs else { continue };
        match infer_type(&node.op, &inputs) {
            Ok(t) => {
                types.insert(id, t);
            }
            Err(e) => diags.push(Diagnostic::at(id, e.to_string())),
        }
    }
    for node in &graph.nodes {
        if let OpKind::Delay { .. } = &node.op {
            if let Some(t) = node.inputs.first().and_then(|e| types.get(&e.node)) {
                if let Err(e) = infer_type(&node.op, std::slice::from_ref(t)) {
                    diags.push(Diagnostic::at(node.id, e.to_string()));
                }
            }
        }
    }
    (types, diags)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{ExternRtl, PortSignals};
    use crate::types::{parse_type, Ident, Value};

    fn u8t() -> HWType {
        HWType::UInt(8)
    }

    fn input(name: &str, ty: HWType) -> OpKind {
        OpKind::InputPort {
            name: Ident::new(name).unwrap(),
            ty,
        }
    }

    fn output(name: &str) -> OpKind {
        OpKind::OutputPort {
            name: Ident::new(name).unwrap(),
        }
    }

    fn adder() -> Module {
        let mut g = DataflowGraph::new();
        let a = g.add(input("a", u8t()), []);
        let b = g.add(input("b", u8t()), []);
        let s = g.add(OpKind::Add, [a, b]);
        g.add(output("s"), [s]);
        Module::dataflow(
            "add8",
            vec![
                Port::new("a", Direction::In, u8t()),
                Port::new("b", Direction::In, u8t()),
                Port::new("s", Direction::Out, u8t()),
            ],
            g,
        )
    }

    #[test]
    fn adder_is_clean() {
        assert_eq!(validate(&adder()), Ok(()));
    }

    #[test]
    fn self_feeding_add_is_a_combinational_cycle() {
        let mut g = DataflowGraph::new();
        let a = g.add(input("a", u8t()), []);
        let s = g.add(OpKind::Add, [a, a]);
        g.connect(s, s, 1);
        g.add(output("s"), [s]);
        let m = Module::dataflow(
            "loop",
            vec![Port::new("a", Direction::In, u8t()), Port::new("s", Direction::Out, u8t())],
            g,
        );
        let diags = validate(&m).unwrap_err();
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].node, Some(s));
        assert!(diags[0].message.contains("combinational cycle"));
    }

    #[test]
    fn feedback_through_delay_is_fine() {
        let mut g = DataflowGraph::new();
        let a = g.add(input("a", u8t()), []);
        let d = g.add(
            OpKind::Delay {
                ty: u8t(),
                init: Value::UInt(0),
            },
            [a],
        );
        let s = g.add(OpKind::Add, [a, d]);
        g.connect(s, d, 0);
        g.add(output("s"), [s]);
        let m = Module::dataflow(
            "acc",
            vec![Port::new("a", Direction::In, u8t()), Port::new("s", Direction::Out, u8t())],
            g,
        );
        assert_eq!(validate(&m), Ok(()));
    }

    #[test]
    fn output_driven_by_narrower_node() {
        let mut g = DataflowGraph::new();
        let a = g.add(input("a", HWType::UInt(4)), []);
        let o = g.add(output("s"), [a]);
        let m = Module::dataflow(
            "narrow",
            vec![Port::new("a", Direction::In, HWType::UInt(4)), Port::new("s", Direction::Out, u8t())],
            g,
        );
        let diags = validate(&m).unwrap_err();
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].node, Some(o));
        assert!(diags[0].message.contains("typed uint<8>"), "{}", diags[0]);
    }

    #[test]
    fn dangling_edges_and_arity() {
        let mut g = DataflowGraph::new();
        let a = g.add(input("a", u8t()), []);
        let s = g.add(OpKind::Add, [a]);
        g.add(output("s"), [99]);
        let m = Module::dataflow(
            "bad",
            vec![Port::new("a", Direction::In, u8t()), Port::new("s", Direction::Out, u8t())],
            g,
        );
        let diags = validate(&m).unwrap_err();
        assert!(diags.iter().any(|d| d.node == Some(s) && d.message.contains("expects 2 inputs")));
        assert!(diags.iter().any(|d| d.message.contains("missing node 99")));
    }

    #[test]
    fn boundary_mismatches() {
        let mut g = DataflowGraph::new();
        let a = g.add(input("a", u8t()), []);
        g.add(output("t"), [a]);
        let m = Module::dataflow(
            "bad",
            vec![Port::new("a", Direction::In, u8t()), Port::new("s", Direction::Out, u8t())],
            g,
        );
        let diags = validate(&m).unwrap_err();
        assert!(diags.iter().any(|d| d.message.contains("unknown port `t`")));
        assert!(diags.iter().any(|d| d.message.contains("port `s` has no boundary node")));
        let empty = Module::dataflow("e", vec![], DataflowGraph::new());
        assert!(validate(&empty).unwrap_err()[0].message.contains("no ports"));
    }

    #[test]
    fn validate_is_idempotent() {
        let m = adder();
        assert_eq!(validate(&m), validate(&m));
    }

    #[test]
    fn extern_port_map_must_cover_ports() {
        let mut port_map = BTreeMap::new();
        port_map.insert(
            Ident::new("a").unwrap(),
            PortSignals {
                data: Some("a_data".into()),
                valid: "a_valid".into(),
                ready: "a_ready".into(),
            },
        );
        let m = Module {
            name: Ident::new("x").unwrap(),
            ports: vec![
                Port::new("a", Direction::In, parse_type("uint<8>").unwrap()),
                Port::new("go", Direction::In, HWType::Void),
            ],
            body: Body::ExternRtl(ExternRtl {
                sources: vec!["x.v".into()],
                top: "x".into(),
                port_map,
                registered: false,
                model: None,
            }),
        };
        let diags = validate(&m).unwrap_err();
        assert_eq!(diags.len(), 1);
        assert!(diags[0].message.contains("`go`"));
    }
}
