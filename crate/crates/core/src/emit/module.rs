// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::fmt::Write;

use super::names::{sanitize, Scope};
use super::{range, EmitError};
use crate::ir::exec::Kernel;
use crate::ir::{infer_graph_types, Direction, NodeId, OpKind};
use crate::pipeline::{PipelinedNetlist, Signal};
use crate::types::{encode, HWType};

/// Sized hexadecimal literal.
pub(crate) fn literal(value: u128, width: u64) -> String {
    format!("{width}'h{value:x}")
}

fn stage_valid(s: u32) -> String {
    format!("vld_{s}")
}

struct Ctx<'a> {
    netlist: &'a PipelinedNetlist,
    widths: BTreeMap<NodeId, u64>,
    reg_widths: BTreeMap<u32, u64>,
}

impl Ctx<'_> {
    fn width(&self, s: &Signal) -> u64 {
        match s {
            Signal::Node(n) => self.widths[n],
            Signal::Reg(r) => self.reg_widths[r],
        }
    }

    /// Expression for a signal, or `None` for zero-width values.
    fn sig(&self, s: &Signal) -> Option<String> {
        (self.width(s) > 0).then(|| match s {
            Signal::Node(n) => format!("n_{n}"),
            Signal::Reg(r) => format!("r_{r}"),
        })
    }

    fn arg(&self, id: NodeId, k: usize) -> Option<String> {
        self.sig(&self.netlist.operands[&id][k])
    }
}

/// Right-hand side for a node's combinational function.
fn expr(ctx: &Ctx, id: NodeId, kernel: &Kernel, width: u64) -> String {
    let a = |k: usize| ctx.arg(id, k).expect("scalar operand has width");
    match kernel {
        Kernel::Source => unreachable!("sources are not assigned"),
        Kernel::Pass => a(0),
        Kernel::Const(bits) => literal(bits.to_u128(), width),
        Kernel::Add(_) => format!("{} + {}", a(0), a(1)),
        Kernel::Sub(_) => format!("{} - {}", a(0), a(1)),
        Kernel::Mul(_) => format!("{} * {}", a(0), a(1)),
        Kernel::Eq => match (ctx.arg(id, 0), ctx.arg(id, 1)) {
            (Some(x), Some(y)) => format!("{x} == {y}"),
            _ => "1'b1".into(),
        },
        Kernel::Lt { signed: true } => format!("$signed({}) < $signed({})", a(0), a(1)),
        Kernel::Lt { signed: false } => format!("{} < {}", a(0), a(1)),
        Kernel::And => format!("{} & {}", a(0), a(1)),
        Kernel::Or => format!("{} | {}", a(0), a(1)),
        Kernel::Xor => format!("{} ^ {}", a(0), a(1)),
        Kernel::Not(_) => format!("~{}", a(0)),
        Kernel::Mux => format!("{} ? {} : {}", a(0), a(1), a(2)),
        Kernel::Concat => {
            let n = ctx.netlist.operands[&id].len();
            let parts: Vec<String> = (0..n).rev().filter_map(|k| ctx.arg(id, k)).collect();
            format!("{{{}}}", parts.join(", "))
        }
        Kernel::Slice { offset, width } => {
            if *offset == 0 && *width == ctx.width(&ctx.netlist.operands[&id][0]) {
                a(0)
            } else {
                format!("{}[{}:{}]", a(0), offset + width - 1, offset)
            }
        }
        Kernel::ArrayIndex { elem, count } => format!(
            "({i} < {count}) ? {arr}[{i} * {elem} +: {elem}] : {zero}",
            i = a(1),
            arr = a(0),
            zero = literal(0, *elem)
        ),
        Kernel::UnionPack { tag, tag_width, width } => {
            let payload = ctx.arg(id, 0);
            let pw = ctx.width(&ctx.netlist.operands[&id][0]);
            let pad = width - tag_width - pw;
            let mut parts = Vec::new();
            if pad > 0 {
                parts.push(literal(0, pad));
            }
            parts.extend(payload);
            if *tag_width > 0 {
                parts.push(literal(*tag, *tag_width));
            }
            format!("{{{}}}", parts.join(", "))
        }
        Kernel::TagOf { tag_width } => {
            if *tag_width == 0 {
                "1'b0".into()
            } else {
                format!("{}[{}:0]", a(0), tag_width - 1)
            }
        }
    }
}

pub(crate) fn port_decls(ports: &[crate::ir::Port], scope: &mut Scope, out: &mut Vec<String>) -> Result<(), EmitError> {
    for p in ports {
        let w = p.ty.bit_width();
        let (fwd, back) = match p.direction {
            Direction::In => ("input  wire", "output wire"),
            Direction::Out => ("output wire", "input  wire"),
        };
        if w > 0 {
            let name = format!("{}_data", p.name);
            scope.claim(&name, format!("port `{}`", p.name))?;
            out.push(format!("{fwd} {}{name}", range(w)));
        }
        for (suffix, dir) in [("valid", fwd), ("ready", back)] {
            let name = format!("{}_{suffix}", p.name);
            scope.claim(&name, format!("port `{}`", p.name))?;
            out.push(format!("{dir} {name}"));
        }
    }
    Ok(())
}

/// Writes the Verilog module for one pipelined netlist. The module is named
/// after the IR module, with keywords suffixed by `_`.
pub fn emit_module(netlist: &PipelinedNetlist) -> Result<String, EmitError> {
    netlist.check().map_err(EmitError::Netlist)?;
    let graph = netlist.graph();
    let types = infer_graph_types(graph).map_err(|d| EmitError::Netlist(format!("{d:?}")))?;
    let ctx = Ctx {
        netlist,
        widths: types.iter().map(|(id, t)| (*id, t.bit_width())).collect(),
        reg_widths: netlist.registers.iter().map(|r| (r.id, r.ty.bit_width())).collect(),
    };
    let module = &netlist.module;
    let name = sanitize(module.name.as_str());
    let lat = netlist.latency();
    let mut scope = Scope::default();
    for fixed in ["clk", "rst", "stall", "all_done"] {
        scope.claim(fixed, "control")?;
    }
    for s in 0..=lat {
        scope.claim(&stage_valid(s), "control")?;
    }
    let mut ports = vec!["input  wire clk".to_string(), "input  wire rst".to_string()];
    port_decls(&module.ports, &mut scope, &mut ports)?;
    let outputs: Vec<&crate::ir::Port> = module.outputs().collect();
    let inputs: Vec<&crate::ir::Port> = module.inputs().collect();
    for o in &outputs {
        scope.claim(&format!("sent_{}", o.name), "control")?;
    }

    let mut v = String::new();
    writeln!(v, "module {name} (").unwrap();
    writeln!(v, "  {}", ports.join(",\n  ")).unwrap();
    writeln!(v, ");").unwrap();

    let nodes: BTreeMap<NodeId, &crate::ir::Node> = graph.nodes.iter().map(|n| (n.id, n)).collect();
    let in_types: BTreeMap<NodeId, Vec<HWType>> = graph
        .nodes
        .iter()
        .map(|n| (n.id, n.inputs.iter().map(|e| types[&e.node].clone()).collect()))
        .collect();

    // Declarations.
    for s in 0..=lat {
        if s == 0 {
            writeln!(v, "  wire {};", stage_valid(s)).unwrap();
        } else {
            writeln!(v, "  reg {};", stage_valid(s)).unwrap();
        }
    }
    writeln!(v, "  wire all_done;").unwrap();
    writeln!(v, "  wire stall;").unwrap();
    for o in &outputs {
        writeln!(v, "  reg sent_{};", o.name).unwrap();
    }
    for (id, n) in &nodes {
        let w = ctx.widths[id];
        if w == 0 {
            continue;
        }
        let kind = if n.op.is_delay() { "reg " } else { "wire" };
        writeln!(v, "  {kind} {}n_{id};", range(w)).unwrap();
    }
    for r in &netlist.registers {
        let w = ctx.reg_widths[&r.id];
        if w > 0 {
            writeln!(v, "  reg  {}r_{};", range(w), r.id).unwrap();
        }
    }

    // Handshake control.
    let last = stage_valid(lat);
    let vld0 = if inputs.is_empty() {
        "1'b1".to_string()
    } else {
        inputs.iter().map(|p| format!("{}_valid", p.name)).collect::<Vec<_>>().join(" & ")
    };
    writeln!(v, "  assign {} = {vld0};", stage_valid(0)).unwrap();
    let done = if outputs.is_empty() {
        "1'b1".to_string()
    } else {
        outputs
            .iter()
            .map(|o| format!("(sent_{n} | {n}_ready)", n = o.name))
            .collect::<Vec<_>>()
            .join(" & ")
    };
    writeln!(v, "  assign all_done = {done};").unwrap();
    writeln!(v, "  assign stall = {last} & ~all_done;").unwrap();
    for (k, p) in inputs.iter().enumerate() {
        let mut terms: Vec<String> = inputs
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != k)
            .map(|(_, q)| format!("{}_valid", q.name))
            .collect();
        terms.push(if lat == 0 { "all_done".into() } else { "~stall".into() });
        writeln!(v, "  assign {}_ready = {};", p.name, terms.join(" & ")).unwrap();
    }
    for o in &outputs {
        writeln!(v, "  assign {n}_valid = {last} & ~sent_{n};", n = o.name).unwrap();
    }

    // Datapath.
    let exec_kernels: BTreeMap<NodeId, Kernel> = nodes
        .iter()
        .map(|(id, n)| (*id, Kernel::compile(&n.op, &in_types[id], &types[id])))
        .collect();
    for id in &netlist.order {
        let n = nodes[id];
        let w = ctx.widths[id];
        if w == 0 {
            continue;
        }
        match &n.op {
            OpKind::InputPort { name, .. } => writeln!(v, "  assign n_{id} = {name}_data;").unwrap(),
            OpKind::Delay { .. } => {}
            _ => writeln!(v, "  assign n_{id} = {};", expr(&ctx, *id, &exec_kernels[id], w)).unwrap(),
        }
    }
    for o in &outputs {
        if o.ty.bit_width() == 0 {
            continue;
        }
        let node = graph
            .nodes
            .iter()
            .find(|n| matches!(&n.op, OpKind::OutputPort { name } if *name == o.name))
            .expect("validated outputs");
        writeln!(v, "  assign {}_data = n_{};", o.name, node.id).unwrap();
    }

    // State.
    writeln!(v, "  always @(posedge clk) begin").unwrap();
    writeln!(v, "    if (rst) begin").unwrap();
    for s in 1..=lat {
        writeln!(v, "      {} <= 1'b0;", stage_valid(s)).unwrap();
    }
    for o in &outputs {
        writeln!(v, "      sent_{} <= 1'b0;", o.name).unwrap();
    }
    writeln!(v, "    end else if (stall) begin").unwrap();
    for o in &outputs {
        writeln!(v, "      sent_{n} <= sent_{n} | {n}_ready;", n = o.name).unwrap();
    }
    writeln!(v, "    end else begin").unwrap();
    for s in (1..=lat).rev() {
        writeln!(v, "      {} <= {};", stage_valid(s), stage_valid(s - 1)).unwrap();
    }
    for o in &outputs {
        writeln!(v, "      sent_{} <= 1'b0;", o.name).unwrap();
    }
    writeln!(v, "    end").unwrap();
    writeln!(v, "  end").unwrap();

    let live_regs: Vec<_> = netlist.registers.iter().filter(|r| ctx.reg_widths[&r.id] > 0).collect();
    if !live_regs.is_empty() {
        writeln!(v, "  always @(posedge clk) begin").unwrap();
        writeln!(v, "    if (!stall) begin").unwrap();
        for r in live_regs {
            let src = ctx.sig(&r.source).expect("same width as register");
            writeln!(v, "      r_{} <= {src};", r.id).unwrap();
        }
        writeln!(v, "    end").unwrap();
        writeln!(v, "  end").unwrap();
    }
    for (id, n) in &nodes {
        let OpKind::Delay { ty, init } = &n.op else { continue };
        let w = ty.bit_width();
        if w == 0 {
            continue;
        }
        let init = encode(init, ty).expect("validated init").to_u128();
        let stage = netlist.schedule.stage(*id);
        let input = ctx.arg(*id, 0).expect("same width as delay");
        writeln!(v, "  always @(posedge clk) begin").unwrap();
        writeln!(v, "    if (rst) begin").unwrap();
        writeln!(v, "      n_{id} <= {};", literal(init, w)).unwrap();
        writeln!(v, "    end else if ({} & ~stall) begin", stage_valid(stage)).unwrap();
        writeln!(v, "      n_{id} <= {input};").unwrap();
        writeln!(v, "    end").unwrap();
        writeln!(v, "  end").unwrap();
    }
    writeln!(v, "endmodule").unwrap();
    Ok(v)
}
