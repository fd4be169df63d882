// SPDX-License-Identifier: Apache-2.0

use super::*;
use crate::ir::{DataflowGraph, Direction, Module, OpKind, Port};
use crate::pipeline::{compile, LatencyTable};
use crate::types::{parse_type, HWType, Ident, Value};

fn adder(name: &str) -> Module {
    let mut g = DataflowGraph::new();
    let t = HWType::UInt(8);
    let a = g.add(
        OpKind::InputPort {
            name: Ident::new("a").unwrap(),
            ty: t.clone(),
        },
        [],
    );
    let b = g.add(
        OpKind::InputPort {
            name: Ident::new("b").unwrap(),
            ty: t.clone(),
        },
        [],
    );
    let s = g.add(OpKind::Add, [a, b]);
    g.add(
        OpKind::OutputPort {
            name: Ident::new("s").unwrap(),
        },
        [s],
    );
    Module::dataflow(
        name,
        vec![
            Port::new("a", Direction::In, t.clone()),
            Port::new("b", Direction::In, t.clone()),
            Port::new("s", Direction::Out, t),
        ],
        g,
    )
}

#[test]
fn adder_module_is_clean() {
    let n = compile(&adder("add8"), &LatencyTable::default()).unwrap();
    let v = emit_module(&n).unwrap();
    assert!(v.starts_with("module add8 (\n  input  wire clk,\n  input  wire rst,\n  input  wire [7:0] a_data,"));
    assert!(v.contains("  assign n_2 = n_0 + n_1;"));
    assert!(v.contains("  assign s_valid = vld_1 & ~sent_s;"));
    assert_eq!(lint(&v, &[]), vec![]);
    assert_eq!(emit_module(&n).unwrap(), v);
}

#[test]
fn keyword_module_name_is_suffixed() {
    let n = compile(&adder("module"), &LatencyTable::default()).unwrap();
    assert!(emit_module(&n).unwrap().starts_with("module module_ ("));
    assert_eq!(sanitize("wire"), "wire_");
    assert_eq!(sanitize("adder"), "adder");
}

#[test]
fn colliding_port_names_are_rejected() {
    // An output named `data` gives `sent_data`, which is also the data
    // signal of an input named `sent`.
    let t = HWType::UInt(4);
    let mut g = DataflowGraph::new();
    let i = g.add(
        OpKind::InputPort {
            name: Ident::new("sent").unwrap(),
            ty: t.clone(),
        },
        [],
    );
    g.add(
        OpKind::OutputPort {
            name: Ident::new("data").unwrap(),
        },
        [i],
    );
    let m = Module::dataflow(
        "clash",
        vec![Port::new("sent", Direction::In, t.clone()), Port::new("data", Direction::Out, t)],
        g,
    );
    let n = compile(&m, &LatencyTable::default()).unwrap();
    assert!(matches!(emit_module(&n), Err(EmitError::Collision { .. })));
}

#[test]
fn void_ports_have_no_data() {
    let t = parse_type("void").unwrap();
    let mut g = DataflowGraph::new();
    let i = g.add(
        OpKind::InputPort {
            name: Ident::new("go").unwrap(),
            ty: t.clone(),
        },
        [],
    );
    let c = g.add(
        OpKind::Const {
            ty: HWType::UInt(3),
            value: Value::UInt(5),
        },
        [],
    );
    let o = g.add(
        OpKind::OutputPort {
            name: Ident::new("done").unwrap(),
        },
        [i],
    );
    let k = g.add(
        OpKind::OutputPort {
            name: Ident::new("k").unwrap(),
        },
        [c],
    );
    let _ = (o, k);
    let m = Module::dataflow(
        "pulse",
        vec![
            Port::new("go", Direction::In, t.clone()),
            Port::new("done", Direction::Out, t),
            Port::new("k", Direction::Out, HWType::UInt(3)),
        ],
        g,
    );
    let n = compile(&m, &LatencyTable::default()).unwrap();
    let v = emit_module(&n).unwrap();
    assert!(!v.contains("go_data") && !v.contains("done_data"));
    assert!(v.contains("k_data"));
    assert_eq!(lint(&v, &[]), vec![]);
}

#[test]
fn lint_finds_problems() {
    let double = "module m (\n  input  wire clk,\n  output wire x_valid,\n  input  wire x_ready\n);\n  assign x_valid = 1'b0;\n  assign x_valid = clk;\nendmodule\n";
    let e = lint(double, &[]);
    assert!(e.iter().any(|e| e.message.contains("2 drivers")), "{e:?}");

    let open = "module m (\n  input  wire clk\n);\n";
    assert!(lint(open, &[]).iter().any(|e| e.message.contains("endmodule")));

    let contract = "module m (\n  input  wire a_valid,\n  input  wire a_ready,\n  output wire b\n);\n  assign b = a_valid;\nendmodule\n";
    let e = lint(contract, &[]);
    assert!(e.iter().any(|e| e.message.contains("same way")), "{e:?}");
    assert!(e.iter().any(|e| e.message.contains("port `b`")), "{e:?}");

    let undriven = "module m (\n  input  wire clk\n);\n  wire w;\n  wire u;\n  assign u = w & z;\nendmodule\n";
    let e = lint(undriven, &[]);
    assert!(e.iter().any(|e| e.message == "`w` has no driver"), "{e:?}");
    assert!(e.iter().any(|e| e.message == "`z` is not declared"), "{e:?}");

    let two_always =
        "module m (\n  input  wire clk\n);\n  reg r;\n  always @(posedge clk) begin\n    r <= 1'b0;\n  end\n  always @(posedge clk) begin\n    r <= 1'b1;\n  end\nendmodule\n";
    assert!(lint(two_always, &[]).iter().any(|e| e.message.contains("2 drivers")));
}

#[test]
fn helpers_lint_clean() {
    for h in [helpers::FIFO, helpers::CDC_FIFO, helpers::PERF_TAP] {
        assert_eq!(lint(h, &[]), vec![]);
    }
}
