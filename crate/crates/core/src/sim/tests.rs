// SPDX-License-Identifier: Apache-2.0

use super::*;
use crate::ir::{DataflowGraph, Direction, Module, OpKind, Port};
use crate::pipeline::{compile, LatencyTable};
use crate::types::Ident;

fn id(s: &str) -> Ident {
    Ident::new(s).unwrap()
}

fn adder() -> Module {
    let mut g = DataflowGraph::new();
    let a = g.add(OpKind::InputPort { name: id("a"), ty: HWType::UInt(8) }, []);
    let b = g.add(OpKind::InputPort { name: id("b"), ty: HWType::UInt(8) }, []);
    let s = g.add(OpKind::Add, [a, b]);
    g.add(OpKind::OutputPort { name: id("s") }, [s]);
    Module::dataflow(
        "add8",
        vec![
            Port::new("a", Direction::In, HWType::UInt(8)),
            Port::new("b", Direction::In, HWType::UInt(8)),
            Port::new("s", Direction::Out, HWType::UInt(8)),
        ],
        g,
    )
}

fn accum() -> Module {
    let mut g = DataflowGraph::new();
    let x = g.add(OpKind::InputPort { name: id("x"), ty: HWType::UInt(8) }, []);
    let d = g.add(OpKind::Delay { ty: HWType::UInt(8), init: Value::UInt(0) }, [x]);
    let s = g.add(OpKind::Add, [x, d]);
    g.connect(s, d, 0);
    g.add(OpKind::OutputPort { name: id("y") }, [s]);
    Module::dataflow(
        "accum",
        vec![
            Port::new("x", Direction::In, HWType::UInt(8)),
            Port::new("y", Direction::Out, HWType::UInt(8)),
        ],
        g,
    )
}

fn saturated(n: u128, names: &[&str], cycles: u64) -> Stimulus {
    Stimulus {
        inputs: names
            .iter()
            .map(|p| (p.to_string(), (0..n).map(Value::UInt).collect()))
            .collect(),
        cycles,
        ..Stimulus::default()
    }
}

#[test]
fn adder_emits_one_token_per_cycle_after_latency() {
    let n = compile(&adder(), &LatencyTable::default()).unwrap();
    let t = simulate(&n, &saturated(100, &["a", "b"], 10)).unwrap();
    let s = &t.channels["s"];
    assert_eq!(s.transfers, 9);
    assert_eq!(s.cycles, (1..10).collect::<Vec<u64>>());
    assert_eq!(s.tokens[3], Value::UInt(6));
    assert_eq!(t.channels["a"].transfers, 10);
    for c in t.channels.values() {
        assert_eq!(c.transfers + c.stall_cycles + c.idle_cycles, 10);
    }
}

#[test]
fn blocked_sink_stops_everything_once_full() {
    let n = compile(&adder(), &LatencyTable::default()).unwrap();
    let mut stim = saturated(100, &["a", "b"], 20);
    stim.sinks.insert("s".into(), 0.0);
    let t = simulate(&n, &stim).unwrap();
    assert_eq!(t.channels["s"].transfers, 0);
    assert_eq!(t.channels["s"].stall_cycles, 19);
    // one token fills the single stage, then the input stalls
    assert_eq!(t.channels["a"].transfers, 1);
}

#[test]
fn traces_are_deterministic() {
    let n = compile(&accum(), &LatencyTable::default()).unwrap();
    let mut stim = saturated(30, &["x"], 80);
    stim.sources.insert("x".into(), 0.6);
    stim.sinks.insert("y".into(), 0.4);
    stim.seed = 99;
    let a = simulate(&n, &stim).unwrap().to_json().to_string();
    let b = simulate(&n, &stim).unwrap().to_json().to_string();
    assert_eq!(a, b);
}

#[test]
fn accumulator_matches_interpreter_under_backpressure() {
    let m = accum();
    let n = compile(&m, &LatencyTable::default()).unwrap();
    assert_eq!(equivalence_check(&m, &n, 200, 5).unwrap(), Equivalence::Pass { trials: 200 });
    assert_eq!(equivalence_check(&m, &n, 0, 5).unwrap(), Equivalence::Pass { trials: 0 });
}

#[test]
fn removed_register_is_caught() {
    let m = adder();
    let mut n = compile(&m, &LatencyTable::default()).unwrap();
    // with a wire instead of the register the output reads the next token
    assert!(n.remove_register(0));
    let Equivalence::Counterexample(cex) = equivalence_check(&m, &n, 100, 1).unwrap() else {
        panic!("mutation not detected");
    };
    assert_eq!(cex.channel, "s");
}

#[test]
fn stimulus_file_names_are_checked() {
    let types: BTreeMap<String, HWType> = [("a".to_string(), HWType::UInt(8))].into();
    let s = Stimulus::from_json(r#"{"inputs": {"a": [1, 2]}, "sinks": {"s": 0.5}, "seed": 3}"#, &types).unwrap();
    assert_eq!(s.inputs["a"], vec![Value::UInt(1), Value::UInt(2)]);
    assert!(Stimulus::from_json(r#"{"inputs": {"q": [1]}}"#, &types).is_err());
    let n = compile(&adder(), &LatencyTable::default()).unwrap();
    let mut bad = saturated(1, &["a", "b"], 1);
    bad.sinks.insert("a".into(), 1.0);
    assert!(matches!(simulate(&n, &bad), Err(SimError::UnknownChannel { .. })));
    bad.sinks.clear();
    bad.sources.insert("a".into(), 1.5);
    assert!(matches!(simulate(&n, &bad), Err(SimError::BadProbability { .. })));
}
