// SPDX-License-Identifier: Apache-2.0

//! Untimed reference interpreter.
//!
//! Every node fires once per step in lockstep. A Delay outputs its stored
//! value and then stores its input, so the first firing sees `init`.

use std::collections::BTreeMap;

use rand::Rng;
use thiserror::Error;

use crate::ir::exec::Exec;
use crate::ir::{topo_order_with, validate, Diagnostic, Module};
use crate::types::{decode, encode, CodecError, Ident, Value, ValueError};

/// Port name to token sequence.
pub type TokenStreams = BTreeMap<Ident, Vec<Value>>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InterpError {
    #[error("module `{0}` is not interpretable: extern body without a behavioral model")]
    NotInterpretable(Ident),
    #[error("module does not validate: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Diagnostic>),
    #[error("no input stream for port `{0}`")]
    MissingStream(Ident),
    #[error("input stream `{port}` has {have} tokens, {need} needed")]
    ShortStream { port: Ident, have: usize, need: usize },
    #[error("stream for `{0}`, which is not an input port")]
    UnknownPort(Ident),
    #[error("input `{port}` token {index}: {error}")]
    IllTyped { port: Ident, index: usize, error: ValueError },
    #[error("output `{port}` token {index} is not a valid value: {error}")]
    Undecodable { port: Ident, index: usize, error: CodecError },
}

/// Runs `steps` firings with node evaluation in the deterministic order.
pub fn run(module: &Module, inputs: &TokenStreams, steps: usize) -> Result<TokenStreams, InterpError> {
    let exec = prepare(module)?;
    let order = exec.order.clone();
    execute(module, &exec, inputs, steps, |_| order.clone())
}

/// Like [`run`], but every firing evaluates nodes in a fresh random
/// topological order. Used to check that results do not depend on order.
pub fn run_with<R: Rng + ?Sized>(
    module: &Module,
    inputs: &TokenStreams,
    steps: usize,
    rng: &mut R,
) -> Result<TokenStreams, InterpError> {
    let exec = prepare(module)?;
    let graph = module.behavior().expect("checked in prepare");
    let index = graph.index();
    execute(module, &exec, inputs, steps, |_| {
        topo_order_with(graph, rng)
            .expect("validated graph is acyclic")
            .iter()
            .map(|id| index[id])
            .collect()
    })
}

fn prepare(module: &Module) -> Result<Exec, InterpError> {
    let graph = module
        .behavior()
        .ok_or_else(|| InterpError::NotInterpretable(module.name.clone()))?;
    validate(module).map_err(InterpError::Invalid)?;
    Exec::compile(graph).map_err(InterpError::Invalid)
}

fn execute(
    module: &Module,
    exec: &Exec,
    inputs: &TokenStreams,
    steps: usize,
    mut order: impl FnMut(usize) -> Vec<usize>,
) -> Result<TokenStreams, InterpError> {
    if let Some(name) = inputs.keys().find(|k| module.inputs().all(|p| &p.name != *k)) {
        return Err(InterpError::UnknownPort(name.clone()));
    }
    let mut encoded = Vec::with_capacity(exec.inputs.len());
    for (name, _) in &exec.inputs {
        let port = module.port(name).expect("validated boundary");
        let stream = inputs.get(name).ok_or_else(|| InterpError::MissingStream(name.clone()))?;
        if stream.len() < steps {
            return Err(InterpError::ShortStream {
                port: name.clone(),
                have: stream.len(),
                need: steps,
            });
        }
        let bits = stream[..steps]
            .iter()
            .enumerate()
            .map(|(index, v)| {
                v.check(&port.ty).map_err(|error| InterpError::IllTyped {
                    port: name.clone(),
                    index,
                    error,
                })?;
                Ok(encode(v, &port.ty).expect("checked value"))
            })
            .collect::<Result<Vec<_>, _>>()?;
        encoded.push(bits);
    }
    let mut out: TokenStreams = exec
        .outputs
        .iter()
        .map(|(n, _)| (n.clone(), Vec::with_capacity(steps)))
        .collect();
    let mut state = exec.initial_state();
    let mut args = Vec::with_capacity(encoded.len());
    for step in 0..steps {
        args.clear();
        args.extend(encoded.iter().map(|s| s[step].clone()));
        let vals = exec.step(&args, &mut state, &order(step));
        for (name, pos) in &exec.outputs {
            let ty = &exec.types[*pos];
            let v = decode(&vals[*pos], ty).map_err(|error| InterpError::Undecodable {
                port: name.clone(),
                index: step,
                error,
            })?;
            out.get_mut(name).unwrap().push(v);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{DataflowGraph, Direction, OpKind, Port};
    use crate::types::HWType;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

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
        let a = g.add(OpKind::InputPort { name: id("x"), ty: HWType::UInt(16) }, []);
        let d = g.add(OpKind::Delay { ty: HWType::UInt(16), init: Value::UInt(0) }, [a]);
        let s = g.add(OpKind::Add, [a, d]);
        g.connect(s, d, 0);
        g.add(OpKind::OutputPort { name: id("y") }, [s]);
        Module::dataflow(
            "accum",
            vec![
                Port::new("x", Direction::In, HWType::UInt(16)),
                Port::new("y", Direction::Out, HWType::UInt(16)),
            ],
            g,
        )
    }

    fn streams(pairs: &[(&str, &[u128])]) -> TokenStreams {
        pairs
            .iter()
            .map(|(n, vs)| (id(n), vs.iter().map(|&v| Value::UInt(v)).collect()))
            .collect()
    }

    #[test]
    fn adder_adds_and_wraps() {
        let out = run(&adder(), &streams(&[("a", &[1, 2, 3, 255]), ("b", &[4, 5, 6, 1])]), 4).unwrap();
        assert_eq!(out[&id("s")], [5, 7, 9, 0].map(Value::UInt));
    }

    #[test]
    fn accumulator_sums_prefixes() {
        // hand-stepped: state 0 -> 1 -> 3 -> 6
        let out = run(&accum(), &streams(&[("x", &[1, 2, 3])]), 3).unwrap();
        assert_eq!(out[&id("y")], [1, 3, 6].map(Value::UInt));
    }

    #[test]
    fn order_does_not_matter() {
        let ins = streams(&[("x", &[5, 9, 1, 0, 7, 7])]);
        let reference = run(&accum(), &ins, 6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            assert_eq!(run_with(&accum(), &ins, 6, &mut rng).unwrap(), reference);
        }
    }

    #[test]
    fn stream_errors() {
        let m = adder();
        assert_eq!(
            run(&m, &streams(&[("a", &[1])]), 1),
            Err(InterpError::MissingStream(id("b")))
        );
        assert!(matches!(
            run(&m, &streams(&[("a", &[1]), ("b", &[])]), 1),
            Err(InterpError::ShortStream { need: 1, have: 0, .. })
        ));
        assert!(matches!(
            run(&m, &streams(&[("a", &[256]), ("b", &[0])]), 1),
            Err(InterpError::IllTyped { index: 0, .. })
        ));
    }
}
