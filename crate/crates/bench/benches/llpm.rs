// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use llpm::emit::{emit_module, emit_system};
use llpm::pipeline::{compile, LatencyTable};
use llpm::sim::{equivalence_check, simulate, simulate_system, Stimulus};
use llpm::system::{partition_graph, PartitionProblem, PartitionSpec};
use llpm::types::{decode, encode, parse_type, random_value, Value};
use llpm_bench::{package, system};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn codec(c: &mut Criterion) {
    let ty = parse_type("struct{a: array<uint<12>, 4>, b: union{x: sint<33>, y: void}, c: bits<64>}").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let v = random_value(&ty, &mut rng);
    let bits = encode(&v, &ty).unwrap();
    c.bench_function("codec/encode", |b| b.iter(|| encode(black_box(&v), &ty).unwrap()));
    c.bench_function("codec/decode", |b| b.iter(|| decode(black_box(&bits), &ty).unwrap()));
}

fn pipeline(c: &mut Criterion) {
    let m = package("fir3").module;
    let table = LatencyTable::default();
    c.bench_function("compile/fir3", |b| b.iter(|| compile(black_box(&m), &table).unwrap()));
    let n = compile(&m, &table).unwrap();
    c.bench_function("emit/fir3", |b| b.iter(|| emit_module(black_box(&n)).unwrap()));
    c.bench_function("verify/fir3 x10", |b| b.iter(|| equivalence_check(&m, &n, 10, black_box(7)).unwrap()));
    let stim = Stimulus {
        inputs: BTreeMap::from([("x".to_string(), (0..1000).map(|i| Value::UInt(i % 65536)).collect())]),
        cycles: 1100,
        ..Stimulus::default()
    };
    c.bench_function("simulate/fir3 1k tokens", |b| b.iter(|| simulate(&n, black_box(&stim)).unwrap()));
}

fn systems(c: &mut Criterion) {
    let sys = system("fifo_chain");
    c.bench_function("emit/fifo_chain", |b| b.iter(|| emit_system(black_box(&sys)).unwrap()));
    let stim = Stimulus {
        inputs: BTreeMap::from([("din".to_string(), (0..500).map(|i| Value::UInt(i % 256)).collect())]),
        sources: BTreeMap::from([("din".to_string(), 0.7)]),
        sinks: BTreeMap::from([("dout".to_string(), 0.7)]),
        seed: 3,
        cycles: 1500,
    };
    c.bench_function("simulate/fifo_chain", |b| b.iter(|| simulate_system(&sys, black_box(&stim)).unwrap()));
}

fn partitioning(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let problem = |n: usize, rng: &mut ChaCha8Rng| {
        let mut edges = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                if rng.gen_bool(0.1) {
                    edges.push((a, b, rng.gen_range(1..=8)));
                }
            }
        }
        PartitionProblem {
            names: (0..n).map(|i| format!("u{i}")).collect(),
            areas: vec![1.0; n],
            edges,
        }
    };
    let small = problem(12, &mut rng);
    let large = problem(100, &mut rng);
    let spec = |n: usize| PartitionSpec { capacities: vec![(n as f64 / 3.0).ceil() + 1.0; 3], seed: 0 };
    c.bench_function("partition/exact 12", |b| b.iter(|| partition_graph(black_box(&small), &spec(12)).unwrap()));
    c.bench_function("partition/heuristic 100", |b| b.iter(|| partition_graph(black_box(&large), &spec(100)).unwrap()));
}

criterion_group!(benches, codec, pipeline, systems, partitioning);
criterion_main!(benches);
