// SPDX-License-Identifier: Apache-2.0

//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

mod common;

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use common::*;
use llpm::emit::{emit_module, emit_system, extern_interfaces, lint};
use llpm::ir::Direction;
use llpm::pipeline::{compile, LatencyTable};
use llpm::sim::{equivalence_check, simulate, Stimulus};
use llpm::system::{assemble, partition_graph, synth_host_bridge, HostBridgeMap, PartitionSpec, Storage};
use llpm::types::{decode, encode, random_value, HWType};
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

const SYSTEMS: [&str; 4] = ["chain2", "chain_cdc", "fifo_chain", "cycle_no_fifo"];

fn timed(limit: Duration, start: Instant, detail: String) -> Outcome {
    let took = start.elapsed();
    if took < limit {
        Ok(format!("{detail} in {:.2}s", took.as_secs_f64()))
    } else {
        Err(format!("{detail} but took {:.2}s (limit {}s)", took.as_secs_f64(), limit.as_secs()))
    }
}

fn codec() -> Outcome {
    let start = Instant::now();
    let mut runner = TestRunner::new(Config { cases: 10_000, failure_persistence: None, ..Config::default() });
    let strat = proptest::strategy::Strategy::prop_flat_map(arb_type(4), |t| (proptest::strategy::Just(t.clone()), arb_value(&t)));
    runner
        .run(&strat, |(t, v)| {
            let bits = encode(&v, &t).map_err(|e| TestCaseError::fail(e.to_string()))?;
            if bits.len() != width_oracle(&t) {
                return Err(TestCaseError::fail(format!("{t}: {} bits, expected {}", bits.len(), width_oracle(&t))));
            }
            let back = decode(&bits, &t).map_err(|e| TestCaseError::fail(e.to_string()))?;
            if back != v {
                return Err(TestCaseError::fail(format!("{t}: {v:?} decoded as {back:?}")));
            }
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    timed(Duration::from_secs(5), start, "10000 roundtrips".into())
}

fn equivalence() -> Outcome {
    let start = Instant::now();
    for (i, name) in IR_FIXTURES.iter().enumerate() {
        let m = package(name).module;
        let n = compile(&m, &LatencyTable::default()).map_err(|e| format!("{name}: {e}"))?;
        let r = equivalence_check(&m, &n, 1000, 0x5eed + i as u64).map_err(|e| format!("{name}: {e}"))?;
        if !r.passed() {
            return Err(format!("{name}: {r:?}"));
        }
    }
    timed(Duration::from_secs(60), start, format!("{} fixtures x 1000 trials", IR_FIXTURES.len()))
}

fn throughput() -> Outcome {
    const WINDOW: u64 = 200;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for name in IR_FIXTURES {
        let m = package(name).module;
        let n = compile(&m, &LatencyTable::default()).map_err(|e| format!("{name}: {e}"))?;
        let l = u64::from(n.latency());
        let mut stim = Stimulus { cycles: l + WINDOW, ..Stimulus::default() };
        for p in m.inputs() {
            let toks = (0..l + WINDOW).map(|_| random_value(&p.ty, &mut rng)).collect();
            stim.inputs.insert(p.name.to_string(), toks);
        }
        let t = simulate(&n, &stim).map_err(|e| format!("{name}: {e}"))?;
        for p in m.outputs() {
            let got = &t.channels[p.name.as_str()].cycles;
            let want: Vec<u64> = (l..l + WINDOW).collect();
            if *got != want {
                return Err(format!("{name}.{}: transfers in cycles {:?}, expected {l}..{}", p.name, got, l + WINDOW));
            }
        }
    }
    Ok(format!("{} fixtures at 1 token/cycle for {WINDOW} cycles", IR_FIXTURES.len()))
}

fn mutation() -> Outcome {
    let m = package("fir3").module;
    let n = compile(&m, &LatencyTable::default()).map_err(|e| e.to_string())?;
    if n.registers.is_empty() {
        return Err("FIR-3 netlist has no registers".into());
    }
    let mut worst = 0;
    for r in &n.registers {
        let mut mutant = n.clone();
        mutant.remove_register(r.id);
        match equivalence_check(&m, &mutant, 1000, 1).map_err(|e| e.to_string())? {
            llpm::sim::Equivalence::Counterexample(c) => worst = worst.max(c.trial + 1),
            _ => return Err(format!("removing register {} went undetected", r.id)),
        }
    }
    Ok(format!("all {} register removals caught, worst after {worst} trials", n.registers.len()))
}

fn partitioning() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut compared = 0;
    while compared < 50 {
        let n = rng.gen_range(2..=12);
        let k = rng.gen_range(2..=3);
        let p = random_problem(&mut rng, n, 0.35);
        let total: f64 = p.areas.iter().sum();
        let caps: Vec<f64> = (0..k).map(|_| (total * rng.gen_range(0.45..0.9)).round()).collect();
        let want = brute_force(&p, &caps);
        let got = partition_graph(&p, &PartitionSpec { capacities: caps.clone(), seed: compared });
        match (want, got) {
            (None, Err(_)) => {}
            (Some(w), Ok(r)) if r.cost == w => compared += 1,
            (w, g) => return Err(format!("n={n} caps={caps:?}: brute force {w:?}, partition {:?}", g.map(|r| r.cost))),
        }
    }
    let start = Instant::now();
    for seed in 0..3 {
        let p = random_problem(&mut rng, 100, 0.05);
        let total: f64 = p.areas.iter().sum();
        let caps = vec![(total * 0.3).ceil(); 4];
        let r = partition_graph(&p, &PartitionSpec { capacities: caps.clone(), seed }).map_err(|e| e.to_string())?;
        let mut load = [0.0; 4];
        for (i, &part) in r.assignment.iter().enumerate() {
            load[part] += p.areas[i];
        }
        if load.iter().zip(&caps).any(|(l, c)| l > c) {
            return Err(format!("100-instance design overflows: {load:?} vs {caps:?}"));
        }
    }
    timed(Duration::from_secs(10), start, "50 exact matches; three 100-instance designs within capacity".into())
}

fn assembly() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut crossings, mut cycles) = (0, 0);
    for trial in 0..300 {
        let n = rng.gen_range(2..=8);
        let rs = random_system(&mut rng, n);
        let sys = assemble(&rs.design, &rs.packages).map_err(|e| format!("trial {trial}: {e}"))?;
        for c in &rs.design.connections {
            let (a, b) = (c.from.split('.').next().unwrap(), c.to.split('.').next().unwrap());
            let matching: Vec<_> = sys
                .connections
                .iter()
                .filter(|x| x.from.to_string() == c.from && x.to.to_string() == c.to)
                .collect();
            if matching.len() != 1 {
                return Err(format!("trial {trial}: {} -> {} realized {} times", c.from, c.to, matching.len()));
            }
            let is_cdc = matches!(matching[0].storage, Storage::Cdc { .. });
            let crossing = rs.domains[a] != rs.domains[b];
            if is_cdc != crossing {
                return Err(format!("trial {trial}: {} -> {} crossing={crossing} storage={:?}", c.from, c.to, matching[0].storage));
            }
            crossings += usize::from(crossing);
        }
        if sys.connections.len() != rs.design.connections.len() {
            return Err(format!("trial {trial}: connection count changed"));
        }
        let flagged = !sys.report.deadlocks.is_empty();
        if flagged != rs.has_storage_free_cycle() {
            return Err(format!("trial {trial}: deadlock flagged={flagged}, oracle disagrees: {:?}", rs.design));
        }
        cycles += usize::from(flagged);
    }
    let neg = assembled("cycle_no_fifo");
    let pos = assembled("cycle_fifo");
    if neg.report.deadlocks.len() != 1 || !pos.report.deadlocks.is_empty() {
        return Err("hand-built cycle fixtures misclassified".into());
    }
    Ok(format!("300 random systems ({crossings} crossings, {cycles} deadlocked) and both cycle fixtures"))
}

fn golden() -> Outcome {
    let read = |name: &str| {
        std::fs::read_to_string(fixtures().join("golden").join(format!("{name}.v"))).map_err(|e| format!("{name}: {e}"))
    };
    let mut files = 0;
    for name in IR_FIXTURES {
        let n = compile(&package(name).module, &LatencyTable::default()).map_err(|e| e.to_string())?;
        let v = emit_module(&n).map_err(|e| format!("{name}: {e}"))?;
        if v != read(name)? {
            return Err(format!("{name}: differs from golden"));
        }
        let errs = lint(&v, &[]);
        if !errs.is_empty() {
            return Err(format!("{name}: {errs:?}"));
        }
        files += 1;
    }
    for name in SYSTEMS {
        let sys = assembled(name);
        let v = emit_system(&sys).map_err(|e| format!("{name}: {e}"))?;
        if v != read(&format!("system_{name}"))? {
            return Err(format!("system {name}: differs from golden"));
        }
        let errs = lint(&v, &extern_interfaces(&sys));
        if !errs.is_empty() {
            return Err(format!("system {name}: {errs:?}"));
        }
        files += 1;
    }
    let add8 = read("add8")?;
    let doubled = add8.replacen("endmodule", "  assign s_valid = 1'b0;\nendmodule", 1);
    if !lint(&doubled, &[]).iter().any(|e| e.message.contains("s_valid") && e.message.contains("driver")) {
        return Err("lint missed a second driver".into());
    }
    let renamed = add8.replace("s_ready", "s_rdy");
    if !lint(&renamed, &[]).iter().any(|e| e.message.contains("s_rdy")) {
        return Err("lint missed a broken port contract".into());
    }
    Ok(format!("{files} files byte-identical and lint clean"))
}

fn check_layout(map: &HostBridgeMap, widths: &BTreeMap<String, u64>) -> Result<usize, String> {
    let mut regions = 0;
    for c in &map.channels {
        let w = widths[&c.name];
        let want = w.div_ceil(32) + 2;
        if c.words() != want {
            return Err(format!("{}: {} words for {w} bits", c.name, c.words()));
        }
    }
    let mut spans: Vec<(u64, u64, String)> = map
        .channels
        .iter()
        .map(|c| (c.base, c.end(), c.name.clone()))
        .chain(map.counters.iter().map(|c| (c.base, c.end(), format!("{} counters", c.channel))))
        .collect();
    spans.sort();
    for (i, (lo, hi, name)) in spans.iter().enumerate() {
        if lo % 16 != 0 {
            return Err(format!("{name} at {lo:#x} is not 16-byte aligned"));
        }
        if let Some((next, _, other)) = spans.get(i + 1) {
            if hi > next {
                return Err(format!("{name} overlaps {other}"));
            }
        }
        regions += 1;
    }
    Ok(regions)
}

fn bridge() -> Outcome {
    let mut maps = 0;
    let mut regions = 0;
    for name in SYSTEMS {
        let base = assembled(name);
        let exports: Vec<_> = base.exports.iter().map(|e| (e.name.to_string(), e.ty.bit_width(), e.clock_domain.clone())).collect();
        for mask in 1u32..(1 << exports.len()) {
            let chosen: Vec<_> = (0..exports.len()).filter(|i| mask >> i & 1 == 1).map(|i| &exports[i]).collect();
            if chosen.iter().any(|c| c.2 != chosen[0].2) {
                continue;
            }
            let mut sys = base.clone();
            let names: Vec<String> = chosen.iter().map(|c| c.0.clone()).collect();
            let map = synth_host_bridge(&mut sys, &names).map_err(|e| format!("{name} {names:?}: {e}"))?;
            let widths = chosen.iter().map(|c| (c.0.clone(), c.1)).collect();
            regions += check_layout(&map, &widths).map_err(|e| format!("{name} {names:?}: {e}"))?;
            maps += 1;
        }
    }
    let mut all = Vec::new();
    for name in IR_FIXTURES {
        for p in &package(name).module.ports {
            all.push((format!("{name}_{}", p.name), p.ty.clone(), p.direction));
        }
    }
    let wide = HWType::Array(Box::new(HWType::UInt(33)), 3);
    all.push(("wide".into(), wide, Direction::In));
    let taps: Vec<String> = all.iter().step_by(2).map(|c| c.0.clone()).collect();
    let map = HostBridgeMap::layout(&all, &taps);
    let widths = all.iter().map(|c| (c.0.clone(), c.1.bit_width())).collect();
    regions += check_layout(&map, &widths)?;
    if map.counters.len() != taps.len() {
        return Err("missing counter regions".into());
    }
    Ok(format!("{} maps, {regions} regions disjoint, aligned and sized", maps + 1))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("type codec soundness", codec),
        ("latency-insensitive equivalence", equivalence),
        ("throughput", throughput),
        ("mutation sensitivity", mutation),
        ("partitioning optimality", partitioning),
        ("assembly and CDC", assembly),
        ("backend determinism", golden),
        ("bridge layout", bridge),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("PASS {}. {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {}. {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
