// SPDX-License-Identifier: Apache-2.0

mod common;

use std::collections::BTreeMap;

use common::{assembled, package};
use llpm::interp;
use llpm::sim::{simulate_system, storage_output, Stimulus};
use llpm::system::{assemble, check_deadlock, AssembledSystem, Storage, SystemError};
use llpm::types::Value;

fn u(v: &[u128]) -> Vec<Value> {
    v.iter().map(|&x| Value::UInt(x)).collect()
}

fn stim(din: &[u128], cycles: u64, seed: u64, p: f64) -> Stimulus {
    Stimulus {
        inputs: BTreeMap::from([("din".to_string(), u(din))]),
        sources: BTreeMap::from([("din".to_string(), p)]),
        sinks: BTreeMap::from([("dout".to_string(), p)]),
        seed,
        cycles,
    }
}

/// Feeds `din` through inc8 then accum, one interpreter run per module.
fn composed(din: &[u128]) -> Vec<Value> {
    let first = interp::run(
        &package("inc8").module,
        &BTreeMap::from([("i".parse().unwrap(), u(din))]),
        din.len(),
    )
    .unwrap();
    let mid = first.values().next().unwrap().clone();
    let second = interp::run(
        &package("accum").module,
        &BTreeMap::from([("x".parse().unwrap(), mid)]),
        din.len(),
    )
    .unwrap();
    second.values().next().unwrap().clone()
}

#[test]
fn chain_has_direct_wire_and_exports() {
    let sys = assembled("chain2");
    assert_eq!(sys.connections.len(), 1);
    assert_eq!(sys.connections[0].storage, Storage::Wire);
    let names: Vec<_> = sys.exports.iter().map(|e| e.name.as_str()).collect();
    assert_eq!(names, ["din", "dout"]);
    assert!(sys.report.ok());
    assert_eq!(sys.host_bridge, ["din", "dout"]);
}

#[test]
fn cross_domain_gets_one_cdc() {
    let sys = assembled("chain_cdc");
    assert!(matches!(sys.connections[0].storage, Storage::Cdc { depth: 4, .. }));
}

#[test]
fn assembled_streams_match_composed_interpreters() {
    let din: Vec<u128> = (0..20).map(|i| (i * 37 + 5) % 256).collect();
    let expected = composed(&din);
    for name in ["chain2", "chain_cdc", "fifo_chain"] {
        let sys = assembled(name);
        for (seed, p) in [(1, 1.0), (2, 0.7), (3, 0.3)] {
            let t = simulate_system(&sys, &stim(&din, 400, seed, p)).unwrap();
            let got = &t.channels["dout"].tokens;
            if name == "fifo_chain" {
                // Two incrementers in front of the accumulator.
                let shifted: Vec<u128> = din.iter().map(|x| (x + 1) % 256).collect();
                assert_eq!(got, &composed(&shifted), "{name} seed {seed}");
            } else {
                assert_eq!(got, &expected, "{name} seed {seed}");
            }
        }
    }
}

#[test]
fn taps_count_the_producer_side() {
    let sys = assembled("chain2");
    let t = simulate_system(&sys, &stim(&[1; 100], 102, 0, 1.0)).unwrap();
    let tap = t.taps["first_o_to_second_x"];
    assert_eq!(tap.transfers, 100);
    assert_eq!(tap.stall_cycles, 0);
    assert_eq!(tap.transfers + tap.stall_cycles + tap.idle_cycles, 102);
    let sys = assembled("fifo_chain");
    let t = simulate_system(&sys, &stim(&[], 50, 0, 1.0)).unwrap();
    assert_eq!(t.taps["a_o_to_b_i"].idle_cycles, 50);
    assert!(t.channels.contains_key(&storage_output("a_o_to_b_i")));
}

#[test]
fn bridge_counters_match_sim() {
    let sys = assembled("chain2");
    let map = sys.bridge_map().unwrap();
    let t = simulate_system(&sys, &stim(&[3; 30], 60, 4, 0.5)).unwrap();
    let c = &map.counters[0];
    assert_eq!(map.read_word(c.transfers, &t.taps), Some(t.taps[&c.channel].transfers));
    assert_eq!(map.read_word(c.idle_cycles, &t.taps), Some(t.taps[&c.channel].idle_cycles));
}

#[test]
fn deadlock_fixtures() {
    let bad = assembled("cycle_no_fifo");
    assert_eq!(bad.report.deadlocks, vec![vec!["a".parse().unwrap(), "b".parse().unwrap()]]);
    assert!(assembled("cycle_fifo").report.ok());
}

#[test]
fn registered_self_loop_is_fine() {
    let mut design = llpm::system::SystemDesign::new("self_loop");
    design.instances.insert(
        "m".parse().unwrap(),
        llpm::system::InstanceSpec {
            package: "fir3".into(),
            clock_domain: None,
        },
    );
    design.connections.push(llpm::system::ConnectionSpec {
        from: "m.y".into(),
        to: "m.x".into(),
        fifo_depth: 0,
        cdc_depth: None,
        name: None,
    });
    let packages = BTreeMap::from([("fir3".to_string(), package("fir3"))]);
    let sys = assemble(&design, &packages).unwrap();
    assert!(sys.instances[0].netlist.as_ref().unwrap().latency() >= 1);
    assert!(check_deadlock(&sys).is_empty());
    let mut comb = design.clone();
    comb.instances.get_mut("m").unwrap().package = "pass".into();
    comb.connections[0].from = "m.o".into();
    comb.connections[0].to = "m.i".into();
    let packages = BTreeMap::from([("pass".to_string(), package("comb_pass"))]);
    assert_eq!(check_deadlock(&assemble(&comb, &packages).unwrap()).len(), 1);
}

fn two(a: &str, b: &str) -> (llpm::system::SystemDesign, BTreeMap<String, llpm::system::Package>) {
    let mut design = llpm::system::SystemDesign::new("pair");
    for (n, p) in [("x", a), ("y", b)] {
        design.instances.insert(
            n.parse().unwrap(),
            llpm::system::InstanceSpec {
                package: p.into(),
                clock_domain: None,
            },
        );
    }
    let packages = [a, b].iter().map(|p| (p.to_string(), package(p))).collect();
    (design, packages)
}

fn connect(design: &mut llpm::system::SystemDesign, from: &str, to: &str) {
    design.connections.push(llpm::system::ConnectionSpec {
        from: from.into(),
        to: to.into(),
        fifo_depth: 0,
        cdc_depth: None,
        name: None,
    });
}

#[test]
fn assembly_errors() {
    let (mut d, p) = two("inc8", "union_dispatch");
    connect(&mut d, "x.o", "y.msg");
    let e = assemble(&d, &p).unwrap_err();
    assert!(matches!(e, SystemError::TypeMismatch { .. }), "{e}");
    assert!(e.to_string().contains("x.o") && e.to_string().contains("y.msg"));
    assert!(e.to_string().contains("uint<8>") && e.to_string().contains("union{"));

    let (mut d, p) = two("inc8", "add8");
    connect(&mut d, "x.o", "y.a");
    connect(&mut d, "x.o", "y.b");
    assert!(matches!(assemble(&d, &p), Err(SystemError::FanOut(_))));

    let (mut d, p) = two("inc8", "inc8");
    connect(&mut d, "x.o", "y.i");
    connect(&mut d, "y.o", "y.i");
    assert!(matches!(assemble(&d, &p), Err(SystemError::DoubleDriven(_))));

    let (mut d, p) = two("inc8", "inc8");
    connect(&mut d, "x.i", "y.i");
    assert!(matches!(assemble(&d, &p), Err(SystemError::Direction { .. })));
    let (mut d, p) = two("inc8", "inc8");
    connect(&mut d, "x.o", "z.i");
    assert!(matches!(assemble(&d, &p), Err(SystemError::UnknownInstance(_))));
    let (mut d, p) = two("inc8", "inc8");
    connect(&mut d, "x.q", "y.i");
    assert!(matches!(assemble(&d, &p), Err(SystemError::UnknownPort { .. })));

    let (mut d, p) = two("inc8", "inc8");
    d.instances.get_mut("y").unwrap().clock_domain = Some("fast".parse().unwrap());
    connect(&mut d, "x.o", "y.i");
    d.connections[0].cdc_depth = Some(3);
    assert!(matches!(assemble(&d, &p), Err(SystemError::CdcDepth { depth: 3, .. })));
    d.connections[0].cdc_depth = None;
    d.connections[0].fifo_depth = 8;
    let sys = assemble(&d, &p).unwrap();
    assert_eq!(sys.report.warnings.len(), 1);
}

#[test]
fn assembled_json_roundtrip() {
    for name in ["chain2", "chain_cdc", "cycle_no_fifo"] {
        let sys = assembled(name);
        let text = serde_json::to_string_pretty(&sys.to_json()).unwrap();
        let back = AssembledSystem::from_json(&text).unwrap();
        assert_eq!(back, sys, "{name}");
    }
}

#[test]
fn bridge_rejects_connected_channel() {
    let mut sys = assembled("chain2");
    let e = llpm::system::synth_host_bridge(&mut sys, &["first_o_to_second_x".into()]).unwrap_err();
    assert!(matches!(e, SystemError::Bridge(_)));
    let mut cdc = assembled("chain_cdc");
    assert!(llpm::system::synth_host_bridge(&mut cdc, &["din".into(), "dout".into()]).is_err());
}
