// SPDX-License-Identifier: Apache-2.0
#![allow(dead_code)]

use std::path::PathBuf;

use llpm::system::{load_design, load_package, Package};

pub const IR_FIXTURES: [&str; 7] = [
    "add8",
    "accum",
    "fir3",
    "mux_select",
    "union_dispatch",
    "struct_pack",
    "passthrough",
];

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn package(name: &str) -> Package {
    load_package(&fixtures().join("packages").join(format!("{name}.json"))).unwrap()
}

pub fn assembled(name: &str) -> llpm::system::AssembledSystem {
    let (d, p) = load_design(&fixtures().join("systems").join(format!("{name}.json"))).unwrap();
    llpm::system::assemble(&d, &p).unwrap()
}

use std::collections::BTreeMap;

use llpm::system::{ConnectionSpec, InstanceSpec, PartitionProblem, SystemDesign};
use llpm::types::{HWType, Ident, Value};
use proptest::prelude::*;
use rand::Rng;

pub fn id(s: &str) -> Ident {
    Ident::new(s).unwrap()
}

/// Types nested at most `depth` levels with scalar widths in 1..=64.
pub fn arb_type(depth: u32) -> BoxedStrategy<HWType> {
    let leaf = prop_oneof![
        Just(HWType::Void),
        (1u32..=64).prop_map(HWType::Bits),
        (1u32..=64).prop_map(HWType::UInt),
        (1u32..=64).prop_map(HWType::SInt),
    ];
    leaf.prop_recursive(depth, 24, 4, |inner| {
        let entries = prop::collection::vec(inner.clone(), 1..4).prop_map(|ts| {
            ts.into_iter().enumerate().map(|(i, t)| (id(&format!("f{i}")), t)).collect::<Vec<_>>()
        });
        prop_oneof![
            (inner, 1u32..4).prop_map(|(t, n)| HWType::Array(Box::new(t), n)),
            entries.clone().prop_map(HWType::Struct),
            entries.prop_map(HWType::Union),
        ]
    })
    .boxed()
}

pub fn arb_value(ty: &HWType) -> BoxedStrategy<Value> {
    fn mask(w: u32) -> u128 {
        (1u128 << w) - 1
    }
    match ty.clone() {
        HWType::Void => Just(Value::Unit).boxed(),
        HWType::Bits(w) | HWType::UInt(w) => any::<u128>().prop_map(move |x| Value::UInt(x & mask(w))).boxed(),
        HWType::SInt(w) => any::<i128>()
            .prop_map(move |x| {
                let s = 128 - w;
                Value::SInt((x << s) >> s)
            })
            .boxed(),
        HWType::Array(elem, n) => prop::collection::vec(arb_value(&elem), n as usize).prop_map(Value::Array).boxed(),
        HWType::Struct(fields) => {
            let names: Vec<Ident> = fields.iter().map(|(n, _)| n.clone()).collect();
            fields
                .iter()
                .map(|(_, t)| arb_value(t))
                .collect::<Vec<_>>()
                .prop_map(move |vs| Value::Struct(names.iter().cloned().zip(vs).collect()))
                .boxed()
        }
        HWType::Union(variants) => (0..variants.len())
            .prop_flat_map(move |i| {
                let name = variants[i].0.clone();
                arb_value(&variants[i].1).prop_map(move |v| Value::Union(name.clone(), Box::new(v)))
            })
            .boxed(),
    }
}

/// Bit width computed from first principles.
pub fn width_oracle(t: &HWType) -> u64 {
    match t {
        HWType::Void => 0,
        HWType::Bits(w) | HWType::UInt(w) | HWType::SInt(w) => *w as u64,
        HWType::Array(e, n) => width_oracle(e) * *n as u64,
        HWType::Struct(fs) => fs.iter().map(|(_, t)| width_oracle(t)).sum(),
        HWType::Union(vs) => {
            let mut tag = 0;
            while (1usize << tag) < vs.len() {
                tag += 1;
            }
            tag + vs.iter().map(|(_, t)| width_oracle(t)).max().unwrap()
        }
    }
}

pub fn random_problem<R: Rng>(rng: &mut R, n: usize, edge_prob: f64) -> PartitionProblem {
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.gen_bool(edge_prob) {
                edges.push((a, b, rng.gen_range(1..=16)));
            }
        }
    }
    PartitionProblem {
        names: (0..n).map(|i| format!("u{i:03}")).collect(),
        areas: (0..n).map(|_| rng.gen_range(1..=4) as f64).collect(),
        edges,
    }
}

/// Minimum cut over every assignment that fits the capacities.
pub fn brute_force(p: &PartitionProblem, caps: &[f64]) -> Option<u64> {
    let n = p.names.len();
    let k = caps.len();
    let mut best = None;
    let mut a = vec![0usize; n];
    loop {
        let mut load = vec![0.0; k];
        for (i, &part) in a.iter().enumerate() {
            load[part] += p.areas[i];
        }
        if load.iter().zip(caps).all(|(l, c)| *l <= c + 1e-9) {
            let cost: u64 = p.edges.iter().filter(|(x, y, _)| a[*x] != a[*y]).map(|e| e.2).sum();
            best = Some(best.map_or(cost, |b: u64| b.min(cost)));
        }
        let mut i = 0;
        loop {
            if i == n {
                return best;
            }
            a[i] += 1;
            if a[i] < k {
                break;
            }
            a[i] = 0;
            i += 1;
        }
    }
}

/// One random wiring of single-input, single-output instances.
#[derive(Debug, Clone)]
pub struct RandomSystem {
    pub design: SystemDesign,
    pub packages: BTreeMap<String, llpm::system::Package>,
    /// Clock domain of each instance as the design states it.
    pub domains: BTreeMap<String, String>,
    /// Whether each instance is combinational.
    pub comb: BTreeMap<String, bool>,
}

pub fn random_system<R: Rng>(rng: &mut R, n: usize) -> RandomSystem {
    let packages = BTreeMap::from([
        ("comb".to_string(), package("comb_pass")),
        ("reg".to_string(), package("inc8")),
    ]);
    let mut design = SystemDesign::new("rand");
    let mut domains = BTreeMap::new();
    let mut comb = BTreeMap::new();
    for i in 0..n {
        let name = format!("i{i}");
        let kind = if rng.gen_bool(0.6) { "comb" } else { "reg" };
        let domain = ["clk0", "clk0", "fast", "slow"][rng.gen_range(0..4)];
        design.instances.insert(
            id(&name),
            InstanceSpec {
                package: kind.to_string(),
                clock_domain: (domain != "clk0" || rng.gen_bool(0.5)).then(|| id(domain)),
            },
        );
        domains.insert(name.clone(), domain.to_string());
        comb.insert(name, kind == "comb");
    }
    let mut free: Vec<usize> = (0..n).collect();
    for src in 0..n {
        if free.is_empty() || !rng.gen_bool(0.8) {
            continue;
        }
        let dst = free.swap_remove(rng.gen_range(0..free.len()));
        design.connections.push(ConnectionSpec {
            from: format!("i{src}.o"),
            to: format!("i{dst}.i"),
            fifo_depth: [0, 0, 1, 2][rng.gen_range(0..4)],
            cdc_depth: None,
            name: None,
        });
    }
    RandomSystem { design, packages, domains, comb }
}

impl RandomSystem {
    /// Whether some directed cycle runs only through combinational
    /// instances joined by same-domain, zero-depth connections.
    pub fn has_storage_free_cycle(&self) -> bool {
        let names: Vec<&String> = self.domains.keys().collect();
        let ix = |s: &str| names.iter().position(|n| n.as_str() == s).unwrap();
        let n = names.len();
        let mut reach = vec![vec![false; n]; n];
        for c in &self.design.connections {
            let a = c.from.split('.').next().unwrap();
            let b = c.to.split('.').next().unwrap();
            if c.fifo_depth == 0 && self.domains[a] == self.domains[b] && self.comb[a] && self.comb[b] {
                reach[ix(a)][ix(b)] = true;
            }
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if reach[i][k] && reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
        (0..n).any(|i| reach[i][i])
    }
}
