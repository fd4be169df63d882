// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

use super::{design::endpoint, Package, SystemDesign, SystemError};

/// Largest instance count solved exactly.
pub const EXACT_LIMIT: usize = 12;
const RESTARTS: usize = 8;
const EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionSpec {
    pub capacities: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
}

impl PartitionSpec {
    pub fn new(capacities: Vec<f64>) -> Self {
        PartitionSpec { capacities, seed: 0 }
    }

    pub fn k(&self) -> usize {
        self.capacities.len()
    }
}

/// A weighted graph to split: vertex areas and undirected edge widths.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PartitionProblem {
    pub names: Vec<String>,
    pub areas: Vec<f64>,
    pub edges: Vec<(usize, usize, u64)>,
}

impl PartitionProblem {
    pub fn len(&self) -> usize {
        self.areas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.areas.is_empty()
    }

    /// Σ width over edges whose endpoints land in different parts.
    pub fn cut_cost(&self, assignment: &[usize]) -> u64 {
        self.edges
            .iter()
            .filter(|(a, b, _)| assignment[*a] != assignment[*b])
            .map(|e| e.2)
            .sum()
    }

    pub fn loads(&self, assignment: &[usize], k: usize) -> Vec<f64> {
        let mut loads = vec![0.0; k];
        for (v, &p) in assignment.iter().enumerate() {
            loads[p] += self.areas[v];
        }
        loads
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionMethod {
    Exact,
    Heuristic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionResult {
    pub method: PartitionMethod,
    pub cost: u64,
    /// Part index per vertex, in problem order.
    pub assignment: Vec<usize>,
    pub loads: Vec<f64>,
    pub names: Vec<String>,
}

impl PartitionResult {
    pub fn to_json(&self) -> Json {
        let assignment: BTreeMap<&str, usize> = self.names.iter().map(String::as_str).zip(self.assignment.iter().copied()).collect();
        serde_json::json!({
            "method": self.method,
            "cost": self.cost,
            "assignment": assignment,
            "loads": self.loads,
        })
    }
}

/// Splits the instances of a design across devices of the given
/// capacities, minimizing the total width of cut connections.
pub fn partition(
    design: &SystemDesign,
    packages: &BTreeMap<String, Package>,
    spec: &PartitionSpec,
) -> Result<PartitionResult, SystemError> {
    let names: Vec<String> = design.instances.keys().map(|n| n.to_string()).collect();
    let mut areas = Vec::new();
    for (name, inst) in &design.instances {
        let p = packages
            .get(&inst.package)
            .ok_or_else(|| SystemError::Schema(format!("instances.{name}: package `{}` not loaded", inst.package)))?;
        areas.push(p.area_estimate);
    }
    let index = |text: &str| -> Result<(usize, u64), SystemError> {
        let (inst, port) = endpoint(text)?;
        let i = names
            .iter()
            .position(|n| n == inst)
            .ok_or_else(|| SystemError::UnknownInstance(inst.to_string()))?;
        let pkg = &packages[&design.instances[inst].package];
        let p = pkg.module.port(port).ok_or_else(|| SystemError::UnknownPort {
            instance: inst.to_string(),
            port: port.to_string(),
        })?;
        Ok((i, p.ty.bit_width()))
    };
    let mut edges = Vec::new();
    for c in &design.connections {
        let (a, w) = index(&c.from)?;
        let (b, _) = index(&c.to)?;
        edges.push((a, b, w));
    }
    partition_graph(&PartitionProblem { names, areas, edges }, spec)
}

struct Graph {
    adj: Vec<Vec<(usize, u64)>>,
}

impl Graph {
    fn new(p: &PartitionProblem) -> Graph {
        let mut m: Vec<BTreeMap<usize, u64>> = vec![BTreeMap::new(); p.len()];
        for &(a, b, w) in &p.edges {
            if a != b {
                *m[a].entry(b).or_default() += w;
                *m[b].entry(a).or_default() += w;
            }
        }
        Graph {
            adj: m.into_iter().map(|x| x.into_iter().collect()).collect(),
        }
    }

    /// Edge weight from `v` into each part.
    fn affinity(&self, v: usize, asg: &[usize], k: usize) -> Vec<i64> {
        let mut a = vec![0i64; k];
        for &(u, w) in &self.adj[v] {
            if asg[u] != usize::MAX {
                a[asg[u]] += w as i64;
            }
        }
        a
    }

    fn weight(&self, u: usize, v: usize) -> i64 {
        self.adj[u].iter().find(|e| e.0 == v).map_or(0, |e| e.1 as i64)
    }
}

pub fn partition_graph(problem: &PartitionProblem, spec: &PartitionSpec) -> Result<PartitionResult, SystemError> {
    let k = spec.k();
    if k == 0 {
        return Err(SystemError::Partition("at least one partition is required".into()));
    }
    if let Some(c) = spec.capacities.iter().find(|c| !c.is_finite() || **c < 0.0) {
        return Err(SystemError::Partition(format!("capacity {c} is not a nonnegative number")));
    }
    if let Some(a) = problem.areas.iter().find(|a| !a.is_finite() || **a < 0.0) {
        return Err(SystemError::Partition(format!("area {a} is not a nonnegative number")));
    }
    if problem.edges.iter().any(|&(a, b, _)| a >= problem.len() || b >= problem.len()) {
        return Err(SystemError::Partition("edge names a missing vertex".into()));
    }
    let total: f64 = problem.areas.iter().sum();
    let room: f64 = spec.capacities.iter().sum();
    if total > room + EPS {
        return Err(SystemError::Partition(format!("total area {total} exceeds total capacity {room}")));
    }
    let graph = Graph::new(problem);
    let (method, assignment) = if problem.len() <= EXACT_LIMIT {
        (PartitionMethod::Exact, exact(problem, &graph, &spec.capacities))
    } else {
        (PartitionMethod::Heuristic, heuristic(problem, &graph, spec))
    };
    let assignment = assignment.ok_or_else(|| SystemError::Partition("no assignment fits the capacities".into()))?;
    Ok(PartitionResult {
        method,
        cost: problem.cut_cost(&assignment),
        loads: problem.loads(&assignment, k),
        assignment,
        names: problem.names.clone(),
    })
}

struct Search<'a> {
    graph: &'a Graph,
    areas: &'a [f64],
    caps: &'a [f64],
    order: Vec<usize>,
    asg: Vec<usize>,
    loads: Vec<f64>,
    best: Option<(u64, Vec<usize>)>,
}

impl Search<'_> {
    fn run(&mut self, depth: usize, cost: u64) {
        if self.best.as_ref().is_some_and(|b| cost >= b.0) {
            return;
        }
        if depth == self.order.len() {
            self.best = Some((cost, self.asg.clone()));
            return;
        }
        let v = self.order[depth];
        let aff = self.graph.affinity(v, &self.asg, self.caps.len());
        let placed: i64 = aff.iter().sum();
        let mut parts: Vec<usize> = (0..self.caps.len()).collect();
        parts.sort_by_key(|&p| std::cmp::Reverse(aff[p]));
        let mut tried_empty: Vec<f64> = Vec::new();
        for p in parts {
            if self.loads[p] + self.areas[v] > self.caps[p] + EPS {
                continue;
            }
            // Empty parts of equal capacity are interchangeable.
            if self.loads[p] == 0.0 && !self.asg.contains(&p) {
                if tried_empty.contains(&self.caps[p]) {
                    continue;
                }
                tried_empty.push(self.caps[p]);
            }
            self.asg[v] = p;
            self.loads[p] += self.areas[v];
            self.run(depth + 1, cost + (placed - aff[p]) as u64);
            self.loads[p] -= self.areas[v];
            self.asg[v] = usize::MAX;
        }
    }
}

/// Branch and bound over all assignments.
fn exact(problem: &PartitionProblem, graph: &Graph, caps: &[f64]) -> Option<Vec<usize>> {
    let mut order: Vec<usize> = (0..problem.len()).collect();
    order.sort_by(|&a, &b| {
        let da: u64 = graph.adj[a].iter().map(|e| e.1).sum();
        let db: u64 = graph.adj[b].iter().map(|e| e.1).sum();
        db.cmp(&da).then(a.cmp(&b))
    });
    let mut s = Search {
        graph,
        areas: &problem.areas,
        caps,
        order,
        asg: vec![usize::MAX; problem.len()],
        loads: vec![0.0; caps.len()],
        best: None,
    };
    s.run(0, 0);
    s.best.map(|b| b.1)
}

fn heuristic(problem: &PartitionProblem, graph: &Graph, spec: &PartitionSpec) -> Option<Vec<usize>> {
    let mut master = ChaCha8Rng::seed_from_u64(spec.seed);
    let seeds: Vec<u64> = (0..RESTARTS).map(|_| master.gen()).collect();
    seeds
        .into_iter()
        .filter_map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let mut asg = greedy(problem, graph, &spec.capacities, &mut rng)?;
            refine(problem, graph, &spec.capacities, &mut asg);
            Some((problem.cut_cost(&asg), asg))
        })
        .min_by_key(|x| x.0)
        .map(|x| x.1)
}

/// Places vertices largest first into the feasible part they are most
/// connected to, breaking ties at random.
fn greedy(problem: &PartitionProblem, graph: &Graph, caps: &[f64], rng: &mut ChaCha8Rng) -> Option<Vec<usize>> {
    let k = caps.len();
    let mut order: Vec<usize> = (0..problem.len()).collect();
    order.shuffle(rng);
    order.sort_by(|&a, &b| problem.areas[b].total_cmp(&problem.areas[a]));
    let mut asg = vec![usize::MAX; problem.len()];
    let mut loads = vec![0.0; k];
    for v in order {
        let aff = graph.affinity(v, &asg, k);
        let mut parts: Vec<usize> = (0..k).filter(|&p| loads[p] + problem.areas[v] <= caps[p] + EPS).collect();
        parts.shuffle(rng);
        let p = parts.into_iter().max_by(|&a, &b| {
            aff[a]
                .cmp(&aff[b])
                .then((caps[a] - loads[a]).total_cmp(&(caps[b] - loads[b])))
        })?;
        asg[v] = p;
        loads[p] += problem.areas[v];
    }
    Some(asg)
}

/// Fiduccia–Mattheyses passes over single-vertex moves, then improving
/// pairwise swaps, until neither lowers the cut.
fn refine(problem: &PartitionProblem, graph: &Graph, caps: &[f64], asg: &mut [usize]) {
    let k = caps.len();
    let n = problem.len();
    let areas = &problem.areas;
    let mut loads = problem.loads(asg, k);
    let fits = |loads: &[f64], p: usize, a: f64| loads[p] + a <= caps[p] + EPS;
    loop {
        let mut locked = vec![false; n];
        let mut gain = 0i64;
        let mut best = (0i64, 0usize);
        let mut moves: Vec<(usize, usize, usize)> = Vec::new();
        loop {
            let mut pick: Option<(i64, usize, usize)> = None;
            for v in (0..n).filter(|&v| !locked[v]) {
                let aff = graph.affinity(v, asg, k);
                for p in (0..k).filter(|&p| p != asg[v] && fits(&loads, p, areas[v])) {
                    let g = aff[p] - aff[asg[v]];
                    if pick.is_none_or(|b| g > b.0) {
                        pick = Some((g, v, p));
                    }
                }
            }
            let Some((g, v, p)) = pick else { break };
            moves.push((v, asg[v], p));
            loads[asg[v]] -= areas[v];
            loads[p] += areas[v];
            asg[v] = p;
            locked[v] = true;
            gain += g;
            if gain > best.0 {
                best = (gain, moves.len());
            }
        }
        for &(v, from, to) in moves[best.1..].iter().rev() {
            loads[to] -= areas[v];
            loads[from] += areas[v];
            asg[v] = from;
        }
        let mut swapped = false;
        for v in 0..n {
            for u in v + 1..n {
                let (a, b) = (asg[v], asg[u]);
                if a == b
                    || loads[b] - areas[u] + areas[v] > caps[b] + EPS
                    || loads[a] - areas[v] + areas[u] > caps[a] + EPS
                {
                    continue;
                }
                let av = graph.affinity(v, asg, k);
                let au = graph.affinity(u, asg, k);
                let g = av[b] - av[a] + au[a] - au[b] - 2 * graph.weight(u, v);
                if g > 0 {
                    loads[a] += areas[u] - areas[v];
                    loads[b] += areas[v] - areas[u];
                    asg.swap(v, u);
                    swapped = true;
                }
            }
        }
        if best.0 == 0 && !swapped {
            break;
        }
    }
}
