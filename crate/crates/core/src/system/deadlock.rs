// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};

use super::{AssembledSystem, Storage};
use crate::types::Ident;

/// Directed cycles of direct wires through combinational instances. Each
/// cycle is listed once, starting from its smallest instance name.
pub fn check_deadlock(sys: &AssembledSystem) -> Vec<Vec<Ident>> {
    let comb: BTreeSet<&Ident> = sys.instances.iter().filter(|i| !i.is_registered()).map(|i| &i.name).collect();
    let mut succ: BTreeMap<&Ident, BTreeSet<&Ident>> = BTreeMap::new();
    for c in &sys.connections {
        if c.storage == Storage::Wire && comb.contains(&c.from.instance) && comb.contains(&c.to.instance) {
            succ.entry(&c.from.instance).or_default().insert(&c.to.instance);
        }
    }
    let mut cycles = Vec::new();
    for &start in &comb {
        let mut path = vec![start];
        let mut stack = vec![succ.get(start).map(|s| s.iter().copied().collect::<Vec<_>>()).unwrap_or_default()];
        while let Some(frontier) = stack.last_mut() {
            match frontier.pop() {
                None => {
                    stack.pop();
                    path.pop();
                }
                Some(next) if next == start => cycles.push(path.iter().map(|&n| n.clone()).collect()),
                Some(next) if next < start || path.contains(&next) => {}
                Some(next) => {
                    path.push(next);
                    stack.push(succ.get(next).map(|s| s.iter().copied().collect()).unwrap_or_default());
                }
            }
        }
    }
    cycles.sort();
    cycles
}
