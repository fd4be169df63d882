// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::sync::Arc;

use super::{attach_stimulus, run_network, Core, Network, SimError, Stimulus, Trace};
use crate::ir::Direction;
use crate::system::{AssembledSystem, Endpoint, Storage};

/// Name of the consumer-side channel behind a FIFO or CDC FIFO.
pub fn storage_output(connection: &str) -> String {
    format!("{connection}:out")
}

/// Simulates an assembled system. Stimulus names refer to exported
/// channels; every clock domain advances on the same simulated clock.
pub fn simulate_system(sys: &AssembledSystem, stim: &Stimulus) -> Result<Trace, SimError> {
    let mut net = Network::new(stim.seed);
    let mut ports: BTreeMap<Endpoint, usize> = BTreeMap::new();
    for c in &sys.connections {
        let prod = net.channel(c.name.to_string(), c.ty.clone());
        let cons = match &c.storage {
            Storage::Wire => prod,
            Storage::Fifo { depth } => {
                let out = net.channel(storage_output(&c.name), c.ty.clone());
                net.add_fifo(*depth as usize, prod, out);
                out
            }
            Storage::Cdc { depth, .. } => {
                let out = net.channel(storage_output(&c.name), c.ty.clone());
                net.add_cdc(*depth, prod, out);
                out
            }
        };
        ports.insert(c.from.clone(), prod);
        ports.insert(c.to.clone(), cons);
    }
    let mut ins = Vec::new();
    let mut outs = Vec::new();
    for e in &sys.exports {
        let ch = net.channel(e.name.to_string(), e.ty.clone());
        ports.insert(
            Endpoint {
                instance: e.instance.clone(),
                port: e.port.clone(),
            },
            ch,
        );
        match e.direction {
            Direction::In => ins.push((e.name.to_string(), ch)),
            Direction::Out => outs.push((e.name.to_string(), ch)),
        }
    }
    for inst in &sys.instances {
        let netlist = inst.netlist.as_ref().ok_or_else(|| SimError::NoModel(inst.name.to_string()))?;
        let core = Arc::new(Core::new(netlist).map_err(SimError::Invalid)?);
        let chan = |port: &crate::types::Ident| {
            ports[&Endpoint {
                instance: inst.name.clone(),
                port: port.clone(),
            }]
        };
        let i = core.inputs.iter().map(|(n, _)| chan(n)).collect();
        let o = core.outputs.iter().map(|(n, _)| chan(n)).collect();
        net.add_core(core, i, o);
    }
    attach_stimulus(&mut net, &ins, &outs, stim)?;
    run_network(&mut net, stim.cycles, stim.seed, &sys.perf_taps)
}
