// SPDX-License-Identifier: Apache-2.0

//! Deterministic cycle-level simulation with seeded Bernoulli sources and
//! sinks.
//!
//! Each cycle has two phases. First every valid, data and ready signal
//! settles: valid and data from the producers forward, then ready from the
//! consumers backward. Then registers update, and a channel transfers a
//! token in that cycle iff valid and ready both hold. Sources keep a token
//! on the wire until it is taken; sinks draw ready anew every cycle.

mod core;
mod equiv;
mod network;
mod system;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Deserialize;
use serde_json::{json, Value as Json};
use thiserror::Error;

use crate::ir::Diagnostic;
use crate::pipeline::PipelinedNetlist;
use crate::types::{decode, encode, value_from_json, value_to_json, HWType, Value};

pub(crate) use self::core::Core;
pub use equiv::{equivalence_check, Actual, Counterexample, Equivalence};
pub use system::{simulate_system, storage_output};
pub(crate) use network::Network;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("stimulus names `{name}`, which is not {role}")]
    UnknownChannel { name: String, role: &'static str },
    #[error("probability {p} for `{channel}` is outside [0, 1]")]
    BadProbability { channel: String, p: f64 },
    #[error("stimulus token {index} for `{channel}`: {reason}")]
    BadToken { channel: String, index: usize, reason: String },
    #[error("instance `{0}` wraps external RTL without a behavioral model")]
    NoModel(String),
    #[error("netlist cannot be simulated: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Diagnostic>),
    #[error("handshake violation on `{channel}` in cycle {cycle}: valid or data changed before ready")]
    Protocol { channel: String, cycle: u64 },
    #[error("valid/data signals do not settle in cycle {cycle}: combinational loop")]
    CombinationalLoop { cycle: u64 },
    #[error("token {index} on `{channel}` is not a valid value of its type")]
    Undecodable { channel: String, index: usize },
    #[error("{0}")]
    Stimulus(String),
}

/// Inputs, source/sink policies and run length for one simulation.
///
/// Source probabilities are the chance a source with tokens left starts
/// presenting one in a cycle; sink probabilities are the chance of ready.
/// Channels without an entry are always-valid / always-ready.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Stimulus {
    pub inputs: BTreeMap<String, Vec<Value>>,
    pub sources: BTreeMap<String, f64>,
    pub sinks: BTreeMap<String, f64>,
    pub seed: u64,
    pub cycles: u64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StimulusFile {
    #[serde(default)]
    inputs: BTreeMap<String, Vec<Json>>,
    #[serde(default)]
    sources: BTreeMap<String, f64>,
    #[serde(default)]
    sinks: BTreeMap<String, f64>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    cycles: Option<u64>,
}

impl Stimulus {
    /// Parses the stimulus file format; token values are read against the
    /// types of the named input channels.
    pub fn from_json(text: &str, input_types: &BTreeMap<String, HWType>) -> Result<Stimulus, SimError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let f: StimulusFile = serde_path_to_error::deserialize(de).map_err(|e| SimError::Stimulus(e.to_string()))?;
        let mut inputs = BTreeMap::new();
        for (name, vals) in f.inputs {
            let ty = input_types.get(&name).ok_or_else(|| SimError::UnknownChannel {
                name: name.clone(),
                role: "an input channel",
            })?;
            let vals = vals
                .iter()
                .enumerate()
                .map(|(index, j)| {
                    value_from_json(j, ty).map_err(|e| SimError::BadToken {
                        channel: name.clone(),
                        index,
                        reason: e.to_string(),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            inputs.insert(name, vals);
        }
        Ok(Stimulus {
            inputs,
            sources: f.sources,
            sinks: f.sinks,
            seed: f.seed.unwrap_or(0),
            cycles: f.cycles.unwrap_or(0),
        })
    }

    /// The streams-only JSON form used for `inputs` in stimulus files.
    pub fn streams_json(streams: &BTreeMap<String, Vec<Value>>) -> Json {
        Json::Object(
            streams
                .iter()
                .map(|(k, v)| (k.clone(), Json::Array(v.iter().map(value_to_json).collect())))
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTrace {
    pub ty: HWType,
    pub tokens: Vec<Value>,
    /// Cycle in which each token transferred.
    pub cycles: Vec<u64>,
    pub transfers: u64,
    pub stall_cycles: u64,
    pub idle_cycles: u64,
}

/// 32-bit wrapping counters kept by a performance tap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TapCounters {
    pub transfers: u32,
    pub stall_cycles: u32,
    pub idle_cycles: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub cycles: u64,
    pub seed: u64,
    pub channels: BTreeMap<String, ChannelTrace>,
    pub taps: BTreeMap<String, TapCounters>,
}

impl Trace {
    pub fn to_json(&self) -> Json {
        let channels: serde_json::Map<String, Json> = self
            .channels
            .iter()
            .map(|(name, c)| {
                (
                    name.clone(),
                    json!({
                        "type": c.ty.to_string(),
                        "tokens": c.tokens.iter().map(value_to_json).collect::<Vec<_>>(),
                        "cycles": c.cycles,
                        "transfers": c.transfers,
                        "stall_cycles": c.stall_cycles,
                        "idle_cycles": c.idle_cycles,
                    }),
                )
            })
            .collect();
        let taps: serde_json::Map<String, Json> = self
            .taps
            .iter()
            .map(|(name, t)| {
                (
                    name.clone(),
                    json!({
                        "transfers": t.transfers,
                        "stall_cycles": t.stall_cycles,
                        "idle_cycles": t.idle_cycles,
                    }),
                )
            })
            .collect();
        json!({
            "cycles": self.cycles,
            "seed": self.seed,
            "channels": channels,
            "taps": taps,
        })
    }
}

pub(crate) fn check_probability(channel: &str, p: f64) -> Result<(), SimError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(SimError::BadProbability {
            channel: channel.to_string(),
            p,
        })
    }
}

/// Attaches stimulus sources and sinks to the named boundary channels.
pub(crate) fn attach_stimulus(
    net: &mut Network,
    inputs: &[(String, usize)],
    outputs: &[(String, usize)],
    stim: &Stimulus,
) -> Result<(), SimError> {
    let is_input = |n: &str| inputs.iter().any(|(k, _)| k == n);
    let is_output = |n: &str| outputs.iter().any(|(k, _)| k == n);
    for name in stim.inputs.keys().chain(stim.sources.keys()) {
        if !is_input(name) {
            return Err(SimError::UnknownChannel {
                name: name.clone(),
                role: "an input channel",
            });
        }
    }
    for name in stim.sinks.keys() {
        if !is_output(name) {
            return Err(SimError::UnknownChannel {
                name: name.clone(),
                role: "an output channel",
            });
        }
    }
    for (name, chan) in inputs {
        let ty = net.chans[*chan].ty.clone();
        let tokens = stim
            .inputs
            .get(name)
            .map(|vs| {
                vs.iter()
                    .enumerate()
                    .map(|(index, v)| {
                        encode(v, &ty).map_err(|e| SimError::BadToken {
                            channel: name.clone(),
                            index,
                            reason: e.to_string(),
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .transpose()?
            .unwrap_or_default();
        let p = stim.sources.get(name).copied().unwrap_or(1.0);
        check_probability(name, p)?;
        net.add_source(*chan, tokens, p);
    }
    for (name, chan) in outputs {
        let p = stim.sinks.get(name).copied().unwrap_or(1.0);
        check_probability(name, p)?;
        net.add_sink(*chan, p);
    }
    net.seal();
    Ok(())
}

/// Runs `cycles` cycles and collects every channel plus the tapped ones.
pub(crate) fn run_network(net: &mut Network, cycles: u64, seed: u64, taps: &[String]) -> Result<Trace, SimError> {
    for _ in 0..cycles {
        net.step()?;
    }
    let mut channels = BTreeMap::new();
    for c in &net.chans {
        let tokens = c
            .tokens
            .iter()
            .enumerate()
            .map(|(index, b)| {
                decode(b, &c.ty).map_err(|_| SimError::Undecodable {
                    channel: c.name.clone(),
                    index,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        channels.insert(
            c.name.clone(),
            ChannelTrace {
                ty: c.ty.clone(),
                transfers: tokens.len() as u64,
                tokens,
                cycles: c.cycles.clone(),
                stall_cycles: c.stall_cycles,
                idle_cycles: c.idle_cycles,
            },
        );
    }
    let taps = taps
        .iter()
        .map(|name| {
            let c = &channels[name];
            (
                name.clone(),
                TapCounters {
                    transfers: c.transfers as u32,
                    stall_cycles: c.stall_cycles as u32,
                    idle_cycles: c.idle_cycles as u32,
                },
            )
        })
        .collect();
    Ok(Trace {
        cycles,
        seed,
        channels,
        taps,
    })
}

/// Builds a network holding one netlist with a source per input and a sink
/// per output. Channels are named after the ports.
pub(crate) fn netlist_network(netlist: &PipelinedNetlist, stim: &Stimulus) -> Result<(Network, Arc<Core>), SimError> {
    let core = Arc::new(Core::new(netlist).map_err(SimError::Invalid)?);
    let mut net = Network::new(stim.seed);
    let ins: Vec<(String, usize)> = core
        .inputs
        .iter()
        .map(|(n, t)| (n.to_string(), net.channel(n.to_string(), t.clone())))
        .collect();
    let outs: Vec<(String, usize)> = core
        .outputs
        .iter()
        .map(|(n, t)| (n.to_string(), net.channel(n.to_string(), t.clone())))
        .collect();
    attach_stimulus(&mut net, &ins, &outs, stim)?;
    net.add_core(
        core.clone(),
        ins.iter().map(|(_, c)| *c).collect(),
        outs.iter().map(|(_, c)| *c).collect(),
    );
    Ok((net, core))
}

/// Simulates one pipelined netlist.
pub fn simulate(netlist: &PipelinedNetlist, stim: &Stimulus) -> Result<Trace, SimError> {
    let (mut net, _) = netlist_network(netlist, stim)?;
    run_network(&mut net, stim.cycles, stim.seed, &[])
}

#[cfg(test)]
mod tests;
