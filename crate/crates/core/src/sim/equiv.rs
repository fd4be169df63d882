// SPDX-License-Identifier: Apache-2.0

//! Randomized check that a netlist reproduces the interpreter's streams.

use std::fmt;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{netlist_network, SimError, Stimulus};
use crate::interp::{run, InterpError, TokenStreams};
use crate::ir::Module;
use crate::pipeline::PipelinedNetlist;
use crate::types::{decode, encode, random_value, BitPattern, Value};

const SINK_STALL: [f64; 4] = [0.0, 0.3, 0.7, 1.0];
const SOURCE_STALL: [f64; 3] = [0.0, 0.3, 0.7];

/// What the netlist produced where the interpreter expected a token.
#[derive(Debug, Clone, PartialEq)]
pub enum Actual {
    Token(Value),
    /// A token whose bits are not a valid value of the channel type.
    Bits(BitPattern),
    /// The run ended before the token appeared.
    Missing,
    /// The output dropped or changed a token before it was accepted, in the
    /// given cycle.
    Unstable { cycle: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Counterexample {
    pub trial: u64,
    pub trial_seed: u64,
    pub channel: String,
    pub index: usize,
    pub expected: Value,
    pub actual: Actual,
}

impl fmt::Display for Counterexample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "trial {} (seed {:#018x}): `{}` token {}: expected {}, got ",
            self.trial,
            self.trial_seed,
            self.channel,
            self.index,
            crate::types::value_to_json(&self.expected)
        )?;
        match &self.actual {
            Actual::Token(v) => write!(f, "{}", crate::types::value_to_json(v)),
            Actual::Bits(b) => write!(f, "undecodable bits {b:?}"),
            Actual::Missing => f.write_str("no token"),
            Actual::Unstable { cycle } => write!(f, "a token withdrawn before it was accepted (cycle {cycle})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Equivalence {
    Pass { trials: u64 },
    Counterexample(Counterexample),
}

impl Equivalence {
    pub fn passed(&self) -> bool {
        matches!(self, Equivalence::Pass { .. })
    }
}

/// Runs `trials` random trials. Each draws a stream length in 1..=24,
/// random well-typed input tokens, a source stall probability per input
/// from {0, 0.3, 0.7} and a sink stall probability per output from
/// {0, 0.3, 0.7, 1}. A trial passes when every output's tokens equal the
/// interpreter's; outputs whose sink never accepts are only checked to be
/// empty.
pub fn equivalence_check(
    module: &Module,
    netlist: &PipelinedNetlist,
    trials: u64,
    seed: u64,
) -> Result<Equivalence, SimError> {
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    for trial in 0..trials {
        let trial_seed = master.next_u64();
        if let Some(cex) = run_trial(module, netlist, trial, trial_seed)? {
            return Ok(Equivalence::Counterexample(cex));
        }
    }
    Ok(Equivalence::Pass { trials })
}

fn run_trial(
    module: &Module,
    netlist: &PipelinedNetlist,
    trial: u64,
    trial_seed: u64,
) -> Result<Option<Counterexample>, SimError> {
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
    let n: usize = rng.gen_range(1..=24);
    let mut streams = TokenStreams::new();
    let mut stim = Stimulus {
        seed: rng.next_u64(),
        ..Stimulus::default()
    };
    for p in module.inputs() {
        let vals: Vec<Value> = (0..n).map(|_| random_value(&p.ty, &mut rng)).collect();
        let stall = SOURCE_STALL[rng.gen_range(0..SOURCE_STALL.len())];
        stim.sources.insert(p.name.to_string(), 1.0 - stall);
        stim.inputs.insert(p.name.to_string(), vals.clone());
        streams.insert(p.name.clone(), vals);
    }
    for p in module.outputs() {
        let stall = SINK_STALL[rng.gen_range(0..SINK_STALL.len())];
        stim.sinks.insert(p.name.to_string(), 1.0 - stall);
    }
    let expected = match run(module, &streams, n) {
        Ok(e) => e,
        Err(InterpError::Invalid(d)) => return Err(SimError::Invalid(d)),
        Err(e) => return Err(SimError::Stimulus(e.to_string())),
    };
    let (mut net, core) = netlist_network(netlist, &stim)?;
    let outs: Vec<(usize, bool)> = core
        .outputs
        .iter()
        .map(|(name, _)| {
            let chan = net.find(name).expect("output channel");
            (chan, stim.sinks[name.as_str()] > 0.0)
        })
        .collect();
    let budget = 64 * (n as u64 + core.latency() as u64 + 4);
    let blocked = outs.iter().any(|(_, live)| !live);
    let fixed = 4 * (n as u64 + core.latency() as u64 + 4);
    loop {
        let done = if blocked {
            net.cycle >= fixed
        } else {
            outs.iter().all(|(c, _)| net.chans[*c].tokens.len() >= n)
        };
        if done || net.cycle >= budget {
            break;
        }
        match net.step() {
            Ok(()) => {}
            Err(SimError::Protocol { channel, cycle }) if core.outputs.iter().any(|(n, _)| n.as_str() == channel) => {
                let c = &net.chans[net.find(&channel).unwrap()];
                let index = c.tokens.len();
                let out = core.outputs.iter().find(|(n, _)| n.as_str() == channel).unwrap();
                let expected = expected[&out.0].get(index).cloned().unwrap_or(Value::Unit);
                return Ok(Some(Counterexample {
                    trial,
                    trial_seed,
                    channel,
                    index,
                    expected,
                    actual: Actual::Unstable { cycle },
                }));
            }
            Err(e) => return Err(e),
        }
    }
    for (name, _) in &core.outputs {
        let chan = &net.chans[net.find(name).unwrap()];
        let exp = &expected[name];
        let ty = &chan.ty;
        for (index, e) in exp.iter().enumerate() {
            let actual = match chan.tokens.get(index) {
                None if blocked => break,
                None => Actual::Missing,
                Some(bits) if *bits == encode(e, ty).expect("interpreter output is well-typed") => continue,
                Some(bits) => match decode(bits, ty) {
                    Ok(v) => Actual::Token(v),
                    Err(_) => Actual::Bits(bits.clone()),
                },
            };
            return Ok(Some(Counterexample {
                trial,
                trial_seed,
                channel: name.to_string(),
                index,
                expected: e.clone(),
                actual,
            }));
        }
    }
    Ok(None)
}
