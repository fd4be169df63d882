// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

use super::{AssembledSystem, SystemError};
use crate::ir::Direction;
use crate::sim::TapCounters;
use crate::types::HWType;

pub const BRIDGE_WORD_BITS: u32 = 32;
const WORD_BYTES: u64 = 4;
const ALIGN: u64 = 16;
pub const API_MAP_VERSION: u32 = 1;

/// Register block for one exposed channel. Data words come first, LSB
/// word at `base`, then the status word, then the control word.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BridgeChannel {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: HWType,
    pub direction: Direction,
    pub base: u64,
    pub data_words: u64,
    pub status: u64,
    pub control: u64,
}

impl BridgeChannel {
    pub fn words(&self) -> u64 {
        self.data_words + 2
    }

    pub fn end(&self) -> u64 {
        self.base + self.words() * WORD_BYTES
    }
}

/// Read-only counters for one perf tap: transfers, stall and idle cycles.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CounterRegion {
    pub channel: String,
    pub base: u64,
    pub transfers: u64,
    pub stall_cycles: u64,
    pub idle_cycles: u64,
}

impl CounterRegion {
    pub fn end(&self) -> u64 {
        self.base + 3 * WORD_BYTES
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HostBridgeMap {
    pub word_bits: u32,
    pub channels: Vec<BridgeChannel>,
    pub counters: Vec<CounterRegion>,
}

fn align(addr: u64) -> u64 {
    addr.div_ceil(ALIGN) * ALIGN
}

impl HostBridgeMap {
    /// Lays out `channels` in name order followed by one counter block per
    /// tap, also in name order.
    pub fn layout(channels: &[(String, HWType, Direction)], taps: &[String]) -> HostBridgeMap {
        let mut chans = channels.to_vec();
        chans.sort_by(|a, b| a.0.cmp(&b.0));
        let mut taps = taps.to_vec();
        taps.sort();
        let mut next = 0;
        let mut out = HostBridgeMap {
            word_bits: BRIDGE_WORD_BITS,
            channels: Vec::new(),
            counters: Vec::new(),
        };
        for (name, ty, direction) in chans {
            let data_words = ty.bit_width().div_ceil(u64::from(BRIDGE_WORD_BITS));
            let base = align(next);
            let c = BridgeChannel {
                name,
                ty,
                direction,
                base,
                data_words,
                status: base + data_words * WORD_BYTES,
                control: base + (data_words + 1) * WORD_BYTES,
            };
            next = c.end();
            out.channels.push(c);
        }
        for channel in taps {
            let base = align(next);
            let c = CounterRegion {
                channel,
                base,
                transfers: base,
                stall_cycles: base + WORD_BYTES,
                idle_cycles: base + 2 * WORD_BYTES,
            };
            next = c.end();
            out.counters.push(c);
        }
        out
    }

    /// Every region as (name, base, end), in address order.
    pub fn regions(&self) -> Vec<(&str, u64, u64)> {
        let mut r: Vec<_> = self
            .channels
            .iter()
            .map(|c| (c.name.as_str(), c.base, c.end()))
            .chain(self.counters.iter().map(|c| (c.channel.as_str(), c.base, c.end())))
            .collect();
        r.sort_by_key(|x| x.1);
        r
    }

    /// Total address space in bytes.
    pub fn size(&self) -> u64 {
        self.regions().last().map_or(0, |r| align(r.2))
    }

    /// Reads a counter word given the counters of a simulation run.
    pub fn read_word(&self, addr: u64, taps: &BTreeMap<String, TapCounters>) -> Option<u32> {
        self.counters.iter().find_map(|c| {
            let t = taps.get(&c.channel)?;
            match addr {
                a if a == c.transfers => Some(t.transfers),
                a if a == c.stall_cycles => Some(t.stall_cycles),
                a if a == c.idle_cycles => Some(t.idle_cycles),
                _ => None,
            }
        })
    }

    /// The host API description: layout plus canonical type text.
    pub fn to_json(&self) -> Json {
        let Json::Object(body) = serde_json::to_value(self).expect("bridge map serializes") else {
            unreachable!("bridge map serializes to an object")
        };
        let mut j = serde_json::Map::from_iter([("llpm_api_map".to_string(), Json::from(API_MAP_VERSION))]);
        j.extend(body);
        Json::Object(j)
    }

    pub fn from_json(text: &str) -> Result<HostBridgeMap, SystemError> {
        let mut raw: Json = serde_json::from_str(text).map_err(|e| SystemError::Schema(e.to_string()))?;
        match raw.as_object_mut().and_then(|o| o.remove("llpm_api_map")).and_then(|v| v.as_u64()) {
            Some(v) if v == u64::from(API_MAP_VERSION) => {}
            Some(v) => return Err(SystemError::Schema(format!("unsupported llpm_api_map version {v}"))),
            None => return Err(SystemError::Schema("missing `llpm_api_map` version field".into())),
        }
        serde_path_to_error::deserialize(raw).map_err(|e| SystemError::Schema(e.to_string()))
    }
}

/// Exposes exported channels through the host bridge and returns the
/// resulting map, which also covers every perf tap.
pub fn synth_host_bridge(sys: &mut AssembledSystem, channels: &[String]) -> Result<HostBridgeMap, SystemError> {
    let mut exposed = Vec::new();
    let mut domain = None;
    for name in channels {
        if exposed.iter().any(|(n, _, _)| n == name) {
            continue;
        }
        let Some(e) = sys.export(name) else {
            return Err(if sys.connection(name).is_some() {
                SystemError::Bridge(format!("`{name}` is a connected channel; only exported ports can be exposed"))
            } else {
                SystemError::UnknownChannel(name.clone())
            });
        };
        match &domain {
            None => domain = Some(e.clock_domain.clone()),
            Some(d) if *d != e.clock_domain => {
                return Err(SystemError::Bridge(format!(
                    "`{name}` is in clock domain `{}` but the bridge runs in `{d}`",
                    e.clock_domain
                )))
            }
            _ => {}
        }
        exposed.push((name.clone(), e.ty.clone(), e.direction));
    }
    let mut names: Vec<String> = exposed.iter().map(|e| e.0.clone()).collect();
    names.sort();
    sys.host_bridge = names;
    Ok(HostBridgeMap::layout(&exposed, &sys.perf_taps))
}

impl AssembledSystem {
    /// The bridge map for the channels already exposed, if any.
    pub fn bridge_map(&self) -> Option<HostBridgeMap> {
        if self.host_bridge.is_empty() {
            return None;
        }
        let chans: Vec<_> = self
            .host_bridge
            .iter()
            .filter_map(|n| self.export(n).map(|e| (n.clone(), e.ty.clone(), e.direction)))
            .collect();
        Some(HostBridgeMap::layout(&chans, &self.perf_taps))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::parse_type;

    fn chan(name: &str, ty: &str) -> (String, HWType, Direction) {
        (name.into(), parse_type(ty).unwrap(), Direction::Out)
    }

    #[test]
    fn forty_bit_channel() {
        let m = HostBridgeMap::layout(&[chan("x", "uint<40>")], &[]);
        let c = &m.channels[0];
        assert_eq!((c.base, c.data_words, c.words()), (0, 2, 4));
        assert_eq!((c.status, c.control), (8, 12));
    }

    #[test]
    fn name_order_and_void() {
        let m = HostBridgeMap::layout(&[chan("b", "uint<8>"), chan("a", "void")], &["t".into()]);
        assert_eq!(m.channels[0].name, "a");
        assert_eq!(m.channels[0].data_words, 0);
        assert_eq!(m.channels[1].base, 16);
        assert_eq!(m.counters[0].base, 32);
        let mut taps = BTreeMap::new();
        taps.insert(
            "t".to_string(),
            TapCounters {
                transfers: 5,
                stall_cycles: 2,
                idle_cycles: 9,
            },
        );
        assert_eq!(m.read_word(36, &taps), Some(2));
        assert_eq!(m.read_word(0, &taps), None);
        let back = HostBridgeMap::from_json(&m.to_json().to_string()).unwrap();
        assert_eq!(back, m);
    }
}
