// SPDX-License-Identifier: Apache-2.0

//! Two-phase cycle engine over cores, FIFOs and stimulus endpoints joined by
//! ready/valid channels.

use std::collections::VecDeque;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::core::{Core, CoreEval, CoreState};
use super::SimError;
use crate::types::{BitPattern, HWType};

pub(crate) type ChanId = usize;

#[derive(Debug, Clone)]
pub(crate) struct Channel {
    pub name: String,
    pub ty: HWType,
    pub valid: bool,
    pub ready: bool,
    pub data: BitPattern,
    /// Data a stalled producer must keep presenting next cycle.
    hold: Option<BitPattern>,
    pub tokens: Vec<BitPattern>,
    pub cycles: Vec<u64>,
    pub stall_cycles: u64,
    pub idle_cycles: u64,
}

impl Channel {
    fn transfer(&self) -> bool {
        self.valid && self.ready
    }
}

#[derive(Debug, Clone)]
enum Element {
    Core {
        core: Arc<Core>,
        st: CoreState,
        ev: CoreEval,
        /// Inputs the cached evaluation was computed from.
        seen: Option<(Vec<bool>, Vec<BitPattern>)>,
        ins: Vec<ChanId>,
        outs: Vec<ChanId>,
    },
    Fifo {
        depth: usize,
        q: VecDeque<BitPattern>,
        input: ChanId,
        output: ChanId,
    },
    /// Dual-clock FIFO with both pointers crossing through two flops.
    Cdc {
        depth: u64,
        q: VecDeque<BitPattern>,
        wp: u64,
        rp: u64,
        wp_sync: [u64; 2],
        rp_sync: [u64; 2],
        input: ChanId,
        output: ChanId,
    },
    Source {
        chan: ChanId,
        tokens: Vec<BitPattern>,
        next: usize,
        presenting: bool,
        p: f64,
    },
    Sink {
        chan: ChanId,
        p: f64,
        ready: bool,
    },
}

#[derive(Debug, Clone)]
pub(crate) struct Network {
    pub chans: Vec<Channel>,
    elems: Vec<Element>,
    rng: ChaCha8Rng,
    pub cycle: u64,
    /// Source and sink element indices in draw order.
    draw_order: Vec<usize>,
}

impl Network {
    pub(crate) fn new(seed: u64) -> Self {
        Network {
            chans: Vec::new(),
            elems: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            cycle: 0,
            draw_order: Vec::new(),
        }
    }

    pub(crate) fn channel(&mut self, name: impl Into<String>, ty: HWType) -> ChanId {
        let w = ty.bit_width();
        self.chans.push(Channel {
            name: name.into(),
            ty,
            valid: false,
            ready: false,
            data: BitPattern::zeros(w),
            hold: None,
            tokens: Vec::new(),
            cycles: Vec::new(),
            stall_cycles: 0,
            idle_cycles: 0,
        });
        self.chans.len() - 1
    }

    pub(crate) fn find(&self, name: &str) -> Option<ChanId> {
        self.chans.iter().position(|c| c.name == name)
    }

    pub(crate) fn add_core(&mut self, core: Arc<Core>, ins: Vec<ChanId>, outs: Vec<ChanId>) {
        let st = core.reset();
        self.elems.push(Element::Core {
            core,
            st,
            ev: CoreEval::default(),
            seen: None,
            ins,
            outs,
        });
    }

    pub(crate) fn add_fifo(&mut self, depth: usize, input: ChanId, output: ChanId) {
        self.elems.push(Element::Fifo {
            depth,
            q: VecDeque::new(),
            input,
            output,
        });
    }

    pub(crate) fn add_cdc(&mut self, depth: u64, input: ChanId, output: ChanId) {
        self.elems.push(Element::Cdc {
            depth,
            q: VecDeque::new(),
            wp: 0,
            rp: 0,
            wp_sync: [0; 2],
            rp_sync: [0; 2],
            input,
            output,
        });
    }

    pub(crate) fn add_source(&mut self, chan: ChanId, tokens: Vec<BitPattern>, p: f64) {
        self.elems.push(Element::Source {
            chan,
            tokens,
            next: 0,
            presenting: false,
            p,
        });
    }

    pub(crate) fn add_sink(&mut self, chan: ChanId, p: f64) {
        self.elems.push(Element::Sink { chan, p, ready: false });
    }

    /// Fixes the random draw order: sources then sinks, each by channel name.
    pub(crate) fn seal(&mut self) {
        let key = |e: &Element, chans: &[Channel]| match e {
            Element::Source { chan, .. } => Some((0, chans[*chan].name.clone())),
            Element::Sink { chan, .. } => Some((1, chans[*chan].name.clone())),
            _ => None,
        };
        let mut order: Vec<(usize, (i32, String))> = self
            .elems
            .iter()
            .enumerate()
            .filter_map(|(i, e)| key(e, &self.chans).map(|k| (i, k)))
            .collect();
        order.sort_by(|a, b| a.1.cmp(&b.1));
        self.draw_order = order.into_iter().map(|(i, _)| i).collect();
    }

    fn draw(&mut self) {
        for &i in &self.draw_order {
            match &mut self.elems[i] {
                Element::Source {
                    tokens, next, presenting, p, ..
                } => {
                    if !*presenting && *next < tokens.len() {
                        *presenting = bernoulli(&mut self.rng, *p);
                    }
                }
                Element::Sink { p, ready, .. } => *ready = bernoulli(&mut self.rng, *p),
                _ => {}
            }
        }
    }

    /// One clock cycle: draw, settle valid/data, settle ready, record,
    /// update state.
    pub(crate) fn step(&mut self) -> Result<(), SimError> {
        self.draw();
        self.settle_forward()?;
        self.settle_ready();
        let cycle = self.cycle;
        for c in &mut self.chans {
            if let Some(h) = &c.hold {
                if !c.valid || &c.data != h {
                    return Err(SimError::Protocol {
                        channel: c.name.clone(),
                        cycle,
                    });
                }
            }
            if c.transfer() {
                c.tokens.push(c.data.clone());
                c.cycles.push(cycle);
                c.hold = None;
            } else if c.valid {
                c.stall_cycles += 1;
                c.hold = Some(c.data.clone());
            } else {
                c.idle_cycles += 1;
                c.hold = None;
            }
        }
        self.clock();
        self.cycle += 1;
        Ok(())
    }

    fn settle_forward(&mut self) -> Result<(), SimError> {
        for c in &mut self.chans {
            c.valid = false;
        }
        let limit = self.elems.len() + 2;
        for _ in 0..limit {
            let mut changed = false;
            for e in &mut self.elems {
                changed |= forward(e, &mut self.chans);
            }
            if !changed {
                return Ok(());
            }
        }
        Err(SimError::CombinationalLoop { cycle: self.cycle })
    }

    fn settle_ready(&mut self) {
        for c in &mut self.chans {
            c.ready = true;
        }
        loop {
            let mut changed = false;
            for e in &self.elems {
                changed |= backward(e, &mut self.chans);
            }
            if !changed {
                return;
            }
        }
    }

    fn clock(&mut self) {
        for e in &mut self.elems {
            match e {
                Element::Core { core, st, ev, seen, outs, .. } => {
                    let out_ready: Vec<bool> = outs.iter().map(|&c| self.chans[c].ready).collect();
                    core.clock(st, ev, &out_ready);
                    *seen = None;
                }
                Element::Fifo { q, input, output, .. } => {
                    if self.chans[*output].transfer() {
                        q.pop_front();
                    }
                    if self.chans[*input].transfer() {
                        q.push_back(self.chans[*input].data.clone());
                    }
                }
                Element::Cdc {
                    q,
                    wp,
                    rp,
                    wp_sync,
                    rp_sync,
                    input,
                    output,
                    ..
                } => {
                    wp_sync[1] = wp_sync[0];
                    wp_sync[0] = *wp;
                    rp_sync[1] = rp_sync[0];
                    rp_sync[0] = *rp;
                    if self.chans[*output].transfer() {
                        q.pop_front();
                        *rp += 1;
                    }
                    if self.chans[*input].transfer() {
                        q.push_back(self.chans[*input].data.clone());
                        *wp += 1;
                    }
                }
                Element::Source {
                    chan, next, presenting, ..
                } => {
                    if self.chans[*chan].transfer() {
                        *next += 1;
                        *presenting = false;
                    }
                }
                Element::Sink { .. } => {}
            }
        }
    }
}

fn bernoulli(rng: &mut ChaCha8Rng, p: f64) -> bool {
    if p >= 1.0 {
        true
    } else if p <= 0.0 {
        false
    } else {
        rng.gen_bool(p)
    }
}

fn drive(c: &mut Channel, valid: bool, data: &BitPattern) -> bool {
    let changed = c.valid != valid || &c.data != data;
    if changed {
        c.valid = valid;
        c.data.clone_from(data);
    }
    changed
}

fn forward(e: &mut Element, chans: &mut [Channel]) -> bool {
    match e {
        Element::Core {
            core,
            st,
            ev,
            seen,
            ins,
            outs,
        } => {
            let in_valid: Vec<bool> = ins.iter().map(|&c| chans[c].valid).collect();
            let fresh = match seen {
                Some((v, d)) => *v != in_valid || d.iter().zip(ins.iter()).any(|(d, &c)| d != &chans[c].data),
                None => true,
            };
            if fresh {
                let in_data: Vec<&BitPattern> = ins.iter().map(|&c| &chans[c].data).collect();
                *ev = core.eval(st, &in_valid, &in_data);
                *seen = Some((in_valid, ins.iter().map(|&c| chans[c].data.clone()).collect()));
            }
            let mut changed = false;
            for (o, &c) in outs.iter().enumerate() {
                changed |= drive(&mut chans[c], core.out_valid(st, ev, o), core.out_data(ev, o));
            }
            changed
        }
        Element::Fifo { q, output, .. } => match q.front() {
            Some(d) => drive(&mut chans[*output], true, d),
            None => {
                let z = chans[*output].data.clone();
                drive(&mut chans[*output], false, &z)
            }
        },
        Element::Cdc {
            q, wp_sync, rp, output, ..
        } => {
            let valid = wp_sync[1] > *rp;
            match (valid, q.front()) {
                (true, Some(d)) => drive(&mut chans[*output], true, d),
                _ => {
                    let z = chans[*output].data.clone();
                    drive(&mut chans[*output], false, &z)
                }
            }
        }
        Element::Source {
            chan,
            tokens,
            next,
            presenting,
            ..
        } => {
            if *presenting {
                drive(&mut chans[*chan], true, &tokens[*next])
            } else {
                let z = chans[*chan].data.clone();
                drive(&mut chans[*chan], false, &z)
            }
        }
        Element::Sink { .. } => false,
    }
}

fn set_ready(c: &mut Channel, ready: bool) -> bool {
    let changed = c.ready != ready;
    c.ready = ready;
    changed
}

fn backward(e: &Element, chans: &mut [Channel]) -> bool {
    match e {
        Element::Core {
            core, st, ev, ins, outs, ..
        } => {
            let in_valid: Vec<bool> = ins.iter().map(|&c| chans[c].valid).collect();
            let out_ready: Vec<bool> = outs.iter().map(|&c| chans[c].ready).collect();
            let mut changed = false;
            for (i, &c) in ins.iter().enumerate() {
                changed |= set_ready(&mut chans[c], core.in_ready(st, ev, &in_valid, &out_ready, i));
            }
            changed
        }
        Element::Fifo { depth, q, input, .. } => set_ready(&mut chans[*input], q.len() < *depth),
        Element::Cdc {
            depth, wp, rp_sync, input, ..
        } => set_ready(&mut chans[*input], *wp - rp_sync[1] < *depth),
        Element::Sink { chan, ready, .. } => set_ready(&mut chans[*chan], *ready),
        Element::Source { .. } => false,
    }
}
