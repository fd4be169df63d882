// SPDX-License-Identifier: Apache-2.0

//! Cycle behaviour of one pipelined netlist.

use smallvec::SmallVec;

use crate::ir::exec::{Exec, Kernel};
use crate::ir::Diagnostic;
use crate::pipeline::{PipelinedNetlist, Signal};
use crate::types::{BitPattern, HWType, Ident};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Sig {
    Node(usize),
    Reg(usize),
}

#[derive(Debug, Clone)]
struct DelaySlot {
    pos: usize,
    stage: u32,
    input: Sig,
    init: BitPattern,
}

/// A netlist compiled for cycle simulation. Ports are ordered by name.
#[derive(Debug, Clone)]
pub(crate) struct Core {
    kernels: Vec<Kernel>,
    operands: Vec<Vec<Sig>>,
    order: Vec<usize>,
    regs: Vec<(Sig, u64)>,
    delays: Vec<DelaySlot>,
    latency: usize,
    pub inputs: Vec<(Ident, HWType)>,
    pub outputs: Vec<(Ident, HWType)>,
    input_pos: Vec<usize>,
    output_pos: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct CoreState {
    regs: Vec<BitPattern>,
    delays: Vec<BitPattern>,
    /// `vld[s]` for stages 1..=L; index 0 unused.
    vld: Vec<bool>,
    sent: Vec<bool>,
}

/// Combinational results of one cycle.
#[derive(Debug, Clone, Default)]
pub(crate) struct CoreEval {
    vals: Vec<BitPattern>,
    vld0: bool,
}

impl Core {
    pub(crate) fn new(netlist: &PipelinedNetlist) -> Result<Core, Vec<Diagnostic>> {
        let exec = Exec::compile(netlist.graph())?;
        let reg_index = |id: u32| netlist.registers.iter().position(|r| r.id == id).expect("checked netlist");
        let sig = |s: &Signal| match *s {
            Signal::Node(id) => Sig::Node(exec.position(id).expect("checked netlist")),
            Signal::Reg(id) => Sig::Reg(reg_index(id)),
        };
        let operands = exec.ids.iter().map(|id| netlist.operands[id].iter().map(sig).collect()).collect::<Vec<Vec<Sig>>>();
        let regs = netlist.registers.iter().map(|r| (sig(&r.source), r.ty.bit_width())).collect();
        let delays = exec
            .delays
            .iter()
            .map(|(pos, init)| DelaySlot {
                pos: *pos,
                stage: netlist.schedule.stage(exec.ids[*pos]),
                input: operands[*pos][0],
                init: init.clone(),
            })
            .collect();
        let order = netlist
            .order
            .iter()
            .map(|id| exec.position(*id).expect("checked netlist"))
            .filter(|&p| exec.kernels[p] != Kernel::Source)
            .collect();
        Ok(Core {
            inputs: exec.inputs.iter().map(|(n, p)| (n.clone(), exec.types[*p].clone())).collect(),
            outputs: exec.outputs.iter().map(|(n, p)| (n.clone(), exec.types[*p].clone())).collect(),
            input_pos: exec.inputs.iter().map(|(_, p)| *p).collect(),
            output_pos: exec.outputs.iter().map(|(_, p)| *p).collect(),
            kernels: exec.kernels,
            operands,
            order,
            regs,
            delays,
            latency: netlist.latency() as usize,
        })
    }

    pub(crate) fn latency(&self) -> usize {
        self.latency
    }

    pub(crate) fn reset(&self) -> CoreState {
        CoreState {
            regs: self.regs.iter().map(|(_, w)| BitPattern::zeros(*w)).collect(),
            delays: self.delays.iter().map(|d| d.init.clone()).collect(),
            vld: vec![false; self.latency + 1],
            sent: vec![false; self.outputs.len()],
        }
    }

    fn read<'a>(&self, vals: &'a [BitPattern], st: &'a CoreState, s: Sig) -> &'a BitPattern {
        match s {
            Sig::Node(p) => &vals[p],
            Sig::Reg(r) => &st.regs[r],
        }
    }

    pub(crate) fn eval(&self, st: &CoreState, in_valid: &[bool], in_data: &[&BitPattern]) -> CoreEval {
        let mut vals = vec![BitPattern::default(); self.kernels.len()];
        for (k, &pos) in self.input_pos.iter().enumerate() {
            vals[pos] = in_data[k].clone();
        }
        for (k, d) in self.delays.iter().enumerate() {
            vals[d.pos] = st.delays[k].clone();
        }
        for &pos in &self.order {
            let out = {
                let args: SmallVec<[&BitPattern; 4]> =
                    self.operands[pos].iter().map(|&s| self.read(&vals, st, s)).collect();
                self.kernels[pos].apply(&args)
            };
            vals[pos] = out;
        }
        CoreEval {
            vals,
            vld0: in_valid.iter().all(|&v| v),
        }
    }

    fn last_valid(&self, st: &CoreState, ev: &CoreEval) -> bool {
        if self.latency == 0 {
            ev.vld0
        } else {
            st.vld[self.latency]
        }
    }

    pub(crate) fn out_valid(&self, st: &CoreState, ev: &CoreEval, o: usize) -> bool {
        self.last_valid(st, ev) && !st.sent[o]
    }

    pub(crate) fn out_data<'a>(&self, ev: &'a CoreEval, o: usize) -> &'a BitPattern {
        &ev.vals[self.output_pos[o]]
    }

    fn stall(&self, st: &CoreState, ev: &CoreEval, out_ready: &[bool]) -> bool {
        let all_done = st.sent.iter().zip(out_ready).all(|(s, r)| *s || *r);
        self.last_valid(st, ev) && !all_done
    }

    pub(crate) fn in_ready(&self, st: &CoreState, ev: &CoreEval, in_valid: &[bool], out_ready: &[bool], i: usize) -> bool {
        let others = in_valid.iter().enumerate().all(|(j, v)| j == i || *v);
        if self.latency == 0 {
            others && st.sent.iter().zip(out_ready).all(|(s, r)| *s || *r)
        } else {
            others && !self.stall(st, ev, out_ready)
        }
    }

    pub(crate) fn clock(&self, st: &mut CoreState, ev: &CoreEval, out_ready: &[bool]) {
        let stall = self.stall(st, ev, out_ready);
        if stall {
            for (s, r) in st.sent.iter_mut().zip(out_ready) {
                *s |= *r;
            }
            return;
        }
        st.sent.iter_mut().for_each(|s| *s = false);
        let captures: Vec<Option<BitPattern>> = self
            .delays
            .iter()
            .map(|d| {
                let valid = if d.stage == 0 { ev.vld0 } else { st.vld[d.stage as usize] };
                valid.then(|| self.read(&ev.vals, st, d.input).clone())
            })
            .collect();
        let regs: Vec<BitPattern> = self.regs.iter().map(|(s, _)| self.read(&ev.vals, st, *s).clone()).collect();
        st.regs = regs;
        for (k, c) in captures.into_iter().enumerate() {
            if let Some(v) = c {
                st.delays[k] = v;
            }
        }
        for s in (1..=self.latency).rev() {
            st.vld[s] = if s == 1 { ev.vld0 } else { st.vld[s - 1] };
        }
    }
}
