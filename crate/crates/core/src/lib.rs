// SPDX-License-Identifier: Apache-2.0

//! A typed, latency-insensitive hardware IR with a reference interpreter,
//! a pipeliner, a cycle simulator, a Verilog backend and a system
//! assembler.

pub mod emit;
pub mod interp;
pub mod ir;
pub mod pipeline;
pub mod sim;
pub mod system;
pub mod types;

pub use ir::{DataflowGraph, Direction, Module, OpKind, Port};
pub use pipeline::{LatencyTable, PipelinedNetlist};
pub use sim::{Stimulus, Trace};
pub use system::{AssembledSystem, HostBridgeMap, Package, SystemDesign};
pub use types::{BitPattern, HWType, Ident, Value};
