// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use super::helpers::{CDC_FIFO, FIFO, PERF_TAP};
use super::lint::{lint, Interface};
use super::module::{emit_module, literal, port_decls};
use super::names::{sanitize, Scope};
use super::{range, EmitError};
use crate::ir::{Body, Direction};
use crate::system::{AssembledSystem, Endpoint, HostBridgeMap, Storage, BRIDGE_WORD_BITS};
use crate::types::Ident;

/// Port directions of the extern RTL tops a system instantiates.
pub fn extern_interfaces(sys: &AssembledSystem) -> Vec<Interface> {
    let mut out: BTreeMap<String, Interface> = BTreeMap::new();
    for inst in &sys.instances {
        let Body::ExternRtl(x) = &inst.module().body else { continue };
        let mut ports = vec![("clk".to_string(), Direction::In), ("rst".to_string(), Direction::In)];
        for p in &inst.module().ports {
            let sig = &x.port_map[&p.name];
            let back = match p.direction {
                Direction::In => Direction::Out,
                Direction::Out => Direction::In,
            };
            if let Some(d) = &sig.data {
                ports.push((d.clone(), p.direction));
            }
            ports.push((sig.valid.clone(), p.direction));
            ports.push((sig.ready.clone(), back));
        }
        out.insert(
            x.top.clone(),
            Interface {
                module: x.top.clone(),
                ports,
            },
        );
    }
    out.into_values().collect()
}

fn clog2(n: u64) -> u64 {
    if n <= 1 {
        0
    } else {
        64 - u64::from((n - 1).leading_zeros())
    }
}

/// Signal-name prefix of the wires carrying one side of a channel.
struct Wires {
    prefix: String,
    width: u64,
}

impl Wires {
    fn data(&self) -> Option<String> {
        (self.width > 0).then(|| format!("{}_data", self.prefix))
    }
    fn valid(&self) -> String {
        format!("{}_valid", self.prefix)
    }
    fn ready(&self) -> String {
        format!("{}_ready", self.prefix)
    }
}

/// Writes helper modules, one module per distinct IR package, and a top
/// module wiring the instances, FIFOs, CDC FIFOs, perf taps and host
/// bridge. The result is linted before it is returned.
pub fn emit_system(sys: &AssembledSystem) -> Result<String, EmitError> {
    let top = sanitize(sys.name.as_str());
    let mut files = Scope::default();
    let mut modules: BTreeMap<String, String> = BTreeMap::new();
    let mut externs = BTreeSet::new();
    for inst in &sys.instances {
        match &inst.module().body {
            Body::Dataflow(_) => {
                let n = inst.netlist.as_ref().ok_or_else(|| EmitError::MissingNetlist(inst.name.to_string()))?;
                let text = emit_module(n)?;
                let name = sanitize(inst.module().name.as_str());
                match modules.get(&name) {
                    Some(prev) if *prev != text => {
                        return Err(EmitError::Collision {
                            name,
                            first: "one package".into(),
                            second: format!("the package of instance `{}`", inst.name),
                        })
                    }
                    Some(_) => {}
                    None => {
                        files.claim(&name, format!("module of instance `{}`", inst.name))?;
                        modules.insert(name, text);
                    }
                }
            }
            Body::ExternRtl(x) => {
                if externs.insert(x.top.clone()) {
                    files.claim(&x.top, format!("extern top of instance `{}`", inst.name))?;
                }
            }
        }
    }
    let uses_fifo = sys.connections.iter().any(|c| matches!(c.storage, Storage::Fifo { .. }));
    let uses_cdc = sys.connections.iter().any(|c| matches!(c.storage, Storage::Cdc { .. }));
    let uses_tap = !sys.perf_taps.is_empty();
    for (used, name) in [(uses_fifo, "llpm_fifo"), (uses_cdc, "llpm_cdc_fifo"), (uses_tap, "llpm_perf_tap")] {
        if used {
            files.claim(name, "a support module")?;
        }
    }
    files.claim(&top, "the system top")?;

    let mut v = String::new();
    writeln!(v, "// {top}: generated by llpm").unwrap();
    for (used, text) in [(uses_fifo, FIFO), (uses_cdc, CDC_FIFO), (uses_tap, PERF_TAP)] {
        if used {
            writeln!(v).unwrap();
            v.push_str(text);
        }
    }
    for text in modules.values() {
        writeln!(v).unwrap();
        v.push_str(text);
    }
    writeln!(v).unwrap();
    v.push_str(&top_module(sys, &top)?);
    let errors = lint(&v, &extern_interfaces(sys));
    if !errors.is_empty() {
        return Err(EmitError::Lint(errors));
    }
    Ok(v)
}

fn top_module(sys: &AssembledSystem, top: &str) -> Result<String, EmitError> {
    let domains: Vec<Ident> = sys.clock_domains().into_iter().collect();
    let clk_of = |d: &Ident| {
        if domains.len() == 1 {
            "clk".to_string()
        } else {
            format!("clk_{d}")
        }
    };
    let domain_of = |inst: &Ident| sys.instance(inst).expect("assembled instance").clock_domain.clone();
    let bridge = sys.bridge_map();
    let exposed = |name: &str| sys.host_bridge.iter().any(|h| h == name);

    let mut scope = Scope::default();
    let mut ports = Vec::new();
    for d in &domains {
        scope.claim(&clk_of(d), "clock")?;
        ports.push(format!("input  wire {}", clk_of(d)));
    }
    scope.claim("rst", "reset")?;
    ports.push("input  wire rst".into());
    let top_ports: Vec<crate::ir::Port> = sys
        .exports
        .iter()
        .filter(|e| !exposed(&e.name))
        .map(|e| crate::ir::Port {
            name: e.name.clone(),
            direction: e.direction,
            ty: e.ty.clone(),
        })
        .collect();
    port_decls(&top_ports, &mut scope, &mut ports)?;
    let counters = ["transfers", "stall_cycles", "idle_cycles"];
    for t in &sys.perf_taps {
        for c in counters {
            let name = format!("perf_{t}_{c}");
            scope.claim(&name, format!("perf tap `{t}`"))?;
            if bridge.is_none() {
                ports.push(format!("output wire [31:0] {name}"));
            }
        }
    }
    let addr_bits = bridge.as_ref().map(|m| clog2(m.size()).max(2));
    if let Some(aw) = addr_bits {
        for (n, decl) in [
            ("host_addr", format!("input  wire [{}:0] host_addr", aw - 1)),
            ("host_wdata", "input  wire [31:0] host_wdata".to_string()),
            ("host_wen", "input  wire host_wen".to_string()),
            ("host_rdata", "output wire [31:0] host_rdata".to_string()),
        ] {
            scope.claim(n, "host bridge")?;
            ports.push(decl);
        }
    }

    let mut v = String::new();
    writeln!(v, "module {top} (").unwrap();
    writeln!(v, "  {}", ports.join(",\n  ")).unwrap();
    writeln!(v, ");").unwrap();

    // Channel wires.
    let mut ends: BTreeMap<Endpoint, Wires> = BTreeMap::new();
    let mut tap_wires: BTreeMap<String, (String, Ident)> = BTreeMap::new();
    let mut body = String::new();
    let declare = |scope: &mut Scope, v: &mut String, prefix: &str, width: u64, owner: &str| -> Result<(), EmitError> {
        if width > 0 {
            scope.claim(&format!("{prefix}_data"), owner.to_string())?;
            writeln!(v, "  wire {}{prefix}_data;", range(width)).unwrap();
        }
        for s in ["valid", "ready"] {
            scope.claim(&format!("{prefix}_{s}"), owner.to_string())?;
            writeln!(v, "  wire {prefix}_{s};").unwrap();
        }
        Ok(())
    };
    for c in &sys.connections {
        let w = c.ty.bit_width();
        let owner = format!("connection `{}`", c.name);
        declare(&mut scope, &mut v, c.name.as_str(), w, &owner)?;
        let prod = Wires {
            prefix: c.name.to_string(),
            width: w,
        };
        tap_wires.insert(c.name.to_string(), (c.name.to_string(), domain_of(&c.from.instance)));
        let cons = match &c.storage {
            Storage::Wire => Wires {
                prefix: c.name.to_string(),
                width: w,
            },
            storage => {
                let q = format!("{}_q", c.name);
                declare(&mut scope, &mut v, &q, w, &owner)?;
                let out = Wires { prefix: q, width: w };
                let pw = w.max(1);
                let (head, clocks) = match storage {
                    Storage::Fifo { depth } => (
                        format!(
                            "llpm_fifo #(.WIDTH({pw}), .DEPTH({depth}), .AW({})) fifo_{}",
                            clog2(*depth).max(1),
                            c.name
                        ),
                        format!(".clk({})", clk_of(&domain_of(&c.from.instance))),
                    ),
                    Storage::Cdc { depth, from_domain, to_domain } => (
                        format!("llpm_cdc_fifo #(.WIDTH({pw}), .AW({})) cdc_{}", clog2(*depth), c.name),
                        format!(".wclk({}), .rclk({})", clk_of(from_domain), clk_of(to_domain)),
                    ),
                    Storage::Wire => unreachable!(),
                };
                let inst = head.rsplit(' ').next().unwrap().to_string();
                scope.claim(&inst, &owner)?;
                writeln!(body, "  {head} (").unwrap();
                writeln!(body, "    {clocks},").unwrap();
                writeln!(body, "    .rst(rst),").unwrap();
                writeln!(body, "    .in_data({}),", prod.data().unwrap_or_else(|| "1'b0".into())).unwrap();
                writeln!(body, "    .in_valid({}),", prod.valid()).unwrap();
                writeln!(body, "    .in_ready({}),", prod.ready()).unwrap();
                writeln!(body, "    .out_data({}),", out.data().unwrap_or_default()).unwrap();
                writeln!(body, "    .out_valid({}),", out.valid()).unwrap();
                writeln!(body, "    .out_ready({})", out.ready()).unwrap();
                writeln!(body, "  );").unwrap();
                out
            }
        };
        ends.insert(c.from.clone(), prod);
        ends.insert(c.to.clone(), cons);
    }
    for e in &sys.exports {
        let w = e.ty.bit_width();
        if exposed(&e.name) {
            declare(&mut scope, &mut v, e.name.as_str(), w, &format!("bridge channel `{}`", e.name))?;
        }
        tap_wires.insert(e.name.to_string(), (e.name.to_string(), e.clock_domain.clone()));
        ends.insert(
            Endpoint {
                instance: e.instance.clone(),
                port: e.port.clone(),
            },
            Wires {
                prefix: e.name.to_string(),
                width: w,
            },
        );
    }
    if bridge.is_some() {
        for t in &sys.perf_taps {
            for c in counters {
                writeln!(v, "  wire [31:0] perf_{t}_{c};").unwrap();
            }
        }
    }

    // Instances.
    for inst in &sys.instances {
        let iname = format!("u_{}", inst.name);
        scope.claim(&iname, format!("instance `{}`", inst.name))?;
        let clk = clk_of(&inst.clock_domain);
        let mut conns = vec![format!(".clk({clk})"), ".rst(rst)".to_string()];
        let (module_name, extern_map) = match &inst.module().body {
            Body::Dataflow(_) => (sanitize(inst.module().name.as_str()), None),
            Body::ExternRtl(x) => (x.top.clone(), Some(&x.port_map)),
        };
        for p in &inst.module().ports {
            let w = &ends[&Endpoint {
                instance: inst.name.clone(),
                port: p.name.clone(),
            }];
            let (d, vl, rd) = match extern_map {
                None => (format!("{}_data", p.name), format!("{}_valid", p.name), format!("{}_ready", p.name)),
                Some(m) => {
                    let s = &m[&p.name];
                    (s.data.clone().unwrap_or_default(), s.valid.clone(), s.ready.clone())
                }
            };
            if let Some(data) = w.data() {
                conns.push(format!(".{d}({data})"));
            }
            conns.push(format!(".{vl}({})", w.valid()));
            conns.push(format!(".{rd}({})", w.ready()));
        }
        writeln!(body, "  {module_name} {iname} (").unwrap();
        writeln!(body, "    {}", conns.join(",\n    ")).unwrap();
        writeln!(body, "  );").unwrap();
    }

    // Perf taps.
    for t in &sys.perf_taps {
        let (prefix, domain) = &tap_wires[t];
        let iname = format!("tap_{t}");
        scope.claim(&iname, format!("perf tap `{t}`"))?;
        writeln!(body, "  llpm_perf_tap {iname} (").unwrap();
        writeln!(body, "    .clk({}),", clk_of(domain)).unwrap();
        writeln!(body, "    .rst(rst),").unwrap();
        writeln!(body, "    .valid({prefix}_valid),").unwrap();
        writeln!(body, "    .ready({prefix}_ready),").unwrap();
        writeln!(body, "    .transfers(perf_{t}_transfers),").unwrap();
        writeln!(body, "    .stall_cycles(perf_{t}_stall_cycles),").unwrap();
        writeln!(body, "    .idle_cycles(perf_{t}_idle_cycles)").unwrap();
        writeln!(body, "  );").unwrap();
    }

    if let (Some(map), Some(aw)) = (&bridge, addr_bits) {
        let clk = sys
            .host_bridge
            .first()
            .and_then(|n| sys.export(n))
            .map(|e| clk_of(&e.clock_domain))
            .unwrap_or_else(|| "clk".into());
        host_bridge(&mut v, &mut body, &mut scope, map, aw, &clk)?;
    }
    v.push_str(&body);
    writeln!(v, "endmodule").unwrap();
    Ok(v)
}

fn addr(aw: u64, a: u64) -> String {
    literal(u128::from(a), aw)
}

fn host_bridge(
    decls: &mut String,
    body: &mut String,
    scope: &mut Scope,
    map: &HostBridgeMap,
    aw: u64,
    clk: &str,
) -> Result<(), EmitError> {
    let word = u64::from(BRIDGE_WORD_BITS);
    let mut reads: Vec<(u64, String)> = Vec::new();
    for c in &map.channels {
        let n = &c.name;
        let w = c.ty.bit_width();
        let owner = format!("bridge channel `{n}`");
        let hold = format!("hb_{n}_data");
        let full = format!("hb_{n}_full");
        scope.claim(&full, owner.clone())?;
        writeln!(decls, "  reg {full};").unwrap();
        if w > 0 {
            scope.claim(&hold, owner.clone())?;
            writeln!(decls, "  reg {}{hold};", range(w)).unwrap();
        }
        let ctrl = addr(aw, c.control);
        let pop = format!("host_wen & (host_addr == {ctrl}) & host_wdata[0]");
        match c.direction {
            Direction::In => {
                if w > 0 {
                    writeln!(body, "  assign {n}_data = {hold};").unwrap();
                }
                writeln!(body, "  assign {n}_valid = {full};").unwrap();
                writeln!(body, "  always @(posedge {clk}) begin").unwrap();
                writeln!(body, "    if (rst) begin").unwrap();
                writeln!(body, "      {full} <= 1'b0;").unwrap();
                writeln!(body, "    end else if ({pop}) begin").unwrap();
                writeln!(body, "      {full} <= 1'b1;").unwrap();
                writeln!(body, "    end else if ({n}_ready) begin").unwrap();
                writeln!(body, "      {full} <= 1'b0;").unwrap();
                writeln!(body, "    end").unwrap();
                writeln!(body, "  end").unwrap();
                if w > 0 {
                    writeln!(body, "  always @(posedge {clk}) begin").unwrap();
                    for k in 0..c.data_words {
                        let lo = k * word;
                        let hi = (lo + word).min(w) - 1;
                        writeln!(body, "    if (host_wen & (host_addr == {})) begin", addr(aw, c.base + 4 * k)).unwrap();
                        if w == 1 {
                            writeln!(body, "      {hold} <= host_wdata[0];").unwrap();
                        } else {
                            writeln!(body, "      {hold}[{hi}:{lo}] <= host_wdata[{}:0];", hi - lo).unwrap();
                        }
                        writeln!(body, "    end").unwrap();
                    }
                    writeln!(body, "  end").unwrap();
                }
                reads.push((c.status, format!("{{31'h0, ~{full}}}")));
            }
            Direction::Out => {
                writeln!(body, "  assign {n}_ready = ~{full};").unwrap();
                writeln!(body, "  always @(posedge {clk}) begin").unwrap();
                writeln!(body, "    if (rst) begin").unwrap();
                writeln!(body, "      {full} <= 1'b0;").unwrap();
                writeln!(body, "    end else if ({n}_valid & ~{full}) begin").unwrap();
                writeln!(body, "      {full} <= 1'b1;").unwrap();
                writeln!(body, "    end else if ({pop}) begin").unwrap();
                writeln!(body, "      {full} <= 1'b0;").unwrap();
                writeln!(body, "    end").unwrap();
                writeln!(body, "  end").unwrap();
                if w > 0 {
                    writeln!(body, "  always @(posedge {clk}) begin").unwrap();
                    writeln!(body, "    if ({n}_valid & ~{full}) begin").unwrap();
                    writeln!(body, "      {hold} <= {n}_data;").unwrap();
                    writeln!(body, "    end").unwrap();
                    writeln!(body, "  end").unwrap();
                }
                reads.push((c.status, format!("{{31'h0, {full}}}")));
            }
        }
        for k in 0..c.data_words {
            let lo = k * word;
            let hi = (lo + word).min(w) - 1;
            let bits = hi - lo + 1;
            let part = if w == 1 { hold.clone() } else { format!("{hold}[{hi}:{lo}]") };
            let val = if bits < word {
                format!("{{{}, {part}}}", literal(0, word - bits))
            } else {
                part
            };
            reads.push((c.base + 4 * k, val));
        }
    }
    for t in &map.counters {
        reads.push((t.transfers, format!("perf_{}_transfers", t.channel)));
        reads.push((t.stall_cycles, format!("perf_{}_stall_cycles", t.channel)));
        reads.push((t.idle_cycles, format!("perf_{}_idle_cycles", t.channel)));
    }
    reads.sort_by_key(|r| r.0);
    let mut rhs = String::new();
    for (a, val) in &reads {
        write!(rhs, "\n    (host_addr == {}) ? {val} :", addr(aw, *a)).unwrap();
    }
    writeln!(body, "  assign host_rdata ={rhs}\n    32'h0;").unwrap();
    Ok(())
}
