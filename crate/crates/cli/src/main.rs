// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::Value as Json;

use llpm::emit::{emit_module, emit_system};
use llpm::interp;
use llpm::pipeline::{compile, LatencyTable, PipelinedNetlist};
use llpm::sim::{equivalence_check, simulate_system, Equivalence, Stimulus};
use llpm::system::{assemble, load_design, load_package, partition, synth_host_bridge, AssembledSystem, PartitionSpec, SystemError};

/// Typed latency-insensitive hardware compiler.
#[derive(Parser)]
#[command(name = "llpm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a package manifest.
    Check {
        package: PathBuf,
    },
    /// Run the reference interpreter on a package.
    Interp {
        package: PathBuf,
        /// Stimulus file; only its `inputs` are used.
        #[arg(long)]
        stimulus: PathBuf,
        /// Number of firings [default: length of the shortest input stream].
        #[arg(long)]
        steps: Option<usize>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Schedule and pipeline a package into a netlist.
    Pipeline {
        package: PathBuf,
        /// Latency table overriding the default per-op latencies.
        #[arg(long)]
        latency: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Check pipelined token streams against the interpreter.
    Verify {
        package: PathBuf,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        latency: Option<PathBuf>,
    },
    /// Emit Verilog for a netlist, package, system design or assembled system.
    Emit {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Assemble a system design and check it for deadlocks.
    Assemble {
        system: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Simulate an assembled system (or a system design).
    Sim {
        system: PathBuf,
        #[arg(long)]
        stimulus: PathBuf,
        /// Cycles to run [default: the stimulus file's `cycles`].
        #[arg(long)]
        cycles: Option<u64>,
        /// Random seed [default: the stimulus file's `seed`].
        #[arg(long)]
        seed: Option<u64>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Expose exported channels through a host bridge and write its API map.
    Bridge {
        system: PathBuf,
        /// Comma-separated channel names.
        #[arg(long, value_delimiter = ',', required = true)]
        expose: Vec<String>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Split a system design across devices.
    Partition {
        system: PathBuf,
        /// Number of partitions.
        #[arg(short, long)]
        k: usize,
        /// Capacity per partition; a single value applies to all.
        #[arg(long, value_delimiter = ',', required = true)]
        capacity: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

/// Why a command failed: a check that did not pass, or unusable input.
enum Failure {
    Check(Vec<String>),
    Input(String),
}

impl From<SystemError> for Failure {
    fn from(e: SystemError) -> Self {
        if e.is_input_error() {
            Failure::Input(e.to_string())
        } else {
            match e {
                SystemError::Invalid { module, diagnostics } => {
                    Failure::Check(diagnostics.iter().map(|d| format!("{module}: {d}")).collect())
                }
                SystemError::InFile { file, error } => match Failure::from(*error) {
                    Failure::Check(v) => Failure::Check(v.into_iter().map(|m| format!("{file}: {m}")).collect()),
                    Failure::Input(m) => Failure::Input(format!("{file}: {m}")),
                },
                e => Failure::Check(vec![e.to_string()]),
            }
        }
    }
}

fn check(msg: impl ToString) -> Failure {
    Failure::Check(vec![msg.to_string()])
}

fn input(msg: impl ToString) -> Failure {
    Failure::Input(msg.to_string())
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn write(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| input(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_json(path: Option<&Path>, j: &Json) -> Result<(), Failure> {
    write(path, &(serde_json::to_string_pretty(j).expect("JSON serializes") + "\n"))
}

fn latency_table(path: Option<&Path>) -> Result<LatencyTable, Failure> {
    match path {
        None => Ok(LatencyTable::default()),
        Some(p) => serde_json::from_str(&read(p)?).map_err(|e| input(format!("{}: {e}", p.display()))),
    }
}

/// Loads an assembled system, assembling a design file on the way if needed.
fn system(path: &Path, warnings: bool) -> Result<AssembledSystem, Failure> {
    let text = read(path)?;
    let j: Json = serde_json::from_str(&text).map_err(|e| input(format!("{}: {e}", path.display())))?;
    if j.get("llpm_assembled").is_some() {
        return AssembledSystem::from_json(&text).map_err(|e| Failure::from(e.in_file(path)));
    }
    let (design, packages) = load_design(path)?;
    let sys = assemble(&design, &packages).map_err(|e| Failure::from(e.in_file(path)))?;
    if warnings {
        for w in &sys.report.warnings {
            eprintln!("warning: {w}");
        }
    }
    Ok(sys)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Check { package } => {
            let p = load_package(&package)?;
            if p.module.behavior().is_some() {
                compile(&p.module, &LatencyTable::default()).map_err(check)?;
            }
            Ok(())
        }
        Command::Interp {
            package,
            stimulus,
            steps,
            output,
        } => {
            let p = load_package(&package)?;
            let types = p.module.inputs().map(|q| (q.name.to_string(), q.ty.clone())).collect();
            let stim = Stimulus::from_json(&read(&stimulus)?, &types).map_err(|e| input(format!("{}: {e}", stimulus.display())))?;
            let streams: interp::TokenStreams = stim
                .inputs
                .into_iter()
                .map(|(k, v)| (k.parse().expect("checked against port names"), v))
                .collect();
            let steps = steps.unwrap_or_else(|| streams.values().map(Vec::len).min().unwrap_or(0));
            let out = interp::run(&p.module, &streams, steps).map_err(check)?;
            let out: BTreeMap<String, _> = out.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
            write_json(output.as_deref(), &Stimulus::streams_json(&out))
        }
        Command::Pipeline { package, latency, output } => {
            let p = load_package(&package)?;
            let table = latency_table(latency.as_deref())?;
            let n = compile(&p.module, &table).map_err(check)?;
            write_json(output.as_deref(), &n.to_json())
        }
        Command::Verify {
            package,
            trials,
            seed,
            latency,
        } => {
            let p = load_package(&package)?;
            let table = latency_table(latency.as_deref())?;
            let n = compile(&p.module, &table).map_err(check)?;
            match equivalence_check(&p.module, &n, trials, seed).map_err(check)? {
                Equivalence::Pass { trials } => {
                    println!("pass: {trials} trials, latency {}", n.latency());
                    Ok(())
                }
                Equivalence::Counterexample(c) => Err(check(format!("counterexample: {c}"))),
            }
        }
        Command::Emit { input: path, output } => {
            let text = read(&path)?;
            let j: Json = serde_json::from_str(&text).map_err(|e| input(format!("{}: {e}", path.display())))?;
            let v = if j.get("llpm_netlist").is_some() {
                let n = PipelinedNetlist::from_json(&text).map_err(|e| input(format!("{}: {e}", path.display())))?;
                emit_module(&n).map_err(check)?
            } else if j.get("body").is_some() {
                let p = load_package(&path)?;
                emit_module(&compile(&p.module, &LatencyTable::default()).map_err(check)?).map_err(check)?
            } else {
                emit_system(&system(&path, true)?).map_err(check)?
            };
            write(output.as_deref(), &v)
        }
        Command::Assemble { system: path, output } => {
            let sys = system(&path, true)?;
            write_json(output.as_deref(), &sys.to_json())?;
            if sys.report.ok() {
                Ok(())
            } else {
                Err(Failure::Check(
                    sys.report
                        .deadlocks
                        .iter()
                        .map(|c| {
                            let mut names: Vec<&str> = c.iter().map(|i| i.as_str()).collect();
                            names.push(names[0]);
                            format!("deadlock: zero-storage cycle {}", names.join(" -> "))
                        })
                        .collect(),
                ))
            }
        }
        Command::Sim {
            system: path,
            stimulus,
            cycles,
            seed,
            output,
        } => {
            let sys = system(&path, true)?;
            let types = sys
                .exports
                .iter()
                .filter(|e| e.direction == llpm::Direction::In)
                .map(|e| (e.name.to_string(), e.ty.clone()))
                .collect();
            let mut stim =
                Stimulus::from_json(&read(&stimulus)?, &types).map_err(|e| input(format!("{}: {e}", stimulus.display())))?;
            if let Some(c) = cycles {
                stim.cycles = c;
            }
            if let Some(s) = seed {
                stim.seed = s;
            }
            let trace = simulate_system(&sys, &stim).map_err(check)?;
            write_json(output.as_deref(), &trace.to_json())
        }
        Command::Bridge {
            system: path,
            expose,
            output,
        } => {
            let mut sys = system(&path, true)?;
            let map = synth_host_bridge(&mut sys, &expose).map_err(Failure::from)?;
            write_json(output.as_deref(), &map.to_json())
        }
        Command::Partition {
            system: path,
            k,
            capacity,
            seed,
            output,
        } => {
            let capacities = match capacity.as_slice() {
                [c] => vec![*c; k],
                cs if cs.len() == k => cs.to_vec(),
                cs => return Err(input(format!("--capacity lists {} values for {k} partitions", cs.len()))),
            };
            let (design, packages) = load_design(&path)?;
            let r = partition(&design, &packages, &PartitionSpec { capacities, seed })?;
            write_json(output.as_deref(), &r.to_json())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msgs)) => {
            for m in msgs {
                eprintln!("error: {m}");
            }
            ExitCode::from(1)
        }
        Err(Failure::Input(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
