//! Command-line front end for the ozimm library.
//!
//! Exit codes: 0 success, 2 usage error, 3 infeasible configuration,
//! 4 resource cap exceeded, 1 anything else.

mod args;
mod cmds;
mod manifest;

use std::io::Write;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;

use args::{Cli, Cmd};
use cmds::CmdError;
use manifest::RunManifest;

fn resolve_threads(flag: Option<usize>) -> usize {
    if let Some(t) = flag {
        return t.max(1);
    }
    if let Ok(v) = std::env::var("OZIMM_THREADS") {
        if let Ok(t) = v.parse::<usize>() {
            return t.max(1);
        }
        eprintln!("ignoring unparsable OZIMM_THREADS='{v}'");
    }
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

fn run(cli: &Cli) -> cmds::CmdResult {
    match &cli.cmd {
        Cmd::Plan(a) => cmds::cmd_plan(a),
        Cmd::Accuracy(a) => cmds::cmd_accuracy(a),
        Cmd::Invpair(a) => cmds::cmd_invpair(a),
        Cmd::Qcsim(a) => cmds::cmd_qcsim(a),
        Cmd::Bench(a) => cmds::cmd_bench(a),
    }
}

fn manifest_for(cli: &Cli, threads: usize) -> RunManifest {
    let (command, args, seed) = match &cli.cmd {
        Cmd::Plan(a) => (
            "plan",
            serde_json::json!({
                "mmu": a.mmu, "k_min": a.k_min, "k_max": a.k_max,
                "target_bits": a.target_bits,
            }),
            None,
        ),
        Cmd::Accuracy(a) => (
            "accuracy",
            serde_json::json!({
                "m": a.m, "n": a.n, "k": a.k, "phi": a.phi, "splits": a.splits,
                "seed": a.seed,
                "dump_a": a.dump_a, "dump_b": a.dump_b,
                "load_a": a.load_a, "load_b": a.load_b,
            }),
            Some(a.seed),
        ),
        Cmd::Invpair(a) => (
            "invpair",
            serde_json::json!({ "n": a.n, "splits": a.splits, "seed": a.seed }),
            Some(a.seed),
        ),
        Cmd::Qcsim(a) => (
            "qcsim",
            serde_json::json!({
                "preset": a.preset, "qubits": a.qubits, "gate_qubits": a.gate_qubits,
                "layers": a.layers, "backend": a.backend, "seed": a.seed,
                "dump_state": a.dump_state,
            }),
            Some(a.seed),
        ),
        Cmd::Bench(a) => (
            "bench",
            serde_json::json!({
                "sizes": a.sizes, "splits": a.splits, "phi": a.phi, "seed": a.seed,
            }),
            Some(a.seed),
        ),
    };
    RunManifest::new(command, args, seed, threads)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = resolve_threads(cli.threads);
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("failed to build thread pool: {e}");
            return ExitCode::from(1);
        }
    };

    let started = Instant::now();
    let result = pool.install(|| run(&cli));
    match result {
        Ok(csv) => {
            match &cli.out {
                Some(path) => {
                    if let Err(e) = std::fs::write(path, &csv) {
                        eprintln!("cannot write {}: {e}", path.display());
                        return ExitCode::from(1);
                    }
                    let mut man = manifest_for(&cli, threads);
                    man.wall_seconds = started.elapsed().as_secs_f64();
                    if let Err(e) = man.write_next_to(path) {
                        eprintln!("cannot write manifest: {e}");
                        return ExitCode::from(1);
                    }
                }
                None => {
                    let mut stdout = std::io::stdout().lock();
                    if stdout.write_all(csv.as_bytes()).is_err() {
                        return ExitCode::from(1);
                    }
                }
            }
            ExitCode::SUCCESS
        }
        Err(CmdError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
        Err(CmdError::Infeasible(msg)) => {
            eprintln!("infeasible configuration: {msg}");
            ExitCode::from(3)
        }
        Err(CmdError::ResourceCap(msg)) => {
            eprintln!("resource limit: {msg}");
            ExitCode::from(4)
        }
        Err(CmdError::Other(e)) => {
            eprintln!("error: {e:?}");
            ExitCode::from(1)
        }
    }
}
