//! Flag definitions for every subcommand.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "ozimm",
    version,
    about = "High-precision GEMM emulation on low-precision matrix units: \
             planner sweeps, accuracy experiments and a brickwork circuit simulator"
)]
pub struct Cli {
    /// Worker threads (default: all cores; OZIMM_THREADS as fallback)
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Write the CSV to this file instead of stdout; a run manifest is
    /// emitted alongside as <out>.manifest.json
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Design-space sweep: bits per slice, splits, memory and GEMM counts
    Plan(PlanArgs),
    /// Accuracy of emulated GEMM vs plain FP64, errors measured against
    /// the double-double reference
    Accuracy(AccuracyArgs),
    /// Accuracy on a matrix times its approximate inverse
    Invpair(InvpairArgs),
    /// Brickwork random-unitary circuit simulation across GEMM backends
    Qcsim(QcsimArgs),
    /// Wall-clock comparison of the emulated paths (CPU emulation numbers)
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    /// Comma list of units: int8, int4, int12, fp16
    #[arg(long)]
    pub mmu: String,

    /// Smallest accumulation length (power of two, e.g. 2^11)
    #[arg(long, default_value = "2^11")]
    pub k_min: String,

    /// Largest accumulation length (power of two)
    #[arg(long, default_value = "2^20")]
    pub k_max: String,

    /// Mantissa-space length the slices must keep
    #[arg(long, default_value_t = 70)]
    pub target_bits: u32,
}

#[derive(Debug, Args)]
pub struct AccuracyArgs {
    #[arg(long, default_value_t = 512)]
    pub m: usize,
    #[arg(long, default_value_t = 512)]
    pub n: usize,
    #[arg(long, default_value_t = 512)]
    pub k: usize,

    /// Comma list of exponent-spread parameters
    #[arg(long, default_value = "0.1,1,2,4")]
    pub phi: String,

    /// Comma list of split counts for the integer path
    #[arg(long, default_value = "9,11,13")]
    pub splits: String,

    #[arg(long, default_value_t = 42)]
    pub seed: u64,

    /// Dump the generated operands as OZMM files
    #[arg(long)]
    pub dump_a: Option<PathBuf>,
    #[arg(long)]
    pub dump_b: Option<PathBuf>,

    /// Load operands from OZMM files instead of generating them
    #[arg(long)]
    pub load_a: Option<PathBuf>,
    #[arg(long)]
    pub load_b: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InvpairArgs {
    #[arg(long, default_value_t = 512)]
    pub n: usize,

    #[arg(long, default_value = "9,11,13")]
    pub splits: String,

    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct QcsimArgs {
    /// Named circuit layout: `a` (16 qubits, 4-qubit gates, 8 layers) or
    /// `b` (16 qubits, 8-qubit gates, 4 layers), desk-scale stand-ins for
    /// the small/large gate-width regimes; overrides the three size flags
    #[arg(long)]
    pub preset: Option<String>,

    #[arg(long, default_value_t = 16)]
    pub qubits: u32,

    #[arg(long, default_value_t = 4)]
    pub gate_qubits: u32,

    #[arg(long, default_value_t = 8)]
    pub layers: u32,

    /// Comma list of backends: fp64, dd, ozaki:S, auto:T
    #[arg(long, default_value = "fp64,auto:0")]
    pub backend: String,

    #[arg(long, default_value_t = 42)]
    pub seed: u64,

    /// Dump the last backend's final state as an OZMM complex matrix
    #[arg(long)]
    pub dump_state: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Comma list of square sizes
    #[arg(long, default_value = "256")]
    pub sizes: String,

    #[arg(long, default_value = "9")]
    pub splits: String,

    #[arg(long, default_value_t = 0.1)]
    pub phi: f64,

    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}
