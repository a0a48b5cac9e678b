//! `causalproc` command-line front end.
//!
//! Every command reads JSON descriptors, prints a single JSON document to
//! standard output and logs nothing but errors (to standard error). Output is
//! byte-identical for identical inputs, whatever the thread count.

mod commands;
mod json;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "causalproc", version, about = "Entanglement measures for quantum processes")]
struct Cli {
    /// Worker threads.
    #[arg(long, global = true, env = "CAUSALPROC_THREADS", default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SettingArg {
    None,
    Forward,
    Backward,
    TwoWay,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum MeasureArg {
    /// Coherent information of the reduced state (exact monotone).
    StateCi,
    /// Hashing bound after reduction.
    Hashing,
    /// Local-operation optimized lower bound.
    Lo,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModeArg {
    Haar,
    FactorizedAligned,
    FactorizedSwap,
}

#[derive(Subcommand)]
pub enum Command {
    /// Check a process operator: positivity, unit trace, validity projector.
    /// Exit 0 if valid, 2 if invalid, 1 on malformed input.
    Validate { file: PathBuf },
    /// Coherent information of a state towards the target systems.
    Ci {
        file: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        target: Vec<String>,
    },
    /// Maximal single-letter coherent information of a channel.
    ChannelQ {
        file: PathBuf,
        /// Optimizer configuration (JSON).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the configuration's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Local-operation lower bound on a process's coherent information.
    ProcessCi {
        file: PathBuf,
        /// Target party.
        #[arg(long)]
        target: String,
        /// Local-operation family (JSON).
        #[arg(long)]
        family: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Copies for the regularized estimate (1–3).
        #[arg(long, default_value_t = 1)]
        copies: usize,
        /// Report the entanglement-generation bound instead.
        #[arg(long)]
        generation: bool,
    },
    /// Coherent information of sampled two-party unitaries `ab → cd`.
    RandomUnitaryExp {
        #[arg(long, value_delimiter = ',', required = true)]
        dims: Vec<usize>,
        /// Target systems among a, b, c, d.
        #[arg(long, value_delimiter = ',', required = true)]
        cut: Vec<String>,
        #[arg(long)]
        samples: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum, default_value = "haar")]
        mode: ModeArg,
        #[arg(long, default_value_t = 20)]
        bins: usize,
    },
    /// Region coherent information over reseeded Haar networks.
    NetworkExp {
        /// Network file, or `fig6-small`.
        #[arg(long)]
        spec: String,
        #[arg(long)]
        samples: usize,
        #[arg(long)]
        seed: u64,
    },
    /// Probe a measure for increases under sampled protocols.
    LoccProbe {
        #[arg(long)]
        process: PathBuf,
        #[arg(long)]
        target: String,
        #[arg(long, value_enum, default_value = "none")]
        setting: SettingArg,
        /// Communication rounds (default 1 when communicating).
        #[arg(long)]
        rounds: Option<usize>,
        #[arg(long, default_value_t = 2)]
        classical_dim: usize,
        #[arg(long, value_enum, default_value = "state-ci")]
        measure: MeasureArg,
        #[arg(long)]
        samples: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1e-6)]
        slack: f64,
        /// Optimizer configuration for `--measure lo`.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    // usage errors share the malformed-input exit code; 2 is reserved for invalid processes
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    if cli.threads == 0 {
        eprintln!("error: --threads must be at least 1");
        return ExitCode::from(1);
    }
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    match commands::run(&cli.command) {
        Ok(out) => {
            println!("{}", out.json);
            ExitCode::from(out.code)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
