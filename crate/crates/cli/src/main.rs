//! `catgate` command-line driver.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Compute(#[from] catgate::Error),
    #[error("io error: {0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "catgate",
    version,
    about = "Heralded Hadamard gate for coherent-state qubits"
)]
pub struct Cli {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// RNG seed, overrides the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory, overrides the config file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Size of the worker pool.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Validate the configuration and exit.
    #[arg(long, global = true)]
    dry_run: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the gate on the `[input]` state.
    Simulate,
    /// Fidelity and success probability over the Bloch sphere.
    Sweep,
    /// Ideal versus squeezed-resource fidelity against alpha.
    Curve,
    /// Wigner function of the gate output.
    Wigner,
    /// Process fidelity of the realistic gate.
    ProcessFidelity,
    /// Draw simulated homodyne data.
    TomoSample,
    /// Maximum-likelihood reconstruction from homodyne data.
    TomoReconstruct {
        /// Quadrature file written by `tomo-sample`; sampled afresh when omitted.
        #[arg(long)]
        data: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("catgate: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
