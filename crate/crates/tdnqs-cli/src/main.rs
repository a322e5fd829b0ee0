//! `tdnqs` — ground states and quench dynamics of a neural-network wave
//! function in a 1D harmonic trap, driven from small text config files.
//!
//! Exit codes: 0 success, 1 numerical or threshold failure, 2 bad
//! configuration or I/O.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tdnqs::model::AmplitudeMap;

mod checkpoint;
mod config;
mod error;
mod output;
mod run;

#[derive(Parser)]
#[command(name = "tdnqs", version, about = "Neural wave-function dynamics in a harmonic trap")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Override the config's RNG seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Where to write outputs (beats the config's output_dir and the
    /// TDNQS_OUTPUT_DIR environment variable).
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Override the config's amplitude map.
    #[arg(long, global = true, value_parser = parse_map, value_name = "exp_of_f|f_direct")]
    amplitude_map: Option<AmplitudeMap>,
}

#[derive(Subcommand)]
enum Command {
    /// Relax to the variational ground state and write a checkpoint.
    GroundState {
        #[arg(long)]
        config: PathBuf,
    },
    /// Evolve a checkpointed state in real time under the evolve settings.
    Evolve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Run a built-in protocol end to end against its analytic solution.
    Benchmark {
        #[arg(long, value_enum)]
        protocol: run::Protocol,
        /// Optional config for grid, seed, and map; the protocol's physics
        /// and thresholds are pinned by the preset.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn parse_map(s: &str) -> Result<AmplitudeMap, String> {
    s.parse().map_err(|e: tdnqs::error::Error| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let overrides = run::Overrides {
        seed: cli.seed,
        output_dir: cli.output_dir,
        amplitude_map: cli.amplitude_map,
    };
    let result = match cli.command {
        Command::GroundState { config } => run::ground_state_cmd(&config, &overrides),
        Command::Evolve { config, checkpoint } => {
            run::evolve_cmd(&config, &checkpoint, &overrides)
        }
        Command::Benchmark { protocol, config } => {
            run::benchmark_cmd(protocol, config.as_deref(), &overrides)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
