//! Command-line front end.
//!
//! ```text
//! latticeqfi <evolve|qfi|scan|scaling|spectrum> --config <path> [--out <dir>] [--threads <n>] [--emit-plot]
//! ```
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical error, 4 basis
//! dimension above the cap (`LATTICEQFI_DIM_CAP`).

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use clap::{Parser, ValueEnum};

use crate::error::{Error, Result};
pub use commands::Sink;
pub use config::{AxisSpec, RunConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Evolve,
    Qfi,
    Scan,
    Scaling,
    Spectrum,
}

#[derive(Debug, Parser)]
#[command(name = "latticeqfi", version, about = "Quantum Fisher information of tilted Bose-Hubbard chains")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (default: the config's `out_dir`, else the working directory).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for grid sweeps.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Also write a gnuplot script next to each CSV.
    #[arg(long)]
    pub emit_plot: bool,
}

/// Runs one command and returns the files written.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>> {
    let config = RunConfig::load(&cli.config)?;
    let sink = Sink {
        dir: commands::output_dir(cli.out.as_deref(), &config),
        emit_plot: cli.emit_plot,
    };
    let work = || match cli.command {
        Command::Evolve => commands::cmd_evolve(&config, &sink),
        Command::Qfi => commands::cmd_qfi(&config, &sink),
        Command::Scan => commands::cmd_scan(&config, &sink),
        Command::Scaling => commands::cmd_scaling(&config, &sink),
        Command::Spectrum => commands::cmd_spectrum(&config, &sink),
    };
    match cli.threads {
        Some(0) => Err(Error::Config("--threads must be positive".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {n} threads: {e}")))?
            .install(work),
        None => work(),
    }
}
