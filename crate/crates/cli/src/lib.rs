//! Command-line front end: argument handling, report emission and batch
//! runs over a directory of contracts.

pub mod commands;
pub mod settings;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::{run, ExitStatus};
pub use settings::{CommonOpts, OutputFormat};

#[derive(Debug, Parser)]
#[command(name = "evmscope", version, about = "Finds and ranks money-related paths in EVM bytecode")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Analyse one contract (raw hex or JSON envelope).
    Analyze {
        file: PathBuf,
        #[command(flatten)]
        opts: CommonOpts,
        /// Report destination. With `--output both` the extension is
        /// replaced by .json and .html.
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
        /// Writes the control-flow graph in DOT format.
        #[arg(long, value_name = "PATH")]
        dump_cfg: Option<PathBuf>,
    },
    /// Analyse every contract file in a directory.
    Batch {
        dir: PathBuf,
        #[command(flatten)]
        opts: CommonOpts,
        /// Directory for the reports and summary.json.
        #[arg(long, value_name = "DIR", default_value = "evmscope-reports")]
        out: PathBuf,
    },
}
