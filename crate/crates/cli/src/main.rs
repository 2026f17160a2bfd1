use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::Value;

mod commands;
mod config;
mod error;

use commands::FixtureName;
use config::{Overrides, RunConfig};
use error::Result;

/// Digitize, model and summarize presence drawings.
#[derive(Debug, Parser)]
#[command(name = "presence-trace", version, allow_negative_numbers = true)]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Render the blank drawing sheet
    Template {
        /// Output directory for template.svg and template.json
        #[arg(long)]
        out: PathBuf,
        /// Print the event ticks of this group (requires --events)
        #[arg(long)]
        group: Option<String>,
    },
    /// Validate drawings and add them to the record store
    Ingest {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Model drawings, from trace files or the provisional records in --store
    Analyze {
        files: Vec<PathBuf>,
        /// Analyzed record store to write; records go to stdout when omitted
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Report validation issues and prerequisite conformance
    Validate {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Detection table, global statistics and intensity box plot
    Aggregate {
        /// Output directory
        #[arg(long)]
        out: PathBuf,
    },
    /// Overlay every analyzed drawing on one sheet
    Render {
        #[arg(long)]
        out: PathBuf,
        /// Mark the experience and mental-exit points
        #[arg(long)]
        mark_points: bool,
    },
    /// Write a synthetic study as trace files
    Fixture {
        #[arg(value_enum)]
        name: FixtureName,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(Value, bool)> {
    let config = RunConfig::load(&cli.overrides)?;
    let summary = match cli.command {
        Command::Template { out, group } => commands::template(&config, &out, group.as_deref())?,
        Command::Ingest { files } => commands::ingest(&config, &files)?,
        Command::Analyze { files, out } => commands::analyze(&config, &files, out.as_deref())?,
        Command::Validate { files, out } => return commands::validate(&config, &files, out.as_deref()),
        Command::Aggregate { out } => commands::aggregate_cmd(&config, &out)?,
        Command::Render { out, mark_points } => commands::render(&config, &out, mark_points)?,
        Command::Fixture { name, out } => commands::fixture(name, &out, &config.sheet()?)?,
    };
    Ok((summary, false))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        // Summaries go to stderr so stdout carries only records and reports.
        Ok((summary, fatal)) => {
            eprintln!("{summary}");
            if fatal {
                ExitCode::from(5)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
