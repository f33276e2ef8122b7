//! `observatory`: ingest wiki snapshots, compute indicators and risk scores,
//! emit the entropy scatter, export results and serve the read-only API.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use observatory_core::Window;

use crate::commands::{Context, Source};
use crate::config::{Config, ConfigError};

/// Errors in how the program was invoked (exit status 2).
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

#[derive(Parser)]
#[command(name = "observatory", version, about = "Knowledge integrity risk observatory for Wikipedia language editions")]
struct Cli {
    /// JSON config file; keys may be overridden with OBSERVATORY_<KEY> variables.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Store directory (overrides the config).
    #[arg(long, global = true, value_name = "DIR")]
    store: Option<PathBuf>,
    /// More log output; repeat for more detail.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
#[group(multiple = false)]
struct SourceArgs {
    /// Load snapshot fixture files from DIR instead of fetching (no network).
    #[arg(long, value_name = "DIR")]
    fixtures: Option<PathBuf>,
    /// Replay recorded API payloads from DIR (no network).
    #[arg(long, value_name = "DIR")]
    replay: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Capture one snapshot per wiki for a window and store it.
    Ingest {
        /// Month (`2021-04`) or range (`2021-01..2021-05`, end exclusive).
        #[arg(long)]
        window: Window,
        /// Cohort, comma separated (`ja,en` or `ja.wikipedia`); defaults to the config or to every available wiki offline.
        #[arg(long, value_delimiter = ',')]
        wikis: Vec<String>,
        #[command(flatten)]
        source: SourceArgs,
        /// Curated data and provider files (overrides `aux_dir`).
        #[arg(long, value_name = "DIR", conflicts_with = "fixtures")]
        aux: Option<PathBuf>,
        /// Record live responses under DIR for later replay.
        #[arg(long, value_name = "DIR", conflicts_with_all = ["fixtures", "replay"])]
        record: Option<PathBuf>,
        /// Wikis fetched concurrently.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Compute indicators, the risk matrix and the scatter for stored snapshots.
    Compute {
        #[arg(long)]
        window: Window,
        /// Article threshold for the scatter (strictly greater than).
        #[arg(long)]
        min_articles: Option<u64>,
    },
    /// Write scatter.csv and fit.json for the edit/view entropy scatter.
    Scatter {
        #[arg(long)]
        window: Window,
        #[arg(long)]
        min_articles: Option<u64>,
        /// Output directory.
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Serve the read-only HTTP API until interrupted.
    Serve {
        /// Address to listen on (overrides `listen`).
        #[arg(long, value_name = "HOST:PORT")]
        listen: Option<String>,
        /// Origin allowed by CORS (overrides `cors_origin`); any origin when unset.
        #[arg(long)]
        cors_origin: Option<String>,
    },
    /// Copy the computed documents for a window out of the store.
    Export {
        #[arg(long)]
        window: Window,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let config = Config::load(cli.config.as_deref(), std::env::vars())?;
    let ctx = Context { config, store: cli.store };
    match cli.command {
        Command::Ingest { window, wikis, source, aux, record, jobs } => {
            let source = match (source.fixtures, source.replay) {
                (Some(dir), _) => Source::Fixtures(dir),
                (_, Some(dir)) => Source::Replay { dir, aux },
                _ => Source::Live { aux, record },
            };
            commands::ingest(&ctx, window, &wikis, jobs, source)
        }
        Command::Compute { window, min_articles } => commands::compute(&ctx, window, min_articles),
        Command::Scatter { window, min_articles, out } => commands::scatter(&ctx, window, min_articles, &out),
        Command::Serve { listen, cors_origin } => commands::serve(&ctx, listen, cors_origin),
        Command::Export { window, out } => commands::export(&ctx, window, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() || e.downcast_ref::<ConfigError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
