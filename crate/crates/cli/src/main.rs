//! `dct`: simulate campaigns, train the tagger and the tracker, and export
//! tracking curves and review statistics as CSV.

mod artifacts;
mod commands;

use std::process::ExitCode;

use clap::Parser;
use log::LevelFilter;

use commands::{Command, Status};

#[derive(Debug, Parser)]
#[command(name = "dct", version, about = "Dynamic success tracking for crowdfunding campaigns")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

fn log_level() -> Result<LevelFilter, String> {
    match std::env::var("DCT_LOG") {
        Err(_) => Ok(LevelFilter::Info),
        Ok(v) => match v.as_str() {
            "quiet" => Ok(LevelFilter::Warn),
            "info" => Ok(LevelFilter::Info),
            "debug" => Ok(LevelFilter::Debug),
            other => Err(format!("DCT_LOG must be quiet, info or debug, got {other:?}")),
        },
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match log_level() {
        Ok(level) => level,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .format_target(false)
        .init();

    match commands::run(cli.command) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::CheckFailed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
