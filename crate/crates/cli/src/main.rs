//! `fvdlens` command-line tool.
//!
//! Exit codes: 0 on success, 2 for input/output and usage errors, 3 for numerical failures.
//! Errors are reported on stderr as one JSON object `{"kind", "message", "exit_code"}`.

mod commands;
mod config;
mod reports;

use std::process::ExitCode;

use clap::{ArgMatches, CommandFactory, FromArgMatches, Parser, Subcommand};
use serde_json::{json, Value};

use config::{
    ChunksArgs, CommandArgs, ComputeArgs, DistortArgs, ExtractArgs, FreezeArgs, GlobalArgs, ProbeArgs, RunConfig,
    SensitivityArgs,
};
use fvdlens::Error;

#[derive(Debug, Parser)]
#[command(name = "fvdlens", version, about = "Fréchet video distance toolkit")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    /// JSON config (e.g. a previous run.json); explicit flags take precedence.
    #[arg(long, global = true)]
    config: Option<std::path::PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fréchet distance between two feature files or clip directories.
    Compute(ComputeArgs),
    /// Corrupt a clip directory at one severity level.
    Distort(DistortArgs),
    /// Replace every frame of every clip with its first frame.
    Freeze(FreezeArgs),
    /// Write clip or frame features to a feature file.
    Extract(ExtractArgs),
    /// Spatial vs spatiotemporal corruption across severity levels.
    Sensitivity(SensitivityArgs),
    /// Resample candidates to minimize weighted FVD.
    Probe(ProbeArgs),
    /// FVD over fixed-length frame windows of long clips.
    Chunks(ChunksArgs),
}

impl From<Command> for CommandArgs {
    fn from(c: Command) -> Self {
        match c {
            Command::Compute(a) => CommandArgs::Compute(a),
            Command::Distort(a) => CommandArgs::Distort(a),
            Command::Freeze(a) => CommandArgs::Freeze(a),
            Command::Extract(a) => CommandArgs::Extract(a),
            Command::Sensitivity(a) => CommandArgs::Sensitivity(a),
            Command::Probe(a) => CommandArgs::Probe(a),
            Command::Chunks(a) => CommandArgs::Chunks(a),
        }
    }
}

fn resolve(cli: Cli, matches: &ArgMatches) -> Result<RunConfig, Error> {
    let command: Option<CommandArgs> = cli.command.map(Into::into);
    let base = match &cli.config {
        Some(path) => RunConfig::read(path)?,
        None => json!({}),
    };
    if command.is_none() && cli.config.is_none() {
        return Err(Error::InvalidConfig("no command given; see --help".into()));
    }
    config::merge(base, &cli.global, command.as_ref(), matches)
}

fn exit_code(e: &Error) -> u8 {
    if e.is_numeric() {
        3
    } else {
        2
    }
}

fn report_error(e: &Error) -> ExitCode {
    let code = exit_code(e);
    let body: Value = json!({ "kind": e.kind(), "message": e.to_string(), "exit_code": code });
    eprintln!("{body}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let matches = Cli::command().get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    let run = match resolve(cli, &matches) {
        Ok(run) => run,
        Err(e) => return report_error(&e),
    };
    match commands::execute(&run) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report_error(&e),
    }
}
