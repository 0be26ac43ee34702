//! Command-line front end. Every experiment is a subcommand writing CSV or
//! JSON; [`execute`] maps errors to exit codes (2 invalid arguments, 3
//! truncation-guard refusal).

mod commands;
mod config;
mod parse;

use std::ffi::OsString;
use std::io::Write;
use std::path::Path;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use crate::error::{Error, Result};

pub use config::{CriterionArg, FormatArg, MixArg, RunConfig, SliceArg, StateKind};

#[derive(Parser, Debug)]
#[command(name = "phasewit", version, about = "Phase-space entanglement witnesses for two-mode states")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate one witness at one point.
    Witness(RunConfig),
    /// Evaluate a witness over a grid of points.
    Scan(RunConfig),
    /// Second-order minor as a function of the width at a fixed point.
    Sweep(RunConfig),
    /// Detection rate over Haar-random pure states.
    Rate(RunConfig),
    /// Partial-transpose and plain-moment baselines.
    Ppt(RunConfig),
    /// Simulated photon-counting readout of the second-order minor.
    Simulate(RunConfig),
    /// Moment-matrix tests of increasing order.
    Hierarchy(RunConfig),
    /// Finite-difference checks of the derivative identities.
    Validate(RunConfig),
}

impl Command {
    fn split(self) -> (&'static str, RunConfig) {
        match self {
            Command::Witness(c) => ("witness", c),
            Command::Scan(c) => ("scan", c),
            Command::Sweep(c) => ("sweep", c),
            Command::Rate(c) => ("rate", c),
            Command::Ppt(c) => ("ppt", c),
            Command::Simulate(c) => ("simulate", c),
            Command::Hierarchy(c) => ("hierarchy", c),
            Command::Validate(c) => ("validate", c),
        }
    }
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::TruncationRefused(_) => 3,
        Error::InvalidArgument(_)
        | Error::InvalidCutoff(_)
        | Error::OutOfDomain(_)
        | Error::IncompleteData(_)
        | Error::Budget(_)
        | Error::Json(_) => 2,
        Error::Diagnostic(_) | Error::Io(_) => 1,
    }
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn provenance(command: &str, cfg: &RunConfig) -> Value {
    json!({
        "tool": "phasewit",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config": cfg.to_json(),
    })
}

fn run(command: Command) -> Result<()> {
    let (name, flags) = command.split();
    let cfg = match &flags.config {
        Some(path) => flags.over(&RunConfig::load(Path::new(path))?)?,
        None => flags,
    };
    let text = match cfg.threads {
        Some(0) => return Err(Error::InvalidArgument("--threads must be positive".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?
            .install(|| commands::dispatch(name, &cfg)),
        None => commands::dispatch(name, &cfg),
    }?;
    match &cfg.out {
        Some(path) => write_atomic(Path::new(path), &text),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// exit code.
pub fn execute<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
