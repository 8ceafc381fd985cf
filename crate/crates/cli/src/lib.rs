//! Command-line driver: argument parsing, config merging, backend selection and the
//! per-subcommand pipelines. `run` is what the `edsynth` binary calls.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod report;

use std::ffi::OsString;

use clap::Parser;
use edsynth_core::TriggerMatch;

pub use args::{Cli, Command};
pub use commands::{generate_with, cmd_generate, cmd_hitrate, cmd_label, cmd_narrate, cmd_refine, cmd_sample, cmd_score, cmd_scout};
pub use config::{RunConfig, TriggerSource};
pub use error::{CliError, CliResult, EXIT_CONFIG, EXIT_RUNTIME};
pub use report::RunReport;

/// Parses `args` and runs the subcommand; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return 0;
        }
        Err(e) => {
            let err = CliError::config("usage", e.kind().to_string());
            eprintln!("{}", err.machine_line());
            eprint!("{e}");
            return err.exit_code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("{}", err.machine_line());
            eprintln!("error: {err}");
            err.exit_code
        }
    }
}

fn dispatch(command: Command) -> CliResult<()> {
    let summary = |r: RunReport| {
        eprintln!("{}", serde_json::to_string(&r.counts).expect("counts serialize"));
    };
    match command {
        Command::Scout(a) => summary(cmd_scout(&a.resolve()?)?),
        Command::Narrate(a) => summary(cmd_narrate(&a.resolve()?)?),
        Command::Refine(a) => summary(cmd_refine(&a.resolve()?)?),
        Command::Generate(a) => summary(cmd_generate(&a.resolve()?)?),
        Command::Label(a) => summary(cmd_label(&a.resolve()?)?),
        Command::Score(a) => {
            let mode = if a.string_match { TriggerMatch::String } else { TriggerMatch::Span };
            cmd_score(&a.pred, &a.gold, mode, a.out.as_deref())?;
        }
        Command::Hitrate(a) => {
            cmd_hitrate(&a.synthetic, &a.gold, a.weighted, a.out.as_deref())?;
        }
        Command::Sample(a) => {
            let n = cmd_sample(&a.corpus, a.fraction, a.seed, &a.out)?;
            eprintln!("{{\"sampled\":{n}}}");
        }
    }
    Ok(())
}
