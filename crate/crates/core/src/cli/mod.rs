//! The `dune` command line: argument grammar, layered configuration, run
//! manifests, figures and the subcommands themselves.

pub mod args;
pub mod commands;
pub mod config;
pub mod manifest;
pub mod plot;

use std::ffi::OsString;

use clap::Parser;

use args::{Cli, Command};
use commands::RunContext;
use config::Config;

/// Parses `argv`, runs the subcommand and returns the process exit code:
/// 0 on success, 1 for usage or configuration errors, 2 for I/O and data
/// errors, 3 for numerical failures.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let _ = env_logger::Builder::new()
        .parse_filters(&cli.log_level)
        .format_timestamp(None)
        .try_init();
    let mut config = match Config::load(cli.config.as_deref(), std::env::vars()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let seed = cli.seed.unwrap_or(config.train.seed);
    config.train.seed = seed;
    let command = command_name(&cli.command).to_string();
    let ctx = RunContext {
        command,
        argv: argv.iter().map(|a| a.to_string_lossy().into_owned()).collect(),
        seed,
        out: cli.out.clone(),
        config,
    };
    let result = match &cli.command {
        Command::Ingest(a) => commands::ingest(&ctx, a),
        Command::Synth(a) => commands::synth(&ctx, a),
        Command::Climatology(a) => commands::climatology(&ctx, a),
        Command::Train(a) => commands::train_cmd(&ctx, a),
        Command::Forecast(a) => commands::forecast_cmd(&ctx, a),
        Command::Rollout(a) => commands::rollout_cmd(&ctx, a),
        Command::Baseline(a) => commands::baseline_cmd(&ctx, a),
        Command::Score(a) => commands::score_cmd(&ctx, a),
        Command::Ensemble(a) => commands::ensemble_cmd(&ctx, a),
        Command::Plot(a) => commands::plot_cmd(&ctx, a),
        Command::ModelSummary(a) => commands::model_summary(&ctx, a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Ingest(_) => "ingest",
        Command::Synth(_) => "synth",
        Command::Climatology(_) => "climatology",
        Command::Train(_) => "train",
        Command::Forecast(_) => "forecast",
        Command::Rollout(_) => "rollout",
        Command::Baseline(_) => "baseline",
        Command::Score(_) => "score",
        Command::Ensemble(_) => "ensemble",
        Command::Plot(_) => "plot",
        Command::ModelSummary(_) => "model-summary",
    }
}

/// [`run`] over the process arguments.
pub fn main() -> i32 {
    run(std::env::args_os())
}
