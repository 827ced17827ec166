//! `casad` command-line front end: simulate, train, detect, tune, report.

mod args;
mod commands;
mod config;
mod error;
mod io;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command, Merge};
use casad::sim::PROTOTYPE_SEED;
use error::CliResult;

fn init_logging() {
    let env = env_logger::Env::new().filter_or("CASAD_LOG_LEVEL", "warn");
    env_logger::Builder::from_env(env).format_timestamp(None).init();
}

fn header(command: &str, seed: u64) {
    println!("casad {} {command} (seed {seed})", env!("CARGO_PKG_VERSION"));
}

fn run(cli: Cli) -> CliResult<()> {
    let file = config::load_config(cli.config.as_deref())?;
    let seed = cli.seed.or(file.seed);
    let name = cli.command.name();
    match cli.command {
        Command::Simulate(a) => {
            let a = a.merge(file.simulate);
            let schedule = commands::simulate::build_schedule(&a, seed)?;
            header(name, schedule.rng_seed);
            commands::simulate::run(&a, &schedule)
        }
        command => {
            // Only the simulator draws random numbers; the rest are deterministic.
            header(name, seed.unwrap_or(PROTOTYPE_SEED));
            match command {
                Command::Train(a) => commands::train::run(&a.merge(file.train)),
                Command::Detect(a) => commands::detect::run(&a.merge(file.detect)),
                Command::Tune(a) => commands::tune::run(&a.merge(file.tune)),
                Command::Report(a) => commands::report::run(&a.merge(file.report)),
                Command::Simulate(_) => unreachable!("handled above"),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() {
                ExitCode::from(error::Kind::Usage as u8)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    init_logging();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}
