//! The `tempweak` command-line tool.
//!
//! [`run`] parses arguments, executes one subcommand inside a worker pool and
//! maps failures to exit codes: 0 on success, 1 for invalid arguments or
//! data, 2 when a file cannot be read or written.

use std::ffi::OsString;

use clap::Parser;

pub mod args;
mod commands;

use args::{Cli, Command};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_IO: i32 = 2;

/// Runs the tool on `argv` (program name first) and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // help and version go to stdout and are not failures
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    init_logging(cli.verbose);
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .try_init();
}

fn execute(cli: Cli) -> anyhow::Result<()> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.unwrap_or(0))
        .build()?;
    log::debug!("{} worker threads", pool.current_num_threads());
    pool.install(|| dispatch(&cli.command))
}

fn dispatch(command: &Command) -> anyhow::Result<()> {
    match command {
        Command::Changemap(a) => commands::changemap::run(a),
        Command::BatchPlan(a) => commands::batch_plan::run(a),
        Command::Refine(a) => commands::refine::run(a),
        Command::Evaluate(a) => commands::evaluate::run(a),
        Command::Tile(a) => commands::tiles::tile(a),
        Command::Stitch(a) => commands::tiles::stitch(a),
        Command::MergeClasses(a) => commands::masks::merge(a),
        Command::Resample(a) => commands::masks::resample(a),
        Command::Synth(a) => commands::synth::run(a),
        Command::Validate(a) => commands::masks::validate(a),
    }
}

/// Exit code for a failed command.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<tempweak_core::Error>() {
            return if e.is_io() { EXIT_IO } else { EXIT_INVALID };
        }
        if cause.is::<std::io::Error>() {
            return EXIT_IO;
        }
    }
    EXIT_INVALID
}
