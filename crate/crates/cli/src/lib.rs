//! IO, file formats, benchmark harness and CLI for the `l0path` solvers.

pub mod bench;
pub mod commands;
pub mod csv_io;
pub mod json;
pub mod svg;

use clap::Parser;

/// Parses the process arguments, runs the selected subcommand and returns
/// the process exit code.
pub fn run() -> i32 {
    if let Ok(threads) = std::env::var("L0PATH_THREADS") {
        if let Ok(k) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
        }
    }
    let cli = commands::Cli::parse();
    let result = match &cli.command {
        commands::Command::Gen(args) => commands::cmd_gen(args),
        commands::Command::Solve(args) => commands::cmd_solve(args),
        commands::Command::Oracle(args) => commands::cmd_oracle(args),
        commands::Command::Bench(args) => commands::cmd_bench(args),
        commands::Command::Select(args) => commands::cmd_select(args),
        commands::Command::Plot(args) => commands::cmd_plot(args),
    };
    match result {
        Ok(()) => 0,
        Err(failure) => {
            eprintln!("error: {:#}", failure.error);
            failure.code
        }
    }
}
