use std::io::Write;

use clap::Parser;
use res_scope::config::{resolve, Cli};
use res_scope::run::run;
use res_scope_core::Error;

/// Exit codes: 0 success, 2 bad input (usage, domain, empty range),
/// 3 capacity (work refused as over budget), 4 I/O failure.
fn exit_code_for(error: &Error) -> i32 {
    match error {
        Error::Domain(_) | Error::Usage(_) | Error::EmptyRange { .. } => 2,
        Error::Capacity { .. } => 3,
        Error::Io { .. } => 4,
    }
}

/// Print to stdout, treating a closed pipe (e.g. `res-scope ... | head`)
/// as a normal early exit instead of a panic.
fn print_stdout(text: &str) {
    let mut out = std::io::stdout().lock();
    if let Err(e) = writeln!(out, "{text}") {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
        eprintln!("error: i/o error on stdout: {e}");
        std::process::exit(4);
    }
}

fn main() {
    // clap handles --help/--version (exit 0) and usage errors (exit 2).
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    let config = match resolve(cli) {
        Ok(config) => config,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(exit_code_for(&e));
        }
    };
    match run(&config) {
        Ok(output) => {
            if config.out_json.is_some() {
                print_stdout(&output.summary);
            } else {
                print_stdout(
                    &serde_json::to_string_pretty(&output.envelope).expect("report serializes"),
                );
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(exit_code_for(&e));
        }
    }
}
