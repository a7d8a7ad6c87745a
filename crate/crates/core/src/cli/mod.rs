//! The `vlmask` command line.
//!
//! Every subcommand streams JSONL in bounded chunks: a chunk is processed
//! by a worker pool and written back in input order by a single writer, so
//! outputs are identical for any `--threads` value.

mod args;
mod commands;
mod config;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;
use serde_json::json;

pub use args::Cli;
pub use config::{ConfigFile, RunConfig};

/// Process exit code for runtime failures.
pub const EXIT_FAILURE: i32 = 1;
/// Process exit code for invalid invocations.
pub const EXIT_USAGE: i32 = 2;

/// Entry point for the binary; returns the process exit code.
pub fn main() -> i32 {
    run(std::env::args_os())
}

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return 0;
        }
        Err(e) => {
            report_error("usage", &e.to_string());
            return EXIT_USAGE;
        }
    };
    match commands::dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            let kind = e
                .chain()
                .find_map(|c| c.downcast_ref::<crate::Error>())
                .map_or("error", crate::Error::kind);
            let message = format!("{e:#}");
            report_error(kind, &message);
            if kind == "config" {
                EXIT_USAGE
            } else {
                EXIT_FAILURE
            }
        }
    }
}

/// Writes `{"error":{"kind":..,"message":..}}` to stderr.
fn report_error(kind: &str, message: &str) {
    let summary = json!({ "error": { "kind": kind, "message": message.trim_end() } });
    let _ = writeln!(std::io::stderr(), "{summary}");
}
