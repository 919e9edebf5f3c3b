//! Command-line front end: CSV ingestion, the `simulate` config format,
//! report rendering and the subcommands of the `coint` binary.

pub mod args;
pub mod commands;
pub mod config;
pub mod csvio;
pub mod error;
pub mod report;

use std::ffi::OsString;
use std::io::Write;

use clap::error::ErrorKind;
use clap::Parser;

pub use args::{Cli, Command};
pub use error::{CliError, CliResult};
pub use report::ReportDocument;

pub fn banner() -> String {
    format!("coint {}", env!("CARGO_PKG_VERSION"))
}

/// Parse arguments, run the command and write its report. Returns the
/// process exit code.
pub fn execute<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    return 0;
                }
                _ => 2,
            };
            let _ = write!(err, "{e}");
            return code;
        }
    };
    match commands::run(&cli.command, cli.precision) {
        Ok(doc) => {
            let rendered = if cli.json {
                doc.to_json()
            } else {
                let banner = banner();
                doc.to_text((!cli.no_banner).then_some(banner.as_str()))
            };
            match out.write_all(rendered.as_bytes()) {
                Ok(()) => 0,
                Err(e) => {
                    let _ = writeln!(err, "error: cannot write report: {e}");
                    2
                }
            }
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
