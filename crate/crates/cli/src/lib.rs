//! The `srwalk` command-line tool.
//!
//! Exit codes: 0 on success, 1 when a check or assertion fails, 2 on usage
//! or validation errors.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;

pub use config::{Command, Format, RunConfig};

/// Why a command did not succeed.
#[derive(Debug)]
pub enum Failure {
    /// A check ran and failed; the report was still written.
    Check(String),
    Usage(String),
    Clap(clap::Error),
}

impl Failure {
    pub fn usage(msg: impl Into<String>) -> Self {
        Failure::Usage(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Check(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Clap(e) if !e.use_stderr() => 0,
            Failure::Clap(_) => 2,
        }
    }
}

impl From<srwalk_core::Error> for Failure {
    fn from(e: srwalk_core::Error) -> Self {
        use srwalk_core::Error;
        match e {
            Error::MajorantViolation { .. } | Error::EnergyDrift { .. } => Failure::Check(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Check(m) | Failure::Usage(m) => f.write_str(m),
            Failure::Clap(e) => write!(f, "{e}"),
        }
    }
}

/// Parse arguments, run the command and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let outcome = config::parse(args).and_then(|cfg| commands::execute(&cfg));
    match outcome {
        Ok(()) => 0,
        Err(Failure::Clap(e)) => {
            // help and version are printed to stdout and exit 0
            let _ = e.print();
            Failure::Clap(e).exit_code()
        }
        Err(f) => {
            eprintln!("error: {f}");
            f.exit_code()
        }
    }
}
