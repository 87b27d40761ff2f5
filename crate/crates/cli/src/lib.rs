//! Command-line harness for the preconditioned momentum methods: runs,
//! comparisons, step-size tuning and the built-in theory checks.

// `!(x > 0.0)` rejects NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod problem;
pub mod suites;

pub use commands::Output;
pub use error::{CliError, Status};

use args::{Cli, Command, RunArgs, VerifyArgs};
use clap::Parser;
use precond_momentum::verify::MarginScale;
use std::ffi::OsString;
use std::fmt::Write;

pub const VERIFY_HEADER: &str = "check,label,passed,worst_margin,scale,tolerance,items";

fn resolve(args: &RunArgs, compare: bool) -> Result<config::CliConfig, CliError> {
    let mut map = match &args.config {
        Some(path) => config::load_config_file(path)?,
        None => Default::default(),
    };
    for (k, v) in args.overrides() {
        map.insert(k.to_string(), v);
    }
    config::build_config(&map, compare)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn cmd_verify(args: &VerifyArgs) -> Result<Output, CliError> {
    let entries = suites::run_suite(args.suite, args.halve_l)?;
    let mut report = String::new();
    let mut csv = format!("{VERIFY_HEADER}\n");
    for e in &entries {
        writeln!(report, "{}", e.line()).unwrap();
        match &e.outcome {
            Ok(r) => {
                let scale = match r.scale {
                    MarginScale::Absolute => "absolute",
                    MarginScale::Relative => "relative",
                };
                writeln!(
                    csv,
                    "{},{},{},{},{scale},{},{}",
                    csv_field(&r.name),
                    csv_field(&e.label),
                    r.passed,
                    commands::num(r.worst),
                    commands::num(r.tolerance),
                    r.margins.len()
                )
                .unwrap();
            }
            Err(err) => {
                writeln!(csv, "error,{},false,-,-,-,0", csv_field(&format!("{}: {err}", e.label))).unwrap();
            }
        }
    }
    let failed = entries.iter().filter(|e| !e.passed()).count();
    writeln!(report, "{} checks, {failed} failed", entries.len()).unwrap();
    if matches!(args.suite, suites::Suite::Props | suites::Suite::All) {
        writeln!(report, "smoothing wiring comparison (informational):").unwrap();
        for e in suites::chaining_comparison()? {
            writeln!(report, "  {}", e.line()).unwrap();
        }
    }
    Ok(Output {
        status: if failed == 0 {
            Status::Success
        } else {
            Status::VerificationFailure
        },
        csv,
        report,
    })
}

/// Executes a parsed command. Returns the output and the `--out`
/// destination, if any.
pub fn execute_cli(cli: &Cli) -> Result<(Output, Option<std::path::PathBuf>), CliError> {
    match &cli.command {
        Command::Run(a) => {
            let c = resolve(a, false)?;
            Ok((commands::cmd_run(&c)?, c.out.clone()))
        }
        Command::Compare(a) => {
            let c = resolve(a, true)?;
            Ok((commands::cmd_compare(&c)?, c.out.clone()))
        }
        Command::Tune(a) => {
            let c = resolve(a, false)?;
            Ok((commands::cmd_tune(&c)?, c.out.clone()))
        }
        Command::Verify(a) => Ok((cmd_verify(a)?, a.out.clone())),
    }
}

pub fn execute<I, T>(argv: I) -> Result<(Output, Option<std::path::PathBuf>), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| CliError::Usage(e.to_string()))?;
    execute_cli(&cli)
}

/// Runs the CLI, writing output to `--out`/stdout and messages to stderr,
/// and returns the exit status.
pub fn main_with_args<I, T>(argv: I) -> Status
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { Status::Usage } else { Status::Success };
        }
    };
    match execute_cli(&cli) {
        Ok((output, out)) => {
            let written = match &out {
                Some(path) => std::fs::write(path, &output.csv).map(|_| print!("{}", output.report)),
                None => {
                    print!("{}", output.csv);
                    eprint!("{}", output.report);
                    Ok(())
                }
            };
            match written {
                Ok(()) => output.status,
                Err(e) => {
                    eprintln!("error: {e}");
                    Status::Usage
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.status()
        }
    }
}
