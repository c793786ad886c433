//! Command-line front end for `chi2norm`.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod verify;

use std::ffi::OsString;
use std::io::Write;

use clap::error::ErrorKind;
use clap::Parser;

use crate::args::{Cli, Command, SubgaussianCommand, VerifyCommand};
use crate::config::{load_config, RunConfig};
use crate::error::{CliError, EXIT_OK, EXIT_USAGE};
use crate::output::Report;

/// Parses `argv`, runs the command and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = e.print();
                    EXIT_OK
                }
                _ => {
                    let _ = e.print();
                    let record = CliError::Usage(e.kind().to_string()).record();
                    eprintln!("{record}");
                    EXIT_USAGE
                }
            };
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("{}", e.record());
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let file = cli.global.config.as_deref().map(load_config).transpose()?;
    let mut flags = cli.global.overrides();
    if let Command::Verify(v) = &cli.command {
        flags.tier = v.tier;
    }
    let cfg = RunConfig::resolve(file, flags)?;

    let mut failure = None;
    let report = match &cli.command {
        Command::Chi2(a) => commands::chi2(a, &cfg)?,
        Command::Constants(a) => commands::constants(a)?,
        Command::Table1(a) => commands::table1_report(a, cfg.format)?,
        Command::Bound(a) => commands::bound(a, &cfg)?,
        Command::Subgaussian { action } => match action {
            SubgaussianCommand::Threshold { set } => commands::subgaussian_threshold(*set),
            SubgaussianCommand::Check { dist, t_max, t_steps } => {
                commands::subgaussian_check(dist, *t_max, *t_steps, &cfg)?
            }
        },
        Command::Verify(v) => match &v.action {
            Some(VerifyCommand::Stein { dist, n, max_order }) => {
                let s = verify::stein_comparison(dist, *n, *max_order, &cfg)?;
                let (failed, total) = verify::stein_failures(&s);
                if failed > 0 {
                    failure = Some(CliError::Verification { failed, total });
                }
                verify::stein_report(&s)
            }
            None => {
                let checks = verify::run_tiers(&cfg)?;
                let failed = checks.iter().filter(|c| !c.passed).count();
                if failed > 0 {
                    failure = Some(CliError::Verification {
                        failed,
                        total: checks.len(),
                    });
                }
                verify::checks_report(&checks)
            }
        },
        Command::Plotdata(a) => commands::plotdata(a)?,
    };
    emit(&report, &cfg)?;
    failure.map_or(Ok(()), Err)
}

fn emit(report: &Report, cfg: &RunConfig) -> Result<(), CliError> {
    let text = report.render(cfg.format);
    match &cfg.output {
        Some(path) => std::fs::write(path, text)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}
