//! `fanning`: command-line front end for the invariant library.
//!
//! Exit codes: 0 success (or congruent), 1 not congruent or a failed `verify`
//! check, 2 unreadable input or bad arguments, 3 non-fanning input, 4
//! insufficient jet order, 5 inconclusive congruence test, 6 any other
//! numerical failure.

mod commands;
mod config;
mod report;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use clap::Parser;
use fanning::Error;

use crate::config::{tolerance, Cli, Command, Format, OutputArgs};
use crate::report::Report;

/// Default acceptance tolerance of the congruence test.
const CONGRUENCE_TOLERANCE: f64 = 1e-7;

#[derive(Debug)]
pub enum Failure {
    Input(String),
    Core(Error),
    Output(io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Core(Error::Parse(_) | Error::InvalidCurve(_) | Error::DegenerateSamples { .. }) => 2,
            Failure::Core(Error::NotFanning { .. }) => 3,
            Failure::Core(Error::InsufficientOrder { .. }) => 4,
            Failure::Core(_) | Failure::Output(_) => 6,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Input(msg) => write!(f, "{msg}"),
            Failure::Core(e) => write!(f, "{e}"),
            Failure::Output(e) => write!(f, "could not write report: {e}"),
        }
    }
}

fn open_output(output: &OutputArgs) -> Result<Box<dyn Write>, Failure> {
    Ok(match &output.out {
        Some(path) => Box::new(BufWriter::new(File::create(path).map_err(Failure::Output)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit(report: &Report, output: &OutputArgs) -> Result<(), Failure> {
    let mut out = open_output(output)?;
    match output.format {
        Format::Json => {
            report.write_json(&mut out).map_err(Failure::Output)?;
            writeln!(out).map_err(Failure::Output)?;
        }
        Format::Csv => report.write_csv(&mut out).map_err(Failure::Output)?,
    }
    out.flush().map_err(Failure::Output)
}

fn run(cli: &Cli) -> Result<u8, Failure> {
    let tol = |default| tolerance(cli.output.tol, default).map_err(Failure::Input);
    let outcome = match &cli.command {
        Command::Invariants {
            curve,
            grid,
            jacobi,
            maurer_cartan,
        } => commands::invariants(curve, grid, *jacobi, *maurer_cartan)?,
        Command::Congruent { a, b, grid } => commands::congruent(a, b, grid.as_ref(), tol(CONGRUENCE_TOLERANCE)?)?,
        Command::Canonicalize { curve, t } => commands::canonicalize(curve, *t)?,
        Command::NormalFrame { curve, grid } => commands::normal_frame_report(curve, grid)?,
        Command::Verify { curve, seed, grid } => {
            commands::verify(curve, grid, *seed, tol(commands::VERIFY_TOLERANCE)?)?
        }
        Command::Transform { curve, seed } => {
            let moved = commands::transform(curve, *seed)?;
            let mut out = open_output(&cli.output)?;
            report::write_json(&mut out, &moved.to_file()).map_err(Failure::Output)?;
            writeln!(out).map_err(Failure::Output)?;
            out.flush().map_err(Failure::Output)?;
            return Ok(0);
        }
    };
    emit(&outcome.report, &cli.output)?;
    Ok(outcome.status)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(status) => ExitCode::from(status),
        Err(failure) => {
            eprintln!("fanning: {failure}");
            ExitCode::from(failure.exit_code())
        }
    }
}
