//! Command-line options shared by the subcommands.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fanning::congruence::equispaced;

/// Environment variable overriding the default tolerance.
pub const TOLERANCE_ENV: &str = "FANNING_TOL";

#[derive(Debug, Parser)]
#[command(name = "fanning", version, about = "Differential invariants and congruence of fanning curves in Gr(n, kn)")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write the report to this file instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Tolerance override (takes precedence over FANNING_TOL).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MaurerCartan {
    /// Lift `(A | ... | A^(k-2) | H)`.
    #[value(name = "H")]
    H,
    /// Lift `(A | ... | A^(k-2) | A^(k-1))`.
    Kderiv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Schwarzian, Wilczynski invariants and reflection data along a grid.
    Invariants {
        curve: PathBuf,
        #[arg(long, default_value = "0:1:11", allow_hyphen_values = true)]
        grid: Grid,
        /// Include the Jacobi matrices of the normal frame through each point.
        #[arg(long)]
        jacobi: bool,
        /// Include the Maurer-Cartan pullback of the normal frame for this lift.
        #[arg(long, value_enum)]
        maurer_cartan: Option<MaurerCartan>,
    },
    /// Decide whether two curves are congruent under GL(kn).
    Congruent {
        a: PathBuf,
        b: PathBuf,
        /// Sample times (default: 2k + 3 equispaced points on [0, 1]).
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<Grid>,
    },
    /// Move the jet at one time to standard position.
    Canonicalize {
        curve: PathBuf,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        t: f64,
    },
    /// Normal frame and conjugated invariants along a grid.
    NormalFrame {
        curve: PathBuf,
        #[arg(long, default_value = "0:1:11", allow_hyphen_values = true)]
        grid: Grid,
    },
    /// Check the structural identities on a curve.
    Verify {
        curve: PathBuf,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value = "0:1:5", allow_hyphen_values = true)]
        grid: Grid,
    },
    /// Write `T A(t) X0` for a seeded random `T` and `X0`.
    Transform {
        curve: PathBuf,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

/// Sample times from `start:end:count` or a comma-separated list.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid(pub Vec<f64>);

impl std::str::FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parse = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("bad number {x:?}: {e}"));
        let times = if s.contains(':') {
            let parts: Vec<&str> = s.split(':').collect();
            let [start, end, count] = parts[..] else {
                return Err(format!("expected start:end:count, got {s:?}"));
            };
            let count: usize = count.trim().parse().map_err(|e| format!("bad count {count:?}: {e}"))?;
            equispaced(parse(start)?, parse(end)?, count)
        } else {
            s.split(',').map(parse).collect::<Result<Vec<_>, _>>()?
        };
        if times.is_empty() {
            return Err("grid needs at least one time".into());
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err("grid times must be finite".into());
        }
        Ok(Grid(times))
    }
}

/// Tolerance from `--tol`, else `FANNING_TOL`, else `default`.
pub fn tolerance(flag: Option<f64>, default: f64) -> Result<f64, String> {
    let value = match flag {
        Some(v) => v,
        None => match std::env::var(TOLERANCE_ENV) {
            Ok(text) => text
                .trim()
                .parse()
                .map_err(|e| format!("{TOLERANCE_ENV}={text:?} is not a number: {e}"))?,
            Err(_) => default,
        },
    };
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(format!("tolerance must be positive, got {value}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids_parse() {
        assert_eq!("0:1:3".parse::<Grid>().unwrap().0, vec![0.0, 0.5, 1.0]);
        assert_eq!("0.25".parse::<Grid>().unwrap().0, vec![0.25]);
        assert_eq!("-1, 0,2".parse::<Grid>().unwrap().0, vec![-1.0, 0.0, 2.0]);
        assert!("0:1:0".parse::<Grid>().is_err());
        assert!("0:1".parse::<Grid>().is_err());
        assert!("a,b".parse::<Grid>().is_err());
    }

    #[test]
    fn tolerance_must_be_positive() {
        assert_eq!(tolerance(Some(1e-6), 1e-7), Ok(1e-6));
        assert!(tolerance(Some(0.0), 1e-7).is_err());
        assert!(tolerance(Some(-1.0), 1e-7).is_err());
    }
}
