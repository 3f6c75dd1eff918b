//! Command-line frontend for the geomech toolkit.
//!
//! Every subcommand reads and writes exact-rational JSON; identical
//! invocations on identical files produce byte-identical outputs. Exit
//! codes are a stable contract for scripts: 0 for ok/derivable/pass,
//! 1 for a negative verdict, 2 for usage or validation errors.

mod specs;
mod verify;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use geomech::derivability::check_derivable;
use geomech::mechanism::{
    check_dp, geometric_full_pmf, geometric_restricted, Mechanism,
};
use geomech::multilevel::{build_ladder, collusion_audit, release};
use geomech::oblivious::{obliviousify, reduction_audit, DbMechanism};
use geomech::optimizer::{optimal_interaction, optimal_mechanism};
use geomech::rational::Rational;

use specs::{parse_alphas, parse_rational, parse_seed, CliError, LossSpec, SideSpec};

#[derive(Parser)]
#[command(
    name = "geomech",
    version,
    about = "Exact-arithmetic geometric mechanisms, privacy verdicts, and minimax optimization for count queries"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
enum GenForm {
    #[default]
    Restricted,
    FullPmf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum CheckKind {
    Dp,
    Derivable,
}

#[derive(Subcommand)]
enum Command {
    /// Construct a geometric mechanism (or list the full two-sided pmf)
    Gen {
        /// Maximum query result; required for the restricted form
        #[arg(long)]
        n: Option<usize>,
        /// Privacy parameter as "p/q" or an integer
        #[arg(long)]
        alpha: String,
        #[arg(long, value_enum, default_value_t)]
        form: GenForm,
        /// List Pr[Z=z] for |z| <= bound in full-pmf form
        #[arg(long, default_value_t = 10)]
        bound: u32,
        /// Write to a file instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Verify differential privacy or derivability of a mechanism file
    Check {
        #[arg(value_enum)]
        kind: CheckKind,
        #[arg(long)]
        mechanism: PathBuf,
        #[arg(long)]
        alpha: String,
    },
    /// Solve for the optimal alpha-DP mechanism for one consumer
    Optimize {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        alpha: String,
        /// abs | square | zero_one | @path-to-loss-matrix.json
        #[arg(long)]
        loss: String,
        /// Side information: "a..b" inclusive range or "a,b,c" list
        #[arg(long)]
        side: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve for the optimal post-processing of a deployed mechanism
    Interact {
        #[arg(long)]
        mechanism: PathBuf,
        #[arg(long)]
        loss: String,
        #[arg(long)]
        side: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Release one result at multiple privacy levels (Algorithm-style chain)
    Release {
        #[arg(long)]
        n: usize,
        /// Comma-separated strictly increasing rationals in (0,1)
        #[arg(long)]
        alphas: String,
        #[arg(long)]
        true_result: usize,
        /// Defaults to $GEOMECH_SEED, then 0
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Audit a release ladder for collusion resistance on exact joint laws
    Audit {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        alphas: String,
    },
    /// Reduce a database-indexed mechanism to an oblivious one and audit it
    Reduce {
        #[arg(long)]
        db_mechanism: PathBuf,
        #[arg(long)]
        alpha: String,
        #[arg(long)]
        loss: String,
        #[arg(long)]
        side: String,
        /// Write the reduced oblivious mechanism here
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a named acceptance suite
    Verify {
        #[arg(long, value_enum)]
        suite: verify::Suite,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}

fn emit<T: Serialize>(value: &T, out: Option<&PathBuf>) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match out {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn load_mechanism(path: &PathBuf) -> Result<Mechanism, CliError> {
    let raw = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&raw)?)
}

#[derive(Serialize)]
struct PmfEntry {
    z: i64,
    p: Rational,
}

#[derive(Serialize)]
struct PmfListing {
    alpha: Rational,
    bound: u32,
    pmf: Vec<PmfEntry>,
}

fn run(command: Command) -> Result<ExitCode, CliError> {
    match command {
        Command::Gen { n, alpha, form, bound, out } => {
            let alpha = parse_rational(&alpha)?;
            match form {
                GenForm::Restricted => {
                    let n = n.ok_or_else(|| {
                        CliError::Usage("--n is required for the restricted form".into())
                    })?;
                    let mechanism = geometric_restricted(n, &alpha)?;
                    emit(&mechanism, out.as_ref())?;
                }
                GenForm::FullPmf => {
                    let pmf = (-(bound as i64)..=bound as i64)
                        .map(|z| {
                            Ok(PmfEntry {
                                z,
                                p: geometric_full_pmf(&alpha, z)?,
                            })
                        })
                        .collect::<Result<Vec<_>, CliError>>()?;
                    emit(&PmfListing { alpha, bound, pmf }, out.as_ref())?;
                }
            }
            Ok(ExitCode::SUCCESS)
        }

        Command::Check { kind, mechanism, alpha } => {
            let m = load_mechanism(&mechanism)?;
            let alpha = parse_rational(&alpha)?;
            match kind {
                CheckKind::Dp => {
                    if alpha.is_negative() || alpha > Rational::one() {
                        return Err(CliError::Usage(format!(
                            "alpha must be in [0,1], got {alpha}"
                        )));
                    }
                    let report = check_dp(&m, &alpha);
                    emit(&report, None)?;
                    Ok(verdict_exit(report.is_ok()))
                }
                CheckKind::Derivable => {
                    // Not-DP input is a validation failure (exit 2), a
                    // non-derivable verdict is exit 1.
                    let report = check_derivable(&m, &alpha)?;
                    emit(&report, None)?;
                    Ok(verdict_exit(report.is_derivable()))
                }
            }
        }

        Command::Optimize { n, alpha, loss, side, out } => {
            let alpha = parse_rational(&alpha)?;
            let profile = LossSpec::parse(&loss)?.into_profile(n, SideSpec::parse(&side, n)?)?;
            let result = optimal_mechanism(n, &alpha, &profile)?;
            emit(&result, out.as_ref())?;
            Ok(ExitCode::SUCCESS)
        }

        Command::Interact { mechanism, loss, side, out } => {
            let deployed = load_mechanism(&mechanism)?;
            let n = deployed.n();
            let profile = LossSpec::parse(&loss)?.into_profile(n, SideSpec::parse(&side, n)?)?;
            let result = optimal_interaction(&deployed, &profile)?;
            emit(&result, out.as_ref())?;
            Ok(ExitCode::SUCCESS)
        }

        Command::Release { n, alphas, true_result, seed, out } => {
            let alphas = parse_alphas(&alphas)?;
            let ladder = build_ladder(n, &alphas)?;
            let seed = parse_seed(seed)?;
            let record = release(&ladder, true_result, seed)?;
            emit(&record, out.as_ref())?;
            Ok(ExitCode::SUCCESS)
        }

        Command::Audit { n, alphas } => {
            let alphas = parse_alphas(&alphas)?;
            let ladder = build_ladder(n, &alphas)?;
            let report = collusion_audit(&ladder)?;
            emit(&report, None)?;
            Ok(verdict_exit(report.ok))
        }

        Command::Reduce { db_mechanism, alpha, loss, side, out } => {
            let raw = fs::read_to_string(&db_mechanism)?;
            let db: DbMechanism = serde_json::from_str(&raw)?;
            let alpha = parse_rational(&alpha)?;
            let n = db.space().n_rows();
            let profile = LossSpec::parse(&loss)?.into_profile(n, SideSpec::parse(&side, n)?)?;
            let report = reduction_audit(&db, &alpha, &profile)?;
            if let Some(path) = &out {
                let oblivious = obliviousify(&db)?;
                emit(&oblivious, Some(path))?;
            }
            let ok = report.dp_preserved && report.loss_dominated;
            emit(&report, None)?;
            Ok(verdict_exit(ok))
        }

        Command::Verify { suite } => Ok(verify::run(suite)),
    }
}

fn verdict_exit(positive: bool) -> ExitCode {
    if positive {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
