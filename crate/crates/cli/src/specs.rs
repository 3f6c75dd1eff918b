//! Flag grammars: rationals, alpha lists, loss specs, side-information.

use std::collections::BTreeSet;
use std::fs;

use thiserror::Error;

use geomech::matrix::RMatrix;
use geomech::mechanism::{ConsumerProfile, LossKind};
use geomech::rational::Rational;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Lib(#[from] geomech::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Usage(String),
}

pub fn parse_rational(s: &str) -> Result<Rational, CliError> {
    Ok(s.parse::<Rational>()?)
}

/// Comma-separated rationals, e.g. "1/4,1/2".
pub fn parse_alphas(s: &str) -> Result<Vec<Rational>, CliError> {
    s.split(',').map(|part| parse_rational(part.trim())).collect()
}

/// --seed flag, then $GEOMECH_SEED, then 0.
pub fn parse_seed(flag: Option<u64>) -> Result<u64, CliError> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var("GEOMECH_SEED") {
        Ok(value) => value
            .parse()
            .map_err(|_| CliError::Usage(format!("GEOMECH_SEED is not a 64-bit seed: {value:?}"))),
        Err(_) => Ok(0),
    }
}

/// Loss flag: a named generator or "@path" to a loss-matrix JSON file.
pub enum LossSpec {
    Named(LossKind),
    File(RMatrix),
}

impl LossSpec {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "abs" => Ok(LossSpec::Named(LossKind::Abs)),
            "square" => Ok(LossSpec::Named(LossKind::Square)),
            "zero_one" => Ok(LossSpec::Named(LossKind::ZeroOne)),
            _ => match s.strip_prefix('@') {
                Some(path) => {
                    let raw = fs::read_to_string(path)?;
                    Ok(LossSpec::File(serde_json::from_str(&raw)?))
                }
                None => Err(CliError::Usage(format!(
                    "unknown loss {s:?}; expected abs, square, zero_one, or @path"
                ))),
            },
        }
    }

    pub fn into_profile(
        self,
        n: usize,
        side_info: BTreeSet<usize>,
    ) -> Result<ConsumerProfile, CliError> {
        let profile = match self {
            LossSpec::Named(kind) => ConsumerProfile::with_loss_kind(n, kind, side_info)?,
            LossSpec::File(matrix) => ConsumerProfile::new(n, matrix, side_info)?,
        };
        Ok(profile)
    }
}

/// Side-information flag: "a..b" inclusive range or "a,b,c" list.
pub struct SideSpec;

impl SideSpec {
    pub fn parse(s: &str, n: usize) -> Result<BTreeSet<usize>, CliError> {
        let bad = |detail: &str| {
            CliError::Usage(format!(
                "bad side-information {s:?}: {detail} (expected \"a..b\" or \"a,b,c\")"
            ))
        };
        let set: BTreeSet<usize> = if let Some((lo, hi)) = s.split_once("..") {
            let lo: usize = lo.trim().parse().map_err(|_| bad("bad range start"))?;
            let hi: usize = hi.trim().parse().map_err(|_| bad("bad range end"))?;
            if lo > hi {
                return Err(bad("empty range"));
            }
            (lo..=hi).collect()
        } else {
            s.split(',')
                .map(|part| part.trim().parse().map_err(|_| bad("bad member")))
                .collect::<Result<_, _>>()?
        };
        if set.iter().any(|&v| v > n) {
            return Err(CliError::Usage(format!(
                "side-information member out of range 0..={n}: {s:?}"
            )));
        }
        Ok(set)
    }
}
