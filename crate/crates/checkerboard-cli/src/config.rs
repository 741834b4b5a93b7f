//! The JSON experiment config and the small parsers shared with the flag
//! layer. Every field is optional; command-line flags override whatever the
//! file provides, and each subcommand validates the merged result.

use std::path::{Path, PathBuf};

use checkerboard::{RationalProbability, WeightField};
use serde::Deserialize;

use crate::CliError;

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub field: Option<FieldConfig>,
    pub kernel: Option<KernelConfig>,
    pub horizon: Option<i64>,
    /// interval endpoint pairs [a, b], standing for (a + 1/2, b + 1/2)
    pub intervals: Option<Vec<(i64, i64)>>,
    pub sites: Option<Vec<i64>>,
    pub samples: Option<u64>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub output: Option<PathBuf>,
    pub format: Option<Format>,
    pub exact: Option<bool>,
    pub mc: Option<bool>,
    pub profile: Option<Profile>,
    pub window: Option<(i64, i64)>,
    pub streams: Option<u64>,
    /// grid syntax: "2..8", "3", or "1,2,5"
    pub horizons: Option<String>,
    pub separations: Option<String>,
    pub times: Option<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FieldConfig {
    Constant { p: String },
    Polya { u_shift: i64, v_shift: i64 },
}

#[derive(Deserialize, Clone)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum KernelConfig {
    Biased { horizon: i64, p: String },
    Asymmetric { horizon: i64, p: String },
    Poisson { rate: f64, time: f64 },
    Bidirectional { rate_up: f64, rate_down: f64, time: f64 },
    ScalingLimit { horizon: f64 },
}

#[derive(Deserialize, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Deserialize, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Quick,
    Full,
}

pub fn load(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("malformed config {}: {e}", path.display())))
}

/// "n/d", a decimal like "0.4", or a bare integer, always landing on an
/// exact rational in [0, 1].
pub fn parse_rational(text: &str) -> Result<RationalProbability, CliError> {
    let bad = |detail: &str| CliError::Usage(format!("bad probability '{text}': {detail}"));
    let (numer, denom) = if let Some((n, d)) = text.split_once('/') {
        let n: i64 = n.trim().parse().map_err(|_| bad("numerator"))?;
        let d: i64 = d.trim().parse().map_err(|_| bad("denominator"))?;
        (n, d)
    } else if let Some((whole, frac)) = text.split_once('.') {
        if frac.len() > 15 || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad("decimal part"));
        }
        let whole: i64 = if whole.is_empty() {
            0
        } else {
            whole.trim().parse().map_err(|_| bad("integer part"))?
        };
        let scale = 10i64.pow(frac.len() as u32);
        let frac: i64 = if frac.is_empty() {
            0
        } else {
            frac.parse().map_err(|_| bad("decimal part"))?
        };
        (whole * scale + frac, scale)
    } else {
        let n: i64 = text.trim().parse().map_err(|_| bad("not a number"))?;
        (n, 1)
    };
    RationalProbability::from_ints(numer, denom).map_err(|e| bad(&e.to_string()))
}

pub fn resolve_field(
    p: &Option<String>,
    polya: &Option<String>,
    file: &Option<FieldConfig>,
) -> Result<WeightField, CliError> {
    if let Some(text) = p {
        return Ok(WeightField::constant(parse_rational(text)?));
    }
    if let Some(text) = polya {
        let (u, v) = parse_pair(text, ',')?;
        return Ok(WeightField::polya_shifted(u, v));
    }
    match file {
        Some(FieldConfig::Constant { p }) => Ok(WeightField::constant(parse_rational(p)?)),
        Some(FieldConfig::Polya { u_shift, v_shift }) => {
            Ok(WeightField::polya_shifted(*u_shift, *v_shift))
        }
        None => Err(CliError::Usage(
            "no field given: pass --p or --polya, or put a field in the config".into(),
        )),
    }
}

pub fn parse_pair(text: &str, sep: char) -> Result<(i64, i64), CliError> {
    let bad = || CliError::Usage(format!("expected two integers separated by '{sep}': '{text}'"));
    let (a, b) = text.split_once(sep).ok_or_else(bad)?;
    Ok((
        a.trim().parse().map_err(|_| bad())?,
        b.trim().parse().map_err(|_| bad())?,
    ))
}

/// Integer grids: "2..8" (inclusive), "1,2,5", or a single "3".
pub fn parse_grid(text: &str) -> Result<Vec<i64>, CliError> {
    let bad = || CliError::Usage(format!("bad grid '{text}': use lo..hi, a,b,c, or one integer"));
    if let Some((lo, hi)) = text.split_once("..") {
        let lo: i64 = lo.trim().parse().map_err(|_| bad())?;
        let hi: i64 = hi.trim().parse().map_err(|_| bad())?;
        if lo > hi {
            return Err(bad());
        }
        return Ok((lo..=hi).collect());
    }
    text.split(',')
        .map(|part| part.trim().parse().map_err(|_| bad()))
        .collect()
}

pub fn parse_float_list(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|part| {
            part.trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("bad number list '{text}'")))
        })
        .collect()
}
