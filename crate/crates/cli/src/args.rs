//! Command-line and config-file arguments. Every configurable field is an
//! `Option` with its default applied by the command, so a flag given on the
//! command line can be told apart from one left unset and override the
//! config file.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Map, Value};

use crate::failure::{Failure, Outcome};

#[derive(Parser, Debug)]
#[command(name = "genrank", version, about = "Generic-rank laws, decompositions and network interpolation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Empirical rank versus predicted rank over a grid of cells.
    RankGrid(RankGridArgs),
    /// Builds and exactly verifies every decomposition over random instances.
    DecomposeVerify(DecomposeArgs),
    /// Fits a two-layer network to data.
    Interpolate(InterpolateArgs),
    /// Prints the capacity verdict for (m, n, d, activation).
    CapacityCheck(CapacityArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerKind {
    Integer,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reading {
    Recentered,
    ConstantShift,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MultiMode {
    SplitNeurons,
    SolveV,
}

/// Sorted, de-duplicated list of counts written as `2..8`, `1,3,5` or a mix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid(pub Vec<usize>);

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let num = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("bad grid value {t:?}: {e}"));
            match part.split_once("..") {
                Some((lo, hi)) => {
                    let (lo, hi) = (num(lo)?, num(hi.trim_start_matches('='))?);
                    out.extend(lo..=hi);
                }
                None => out.push(num(part)?),
            }
        }
        out.sort_unstable();
        out.dedup();
        Ok(Grid(out))
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(ToString::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

impl Serialize for Grid {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Grid {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            One(usize),
            Many(Vec<usize>),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::One(v) => Ok(Grid(vec![v])),
            Raw::Many(v) => Grid::from_str(&v.iter().map(ToString::to_string).collect::<Vec<_>>().join(","))
                .map_err(serde::de::Error::custom),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Flags shared by every subcommand.
#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct Common {
    /// Master seed; every cell, trial and restart seed derives from it.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    /// Exit 1 on any mismatch or failed check.
    #[arg(long, num_args = 0..=1, default_missing_value = "true", require_equals = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strict: Option<bool>,
    /// Flat JSON file of defaults; flags given on the command line win.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct RankGridArgs {
    /// matmul, hadamard-power, poly, khatri-power, khatri-poly, analytic,
    /// analytic-khatri or zhang-blockdiag.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub law: Option<String>,
    /// Input dimensions d, e.g. 1..3 or 1,2,3.
    #[arg(long = "d")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<Grid>,
    /// Powers k (hadamard-power and khatri-power).
    #[arg(long = "k")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<Grid>,
    /// Row counts m of A.
    #[arg(long = "m")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<Grid>,
    /// Row counts n of B.
    #[arg(long = "n")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<Grid>,
    /// Polynomial coefficients c0,c1,... for the poly laws.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coeffs: Option<String>,
    /// Activation for the analytic laws.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub activation: Option<String>,
    /// Skip cells with m * d above this value.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_md: Option<usize>,
    /// Random trials per cell.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sampler: Option<SamplerKind>,
    /// Integer sampler range R: entries uniform in [-R, R].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub range: Option<i64>,
    /// Also compute the exhaustive Kruskal rank of every trial.
    #[arg(long, num_args = 0..=1, default_missing_value = "true", require_equals = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kruskal: Option<bool>,
    /// Maximum column subsets the Kruskal search may visit.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kruskal_budget: Option<u64>,
    /// Rerun the single trial with this seed; the grid must be one cell.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replay: Option<u64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct DecomposeArgs {
    /// Comma-separated decomposition kinds; all by default.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kinds: Option<String>,
    /// Random instances per kind.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    /// Largest dimension d.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_d: Option<usize>,
    /// Largest power k or polynomial degree K.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_k: Option<usize>,
    /// Largest row count m of A.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_m: Option<usize>,
    /// Largest row count n of B.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_n: Option<usize>,
    /// Entries uniform in [-R, R].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub range: Option<i64>,
    /// Test hook: perturbs one diagonal entry of every decomposition.
    #[arg(long, hide = true, num_args = 0..=1, default_missing_value = "true", require_equals = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inject_fault: Option<bool>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct InterpolateArgs {
    /// Data matrix X (d x n, one point per column) in matrix text format.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<PathBuf>,
    /// Targets: n x q, or 1 x n for a single output.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y: Option<PathBuf>,
    /// Hidden width m when reading files.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub width: Option<usize>,
    /// `d,n,m`: draw X and y from N(0, 1) under the seed.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub random: Option<String>,
    /// tanh, logistic, arctan, gelu, cubic or poly:c0,c1,...
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub act: Option<String>,
    /// Fit even when the capacity verdict is negative (m must still be even).
    #[arg(long, num_args = 0..=1, default_missing_value = "true", require_equals = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub force: Option<bool>,
    /// Required sup-norm residual.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    /// Restarts with fresh W0 before giving up.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_restarts: Option<usize>,
    /// How the derivative is centered at eta.
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reading: Option<Reading>,
    /// Strategy for several outputs.
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub multi: Option<MultiMode>,
    /// Solver trace as JSON lines.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct CapacityArgs {
    /// Hidden width.
    #[arg(long = "m")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    /// Number of data points.
    #[arg(long = "n")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Input dimension.
    #[arg(long = "d")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    /// tanh, logistic, arctan, gelu, cubic or poly:c0,c1,...
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub act: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

/// Overlays command-line values on the config file named by `--config`.
/// Unknown config keys are a usage error.
pub fn merge_config<T>(subcommand: &str, flags: T, config: Option<&Path>) -> Outcome<T>
where
    T: Serialize + for<'de> Deserialize<'de>,
{
    let Some(path) = config else { return Ok(flags) };
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("config {}: {e}", path.display())))?;
    let mut merged: Map<String, Value> = serde_json::from_str(&text)
        .map_err(|e| Failure::Usage(format!("config {} must be a flat JSON object: {e}", path.display())))?;

    let cmd = Cli::command();
    let sub = cmd.find_subcommand(subcommand).expect("known subcommand");
    let known: Vec<&str> = sub.get_arguments().filter_map(|a| a.get_long()).filter(|l| *l != "config").collect();
    if let Some(bad) = merged.keys().find(|k| !known.contains(&k.as_str())) {
        return Err(Failure::Usage(format!("unknown config key {bad:?} for {subcommand}")));
    }

    let Value::Object(given) = serde_json::to_value(&flags).expect("arguments serialize") else {
        unreachable!("argument structs serialize to objects")
    };
    merged.extend(given);
    serde_json::from_value(Value::Object(merged)).map_err(|e| Failure::Usage(format!("config {}: {e}", path.display())))
}
