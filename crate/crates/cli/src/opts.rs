//! Options shared by every subcommand. A `--config` TOML file uses the flag
//! names as keys; flags given on the command line take precedence.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, ValueEnum};
use serde::{Deserialize, Deserializer, Serialize};
use serde_json::{Map, Value};

use crate::fail::Fail;

/// A sample count; accepts `1000000`, `1e6` or `1.5e5`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct Count(pub u64);

impl FromStr for Count {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Ok(v) = s.parse::<u64>() {
            return Ok(Count(v));
        }
        let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a count"))?;
        Count::from_f64(v)
    }
}

impl Count {
    fn from_f64(v: f64) -> Result<Self, String> {
        if v >= 0.0 && v.fract() == 0.0 && v <= u64::MAX as f64 {
            Ok(Count(v as u64))
        } else {
            Err(format!("`{v}` is not a nonnegative integer count"))
        }
    }
}

impl<'de> Deserialize<'de> for Count {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(u64),
            Float(f64),
            Text(String),
        }
        let parsed = match Raw::deserialize(d)? {
            Raw::Int(v) => Ok(Count(v)),
            Raw::Float(v) => Count::from_f64(v),
            Raw::Text(s) => s.parse(),
        };
        parsed.map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for Count {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    Csv,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Mc,
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sampler {
    Uniform,
    Stratified,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    SecondDiff,
    Gagliardo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Curve {
    Circle,
    Ellipse,
    TorusKnot,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KnotEnergy {
    Mp,
    Ip,
    Up,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Numerator {
    Energy,
    Dorronsoro,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Coupling {
    Coupled,
    Uncoupled,
}

/// Every flag is optional here; defaults are applied per command.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Opts {
    /// TOML file with default values for any of these flags.
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Random seed (64-bit, default 0).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Monte Carlo samples; scientific notation is accepted.
    #[arg(long)]
    pub samples: Option<Count>,
    /// Directory receiving the result files.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Worker threads (default: MENGER_THREADS, else all cores). Never changes results.
    #[arg(long)]
    pub threads: Option<usize>,

    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub s: Option<f64>,
    #[arg(long)]
    pub p: Option<f64>,
    /// Optional check value; must equal the exponent derived from (n, s, p).
    #[arg(long)]
    pub q: Option<f64>,

    /// Catalog function name.
    #[arg(long = "fn", value_name = "NAME")]
    #[serde(rename = "fn")]
    pub function: Option<String>,
    /// Function parameters as `key=value` pairs.
    #[arg(long, value_delimiter = ',', value_name = "KEY=VALUE")]
    pub fn_param: Option<Vec<String>>,
    /// JSON function descriptor `{"name": …, "params": {…}, "path": …}`.
    #[arg(long, value_name = "JSON")]
    pub fn_json: Option<String>,
    /// `a,b[,…]` (box), `ball:c…,r` or `full:a,b[,…],margin`.
    #[arg(long, allow_hyphen_values = true)]
    pub domain: Option<String>,

    #[arg(long, value_enum)]
    pub method: Option<Method>,
    /// Quadrature refinement depth.
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long, value_enum)]
    pub sampler: Option<Sampler>,
    #[arg(long)]
    pub strata: Option<usize>,
    #[arg(long)]
    pub r_min: Option<f64>,
    #[arg(long)]
    pub r_max: Option<f64>,
    /// Lower cutoff of `|h|` (seminorm) or of the tuple radius (energy).
    #[arg(long)]
    pub cutoff: Option<f64>,
    /// Dilation factors of a scaling probe.
    #[arg(long, value_delimiter = ',')]
    pub lambdas: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    pub coupling: Option<Coupling>,
    /// Added to the derived q (negative control of a scaling probe).
    #[arg(long, allow_hyphen_values = true)]
    pub q_offset: Option<f64>,

    #[arg(long, value_enum)]
    pub kind: Option<Kind>,
    /// Spatial box `lo_1,hi_1[,…]` (or one pair for every axis).
    #[arg(long = "box", value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(rename = "box")]
    pub spatial_box: Option<Vec<f64>>,
    #[arg(long)]
    pub t_min: Option<f64>,
    #[arg(long)]
    pub t_max: Option<f64>,

    #[arg(long, value_enum)]
    pub curve: Option<Curve>,
    /// Polyline CSV (with `--curve csv`).
    #[arg(long, value_name = "FILE")]
    pub path: Option<PathBuf>,
    #[arg(long)]
    pub vertices: Option<usize>,
    #[arg(long)]
    pub radius: Option<f64>,
    /// Ellipse semi-axes `a,b` or torus radii `major,minor`.
    #[arg(long, value_delimiter = ',')]
    pub axes: Option<Vec<f64>>,
    /// Torus knot winding numbers `p,q`.
    #[arg(long, value_delimiter = ',')]
    pub windings: Option<Vec<u32>>,
    #[arg(long, value_enum)]
    pub energy: Option<KnotEnergy>,

    /// `default` or a comma-separated list of catalog names.
    #[arg(long)]
    pub catalog: Option<String>,
    #[arg(long, value_enum)]
    pub numerator: Option<Numerator>,
    #[arg(long)]
    pub spread_bound: Option<f64>,
    /// Number of random configurations of an audit.
    #[arg(long)]
    pub tuples: Option<Count>,
    /// Audit region `lo_1,hi_1[,…]` (or one pair for every axis).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub region: Option<Vec<f64>>,
    /// Offset radius of the Laplace audit.
    #[arg(long)]
    pub scale: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Base point of the domain variant of the w-measure.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x: Option<Vec<f64>>,
    #[arg(long)]
    pub r: Option<f64>,
    /// Strictly decreasing cutoff schedule.
    #[arg(long, value_delimiter = ',')]
    pub cutoffs: Option<Vec<f64>>,
}

/// Keys describing where and how a run is executed rather than what it computes.
const PLUMBING: [&str; 4] = ["out", "format", "threads", "config"];

impl Opts {
    /// Command-line values over the `--config` file.
    pub fn resolve(self) -> Result<Opts, Fail> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let file = load_config(&path)?;
        let mut merged = to_object(&file);
        for (k, v) in to_object(&self) {
            merged.insert(k, v);
        }
        let mut opts: Opts = serde_json::from_value(Value::Object(merged))
            .map_err(|e| Fail::Validation(format!("config {}: {e}", path.display())))?;
        opts.config = Some(path);
        Ok(opts)
    }

    /// Names of the keys that are set.
    pub fn set_keys(&self) -> Vec<String> {
        to_object(self).into_iter().map(|(k, _)| k).collect()
    }

    /// Rejects keys the command does not use.
    pub fn only(&self, command: &str, allowed: &[&str]) -> Result<(), Fail> {
        let stray: Vec<String> = self
            .set_keys()
            .into_iter()
            .filter(|k| !allowed.contains(&k.as_str()) && !PLUMBING.contains(&k.as_str()))
            .collect();
        if stray.is_empty() {
            Ok(())
        } else {
            Err(Fail::Validation(format!(
                "`{command}` does not take: {}",
                stray.join(", ")
            )))
        }
    }

    /// The computation-relevant settings, sufficient to re-run the command.
    pub fn echo(&self) -> Value {
        let mut m = to_object(self);
        for k in PLUMBING {
            m.remove(k);
        }
        Value::Object(m)
    }
}

fn to_object(opts: &Opts) -> Map<String, Value> {
    match serde_json::to_value(opts).expect("options serialize") {
        Value::Object(m) => m.into_iter().filter(|(_, v)| !v.is_null()).collect(),
        _ => unreachable!("options serialize to an object"),
    }
}

fn load_config(path: &Path) -> Result<Opts, Fail> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Fail::Validation(format!("config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Fail::Validation(format!("config {}: {e}", path.display())))
}
