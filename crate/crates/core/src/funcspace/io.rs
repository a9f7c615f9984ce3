use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::catalog::{test_function, FunctionParams};
use super::model::{FunctionModel, GridData};
use crate::error::{Error, Result};

fn parse_err(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

/// Reads grid samples from CSV with header `x_1,…,x_n,f`, one node per row.
///
/// Rows may come in any order; the node set must be a full uniform tensor grid.
pub fn read_grid_csv(reader: impl Read) -> Result<GridData> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| parse_err(format!("grid CSV header: {e}")))?
        .clone();
    let n = headers.len().saturating_sub(1);
    if n == 0 {
        return Err(parse_err(
            "grid CSV needs at least one coordinate column and an `f` column",
        ));
    }
    for (i, h) in headers.iter().enumerate() {
        let want = if i < n { format!("x_{}", i + 1) } else { "f".to_string() };
        if h != want {
            return Err(parse_err(format!(
                "grid CSV column {} is `{h}`, expected `{want}`",
                i + 1
            )));
        }
    }
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| parse_err(format!("grid CSV: {e}")))?;
        let row = rec
            .iter()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| parse_err(format!("grid CSV line {}: bad number `{t}`", line + 2)))
            })
            .collect::<Result<Vec<f64>>>()?;
        if row.len() != n + 1 {
            return Err(parse_err(format!(
                "grid CSV line {}: expected {} fields",
                line + 2,
                n + 1
            )));
        }
        rows.push(row);
    }
    let mut axes: Vec<Vec<f64>> = vec![Vec::new(); n];
    for (a, axis) in axes.iter_mut().enumerate() {
        axis.extend(rows.iter().map(|r| r[a]));
        axis.sort_by(f64::total_cmp);
        axis.dedup();
        if axis.len() < 2 {
            return Err(parse_err(format!(
                "grid axis {} needs at least two distinct nodes",
                a + 1
            )));
        }
        let step = (axis[axis.len() - 1] - axis[0]) / (axis.len() - 1) as f64;
        if axis
            .windows(2)
            .any(|w| ((w[1] - w[0]) - step).abs() > 1e-9 * step.max(1.0))
        {
            return Err(parse_err(format!("grid axis {} is not uniformly spaced", a + 1)));
        }
    }
    let counts: Vec<usize> = axes.iter().map(Vec::len).collect();
    let total: usize = counts.iter().product();
    if rows.len() != total {
        return Err(parse_err(format!(
            "grid CSV has {} rows but the node lattice has {total}",
            rows.len()
        )));
    }
    let mut values = vec![f64::NAN; total];
    for row in &rows {
        let mut flat = 0usize;
        for a in 0..n {
            let i = axes[a]
                .binary_search_by(|v| v.total_cmp(&row[a]))
                .expect("node collected above");
            flat = flat * counts[a] + i;
        }
        if !values[flat].is_nan() {
            return Err(parse_err("grid CSV repeats a node"));
        }
        values[flat] = row[n];
    }
    let lo = axes.iter().map(|a| a[0]).collect();
    let hi = axes.iter().map(|a| a[a.len() - 1]).collect();
    GridData::new(lo, hi, counts, values)
}

pub fn load_grid_csv(path: &Path) -> Result<FunctionModel> {
    let file = std::fs::File::open(path).map_err(|e| parse_err(format!("{}: {e}", path.display())))?;
    Ok(FunctionModel::grid(read_grid_csv(file)?).with_label(format!("grid:{}", path.display())))
}

/// JSON descriptor of a function: a catalog name with parameters, or a grid
/// given by a CSV path.
///
/// ```json
/// {"name": "gaussian-bump", "params": {"sigma": 0.2}}
/// {"name": "grid", "path": "samples.csv"}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "FunctionParams::is_empty")]
    pub params: FunctionParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

impl FunctionSpec {
    pub fn named(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            params: FunctionParams::new(),
            path: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| parse_err(format!("function descriptor: {e}")))
    }

    pub fn build(&self, n: usize) -> Result<FunctionModel> {
        match &self.path {
            Some(path) if self.name == "grid" => {
                let model = load_grid_csv(path)?;
                if model.dim() != n {
                    return Err(Error::InvalidArgument(format!(
                        "grid file has dimension {} but n = {n}",
                        model.dim()
                    )));
                }
                Ok(model)
            }
            Some(_) => Err(parse_err("only `grid` descriptors take a path")),
            None => test_function(&self.name, n, &self.params),
        }
    }
}
