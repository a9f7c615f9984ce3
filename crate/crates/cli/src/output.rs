//! The result record and its JSON / CSV / text renderings.

use std::io::Write;
use std::path::Path;

use menger_core::estimate::{Diagnostic, Estimate, Outcome};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::fail::Fail;
use crate::opts::Format;

/// Plain table for the CSV rendering.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn write_csv(&self, w: impl Write) -> Result<(), Fail> {
        let mut out = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Fail::Io(e.to_string());
        out.write_record(&self.header).map_err(io)?;
        for r in &self.rows {
            out.write_record(r).map_err(io)?;
        }
        out.flush().map_err(|e| Fail::Io(e.to_string()))
    }
}

/// The JSON result of one command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Output {
    pub command: String,
    pub config: Value,
    pub value: f64,
    pub stderr: f64,
    pub samples: u64,
    pub seed: Option<u64>,
    pub diagnostics: Vec<Diagnostic>,
    pub flagged: bool,
    /// Structured report of the `verify` experiments.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<Value>,
    #[serde(skip)]
    pub table: Option<Table>,
}

impl Output {
    pub fn new(command: &str, config: Value, estimate: &Estimate) -> Self {
        Self {
            command: command.into(),
            config,
            value: estimate.value,
            stderr: estimate.stderr,
            samples: estimate.samples,
            seed: estimate.seed,
            diagnostics: Vec::new(),
            flagged: false,
            report: None,
            table: None,
        }
    }

    pub fn from_outcome(command: &str, config: Value, o: Outcome) -> Self {
        let mut out = Self::new(command, config, &o.estimate);
        out.diagnostics = o.diagnostics;
        out.flagged = o.flagged;
        out
    }

    pub fn diagnostic(&mut self, name: &str, value: f64, note: &str) {
        self.diagnostics.push(Diagnostic::new(name, value, note));
    }

    /// One row with the scalar fields and every diagnostic as a column.
    fn scalar_table(&self) -> Table {
        let mut header = vec!["command", "value", "stderr", "samples", "seed", "flagged"];
        header.extend(self.diagnostics.iter().map(|d| d.name.as_str()));
        let mut t = Table::new(&header);
        let mut row = vec![
            self.command.clone(),
            self.value.to_string(),
            self.stderr.to_string(),
            self.samples.to_string(),
            self.seed.map(|s| s.to_string()).unwrap_or_default(),
            self.flagged.to_string(),
        ];
        row.extend(self.diagnostics.iter().map(|d| d.value.to_string()));
        t.push(row);
        t
    }

    fn json(&self) -> String {
        serde_json::to_string_pretty(self).expect("output serializes") + "\n"
    }

    fn csv(&self) -> Result<String, Fail> {
        match &self.table {
            Some(t) => csv_string(t),
            None => csv_string(&self.scalar_table()),
        }
    }

    /// Prints to stdout, or writes `<stem>.json` / `<stem>.csv` into `dir`.
    pub fn emit(&self, format: Format, dir: Option<&Path>, stem: &str) -> Result<(), Fail> {
        let json = matches!(format, Format::Json | Format::Both);
        let csv = matches!(format, Format::Csv | Format::Both);
        match dir {
            None => {
                let mut stdout = std::io::stdout().lock();
                let io = |e: std::io::Error| Fail::Io(e.to_string());
                if json {
                    stdout.write_all(self.json().as_bytes()).map_err(io)?;
                }
                if csv {
                    stdout.write_all(self.csv()?.as_bytes()).map_err(io)?;
                }
            }
            Some(dir) => {
                std::fs::create_dir_all(dir).map_err(|e| Fail::Io(format!("{}: {e}", dir.display())))?;
                let write = |ext: &str, text: String| {
                    let path = dir.join(format!("{stem}.{ext}"));
                    std::fs::write(&path, text).map_err(|e| Fail::Io(format!("{}: {e}", path.display())))
                };
                if json {
                    write("json", self.json())?;
                }
                if csv {
                    write("csv", self.csv()?)?;
                }
            }
        }
        Ok(())
    }
}

pub fn csv_string(t: &Table) -> Result<String, Fail> {
    let mut buf = Vec::new();
    t.write_csv(&mut buf)?;
    Ok(String::from_utf8(buf).expect("csv is utf-8"))
}

/// Aligned columns for a terminal.
pub fn text_table(t: &Table) -> String {
    let widths: Vec<usize> = (0..t.header.len())
        .map(|c| {
            t.rows
                .iter()
                .map(|r| r[c].chars().count())
                .chain([t.header[c].chars().count()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let line = |cells: &[String]| {
        let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        padded.join("  ").trim_end().to_string() + "\n"
    };
    let mut s = line(&t.header);
    for r in &t.rows {
        s += &line(r);
    }
    s
}
