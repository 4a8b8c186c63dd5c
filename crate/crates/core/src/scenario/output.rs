//! Tabular scenario output and its CSV / JSON encodings.
//!
//! Numbers are written with 17 significant digits. Gaps are empty CSV fields
//! and `null` in JSON.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use super::config::{OutputFormat, ScenarioConfig};
use crate::error::{Error, Result};

pub const TOOL_NAME: &str = "homsim";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// A value in a table; `None` is a flagged gap.
pub type Cell = Option<f64>;

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: Vec<&'static str>) -> Self {
        Self {
            name: name.into(),
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<Cell>> {
        let idx = self.columns.iter().position(|c| *c == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }
}

/// Provenance written alongside every table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metadata {
    pub tool: &'static str,
    pub version: &'static str,
    pub scenario: &'static str,
    pub seed: u64,
    pub config: ScenarioConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOutput {
    pub metadata: Metadata,
    pub tables: Vec<Table>,
    /// Seconds spent computing. Reported on the console only, so files stay
    /// byte-identical across reruns.
    pub wall_time_s: f64,
}

impl ScenarioOutput {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }
}

pub fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

fn format_cell(c: Cell) -> Option<String> {
    c.filter(|x| x.is_finite()).map(format_number)
}

pub fn table_to_csv(meta: &Metadata, table: &Table) -> String {
    let mut out = String::new();
    let mut header = serde_json::to_value(meta).expect("metadata serialises");
    header["table"] = Value::from(table.name.clone());
    writeln!(out, "# {header}").unwrap();
    writeln!(out, "{}", table.columns.join(",")).unwrap();
    for row in &table.rows {
        let fields: Vec<String> = row
            .iter()
            .map(|&c| format_cell(c).unwrap_or_default())
            .collect();
        writeln!(out, "{}", fields.join(",")).unwrap();
    }
    out
}

pub fn output_to_json(output: &ScenarioOutput) -> String {
    let mut out = String::new();
    let meta = serde_json::to_string(&output.metadata).expect("metadata serialises");
    write!(out, "{{\"metadata\":{meta},\"tables\":{{").unwrap();
    for (i, table) in output.tables.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let name = serde_json::to_string(&table.name).unwrap();
        let cols = serde_json::to_string(&table.columns).unwrap();
        write!(out, "{name}:{{\"columns\":{cols},\"rows\":[").unwrap();
        for (j, row) in table.rows.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            out.push('[');
            for (k, &c) in row.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                out.push_str(&format_cell(c).unwrap_or_else(|| "null".to_string()));
            }
            out.push(']');
        }
        out.push_str("]}");
    }
    out.push_str("}}\n");
    out
}

/// Writes `output` into `dir` (created if missing) and returns the paths.
/// CSV gives one file per table; JSON one file per scenario.
pub fn write_output(output: &ScenarioOutput, dir: &Path) -> Result<Vec<PathBuf>> {
    let io_err = |path: &Path, source| Error::Io {
        path: path.display().to_string(),
        source,
    };
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut written = Vec::new();
    match output.metadata.config.format {
        OutputFormat::Csv => {
            for table in &output.tables {
                let path = dir.join(format!("{}.csv", table.name));
                fs::write(&path, table_to_csv(&output.metadata, table))
                    .map_err(|e| io_err(&path, e))?;
                written.push(path);
            }
        }
        OutputFormat::Json => {
            let path = dir.join(format!("{}.json", output.metadata.scenario));
            fs::write(&path, output_to_json(output)).map_err(|e| io_err(&path, e))?;
            written.push(path);
        }
    }
    Ok(written)
}
