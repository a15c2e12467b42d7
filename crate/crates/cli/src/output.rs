//! Exporters. Data sections are deterministic for a given config; the
//! timestamp lives on its own metadata line so diffs can exclude it.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::{json, Value};

use crate::config::DesignConfig;
use crate::error::{config, CliError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Touchstone,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Touchstone => "s2p",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Empty,
}

impl Cell {
    fn to_csv(&self) -> String {
        match self {
            // fixed precision keeps byte-identical reruns
            Cell::Num(x) if x.is_nan() => "nan".into(),
            Cell::Num(x) if x.is_infinite() => {
                if *x > 0.0 { "inf".into() } else { "-inf".into() }
            }
            Cell::Num(x) => format!("{x:.12e}"),
            Cell::Int(i) => i.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Num(x) if !x.is_finite() => {
                // JSON numbers cannot carry infinities; keep them readable
                if x.is_nan() { Value::Null } else { json!(if *x > 0.0 { "inf" } else { "-inf" }) }
            }
            Cell::Num(x) => json!(x),
            Cell::Int(i) => json!(i),
            Cell::Empty => Value::Null,
        }
    }
}

/// A sweep table: unit-annotated column names plus equal-length rows.
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<String>) -> Self {
        Table { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

pub struct Metadata {
    pub command: &'static str,
    pub config_echo: String,
    pub timestamp_unix: u64,
}

impl Metadata {
    pub fn new(command: &'static str, cfg: &DesignConfig) -> Result<Self, CliError> {
        Ok(Metadata {
            command,
            config_echo: serde_json::to_string(cfg).map_err(config)?,
            timestamp_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        })
    }
}

const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn write_table(
    out_dir: &Path,
    name: &str,
    format: Format,
    meta: &Metadata,
    table: &Table,
) -> Result<PathBuf, CliError> {
    let path = out_dir.join(format!("{name}.{}", format.extension()));
    let text = match format {
        Format::Csv => render_csv(meta, table),
        Format::Json => render_json(meta, table, None),
        Format::Touchstone => {
            return Err(CliError::Config(
                "touchstone output applies only to the sparams command".into(),
            ))
        }
    };
    write_file(&path, &text)?;
    Ok(path)
}

/// Like `write_table` for JSON, with extra top-level summary fields.
pub fn write_table_with_summary(
    out_dir: &Path,
    name: &str,
    format: Format,
    meta: &Metadata,
    table: &Table,
    summary: Value,
) -> Result<PathBuf, CliError> {
    let path = out_dir.join(format!("{name}.{}", format.extension()));
    let text = match format {
        Format::Csv => render_csv(meta, table),
        Format::Json => render_json(meta, table, Some(summary)),
        Format::Touchstone => {
            return Err(CliError::Config(
                "touchstone output applies only to the sparams command".into(),
            ))
        }
    };
    write_file(&path, &text)?;
    Ok(path)
}

fn render_csv(meta: &Metadata, table: &Table) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# purcell-filters v{VERSION}");
    let _ = writeln!(s, "# command: {}", meta.command);
    let _ = writeln!(s, "# config: {}", meta.config_echo);
    let _ = writeln!(s, "# timestamp_unix: {}", meta.timestamp_unix);
    let _ = writeln!(s, "{}", table.columns.join(","));
    for row in &table.rows {
        let cells: Vec<String> = row.iter().map(Cell::to_csv).collect();
        let _ = writeln!(s, "{}", cells.join(","));
    }
    s
}

fn render_json(meta: &Metadata, table: &Table, summary: Option<Value>) -> String {
    let data: Vec<Value> = table
        .rows
        .iter()
        .map(|row| Value::Array(row.iter().map(Cell::to_json).collect()))
        .collect();
    let config: Value =
        serde_json::from_str(&meta.config_echo).unwrap_or(Value::Null);
    let mut doc = json!({
        "metadata": {
            "tool": "purcell-filters",
            "version": VERSION,
            "command": meta.command,
            "config": config,
            "timestamp_unix": meta.timestamp_unix,
        },
        "columns": table.columns,
        "data": data,
    });
    if let Some(extra) = summary {
        doc["summary"] = extra;
    }
    let mut text = serde_json::to_string_pretty(&doc).unwrap_or_default();
    text.push('\n');
    text
}

/// Touchstone v1 two-port file: frequency in Hz, real/imag S, fixed
/// reference impedance. Comment lines carry the metadata.
pub fn write_touchstone(
    out_dir: &Path,
    name: &str,
    meta: &Metadata,
    z0: f64,
    rows: &[(f64, [(f64, f64); 4])],
) -> Result<PathBuf, CliError> {
    let path = out_dir.join(format!("{name}.s2p"));
    let mut s = String::new();
    let _ = writeln!(s, "! purcell-filters v{VERSION}");
    let _ = writeln!(s, "! command: {}", meta.command);
    let _ = writeln!(s, "! config: {}", meta.config_echo);
    let _ = writeln!(s, "! timestamp_unix: {}", meta.timestamp_unix);
    let _ = writeln!(s, "! freq_hz s11_re s11_im s21_re s21_im s12_re s12_im s22_re s22_im");
    let _ = writeln!(s, "# HZ S RI R {z0}");
    for (f, [s11, s21, s12, s22]) in rows {
        let _ = writeln!(
            s,
            "{f:.12e} {:.12e} {:.12e} {:.12e} {:.12e} {:.12e} {:.12e} {:.12e} {:.12e}",
            s11.0, s11.1, s21.0, s21.1, s12.0, s12.1, s22.0, s22.1
        );
    }
    write_file(&path, &s)?;
    Ok(path)
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| CliError::Config(format!("cannot create {}: {e}", parent.display())))?;
        }
    }
    std::fs::write(path, text)
        .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
}
