//! Deterministic CSV/JSON writers.
//!
//! Every CSV starts with a block of `# key: value` metadata lines (tool
//! version, command, tag, `U` convention factors, the configuration echo,
//! the grid used, ...), followed by one header row and the data. Reals are
//! printed in scientific notation with 12 significant digits, so repeated
//! runs produce identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::trap::{BATHTUB_U_FACTOR, GAUSSIAN_U_FACTOR};

/// Scientific notation with 12 significant digits.
pub fn format_real(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:.11e}")
    }
}

/// `v` rounded to 12 significant digits (for JSON output).
pub fn round_real(v: f64) -> f64 {
    if v.is_finite() {
        format_real(v).parse().unwrap_or(v)
    } else {
        v
    }
}

/// One CSV field.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Real(f64),
    Int(i64),
    Text(String),
    Bool(bool),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Real(v) => format_real(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.into())
    }
}

/// Ordered `key: value` pairs written ahead of the data.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Metadata {
    entries: Vec<(String, String)>,
}

impl Metadata {
    /// The entries every artifact carries.
    pub fn new(command: &str, tag: &str, config_echo: &str) -> Self {
        let mut m = Metadata::default();
        m.push(
            "tool",
            concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION")),
        );
        m.push("command", command);
        m.push("tag", tag);
        m.push(
            "u_convention",
            format!(
                "U = f V L^2 with f = {BATHTUB_U_FACTOR} (bathtub, square_well), f = {GAUSSIAN_U_FACTOR} (inverted_gaussian, L = delta); units hbar^2/2m = 1"
            ),
        );
        m.push("config", config_echo);
        m
    }

    pub fn push(&mut self, key: &str, value: impl Into<String>) {
        let value: String = value.into();
        // metadata lines must stay single-line comments
        self.entries.push((key.into(), value.replace('\n', " ")));
    }

    pub fn push_grid(&mut self, key: &str, grid: &Grid) {
        self.push(
            key,
            format!(
                "x_min={} x_max={} n_points={} spacing={}",
                format_real(grid.x_min()),
                format_real(grid.x_max()),
                grid.len(),
                format_real(grid.spacing())
            ),
        );
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    fn to_json(&self) -> Value {
        Value::Object(
            self.entries
                .iter()
                .map(|(k, v)| (k.clone(), Value::String(v.clone())))
                .collect(),
        )
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes `dir/name` as CSV and returns its path.
pub fn write_csv(
    dir: &Path,
    name: &str,
    meta: &Metadata,
    header: &[&str],
    rows: &[Vec<Cell>],
) -> Result<PathBuf> {
    let mut out = String::new();
    for (k, v) in &meta.entries {
        let _ = writeln!(out, "# {k}: {v}");
    }
    let _ = writeln!(out, "{}", header.join(","));
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        let line: Vec<String> = row.iter().map(Cell::render).collect();
        let _ = writeln!(out, "{}", line.join(","));
    }
    let path = dir.join(name);
    write_file(&path, &out)?;
    Ok(path)
}

/// Writes `dir/name` as pretty JSON with the metadata under `"metadata"`.
pub fn write_json(dir: &Path, name: &str, meta: &Metadata, body: Value) -> Result<PathBuf> {
    let mut root = serde_json::Map::new();
    root.insert("metadata".into(), meta.to_json());
    match body {
        Value::Object(map) => root.extend(map),
        other => {
            root.insert("data".into(), other);
        }
    }
    let mut text = serde_json::to_string_pretty(&Value::Object(root)).expect("JSON serializes");
    text.push('\n');
    let path = dir.join(name);
    write_file(&path, &text)?;
    Ok(path)
}

/// Writes a plain-text gnuplot script next to the data it plots.
pub fn write_gnuplot(dir: &Path, name: &str, script: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    write_file(&path, script)?;
    Ok(path)
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })
}
