use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::{Format, RunConfig};
use crate::error::{CliError, CliResult};

/// Directory for outputs when the config gives no explicit path.
pub const OUT_DIR_ENV: &str = "POLCMT_OUT_DIR";

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(usize),
    Text(String),
    /// Value undefined at this row.
    Blank,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => format!("{v:.16e}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Blank => String::new(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Blank, Cell::Num)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: &'static [&'static str],
    pub rows: Vec<Vec<Cell>>,
}

/// Everything a subcommand produces before it is written out.
pub struct Product {
    pub table: Table,
    pub json: serde_json::Value,
    /// True when the command ran but found nothing to report.
    pub empty_result: bool,
    /// Command-specific provenance for the sidecar.
    pub notes: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Metadata {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub format: Format,
    pub rows: usize,
    pub empty_result: bool,
    pub config: RunConfig,
    pub notes: serde_json::Value,
}

pub fn resolve_path(cfg: &RunConfig, subcommand: &str) -> PathBuf {
    if let Some(p) = &cfg.output.path {
        return p.clone();
    }
    let dir = std::env::var_os(OUT_DIR_ENV).map_or_else(|| PathBuf::from("."), PathBuf::from);
    dir.join(format!("{subcommand}.{}", cfg.output.format.extension()))
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

pub fn render_csv(table: &Table) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::config("output.path", e.to_string());
    w.write_record(table.header).map_err(io)?;
    for row in &table.rows {
        w.write_record(row.iter().map(Cell::render)).map_err(io)?;
    }
    w.into_inner().map_err(|e| CliError::config("output.path", e.to_string()))
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let fail = |e: std::io::Error| CliError::config("output.path", format!("cannot write {}: {e}", path.display()));
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(fail)?;
    }
    fs::write(path, bytes).map_err(fail)
}

fn pretty(v: &impl Serialize) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(v).expect("serialisable output");
    bytes.push(b'\n');
    bytes
}

/// Writes the data file and its `.meta.json` sidecar; returns the data path.
pub fn emit(cfg: &RunConfig, subcommand: &str, product: &Product) -> CliResult<PathBuf> {
    let path = resolve_path(cfg, subcommand);
    let bytes = match cfg.output.format {
        Format::Csv => render_csv(&product.table)?,
        Format::Json => pretty(&product.json),
    };
    write_file(&path, &bytes)?;
    let meta = Metadata {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        subcommand: subcommand.to_string(),
        format: cfg.output.format,
        rows: product.table.rows.len(),
        empty_result: product.empty_result,
        config: cfg.clone(),
        notes: product.notes.clone(),
    };
    write_file(&sidecar_path(&path), &pretty(&meta))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(Cell::Num(0.1).render(), "1.0000000000000001e-1");
        assert_eq!(Cell::Num(124.5).render(), "1.2450000000000000e2");
        let v: f64 = Cell::Num(std::f64::consts::PI).render().parse().unwrap();
        assert_eq!(v, std::f64::consts::PI);
    }

    #[test]
    fn csv_layout() {
        let t = Table {
            header: &["a", "b", "c"],
            rows: vec![vec![Cell::Num(1.0), Cell::Int(2), Cell::Blank]],
        };
        let text = String::from_utf8(render_csv(&t).unwrap()).unwrap();
        assert_eq!(text, "a,b,c\n1.0000000000000000e0,2,\n");
    }

    #[test]
    fn sidecar_name() {
        assert_eq!(sidecar_path(Path::new("out/x.csv")), PathBuf::from("out/x.csv.meta.json"));
    }
}
