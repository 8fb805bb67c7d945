//! CSV tables and the JSON summary of one run.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::ValueEnum;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Both,
}

/// A plain table, written as one RFC 4180 CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// Suffix of the file name; empty for the main table.
    pub name: String,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, headers: &[&str]) -> Self {
        Table { name: name.into(), headers: headers.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }
}

/// Shortest round-trip form, so that equal numbers print equally.
pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Everything one subcommand produces.
#[derive(Debug, Clone)]
pub struct Report {
    pub experiment: &'static str,
    pub seed: Option<u64>,
    pub config: Value,
    pub results: Value,
    pub tables: Vec<Table>,
    /// Human-readable summary printed to stdout.
    pub summary: Vec<String>,
}

impl Report {
    pub fn new(experiment: &'static str, config: &impl Serialize) -> Result<Self, CliError> {
        let config = serde_json::to_value(config).map_err(|e| CliError::Output(e.to_string()))?;
        Ok(Report { experiment, seed: None, config, results: Value::Null, tables: Vec::new(), summary: Vec::new() })
    }

    pub fn results(&mut self, results: &impl Serialize) -> Result<(), CliError> {
        self.results = serde_json::to_value(results).map_err(|e| CliError::Output(e.to_string()))?;
        Ok(())
    }

    /// The JSON document; only `generated_at_unix` differs between two runs
    /// of the same configuration and seed.
    pub fn document(&self, generated_at: u64) -> Value {
        json!({
            "schema_version": SCHEMA_VERSION,
            "experiment": self.experiment,
            "seed": self.seed,
            "config": self.config,
            "results": self.results,
            "generated_at_unix": generated_at,
        })
    }

    fn stem(&self, prefix: &str, table: &str) -> String {
        let mut s = format!("{prefix}{}", self.experiment);
        if !table.is_empty() {
            s.push('-');
            s.push_str(table);
        }
        s
    }

    /// Writes the artifacts into `dir` and returns their paths.
    pub fn write(&self, dir: &Path, prefix: &str, format: Format) -> Result<Vec<PathBuf>, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Output(format!("{}: {e}", dir.display())))?;
        let mut written = Vec::new();
        if matches!(format, Format::Csv | Format::Both) {
            for table in &self.tables {
                let path = dir.join(format!("{}.csv", self.stem(prefix, &table.name)));
                write_csv(&path, table)?;
                written.push(path);
            }
        }
        if matches!(format, Format::Json | Format::Both) {
            let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
            let path = dir.join(format!("{}.json", self.stem(prefix, "")));
            let mut text = serde_json::to_string_pretty(&self.document(stamp))
                .map_err(|e| CliError::Output(e.to_string()))?;
            text.push('\n');
            std::fs::write(&path, text).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
            written.push(path);
        }
        Ok(written)
    }
}

fn write_csv(path: &Path, table: &Table) -> Result<(), CliError> {
    let out = |e: csv::Error| CliError::Output(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(out)?;
    w.write_record(&table.headers).map_err(out)?;
    for row in &table.rows {
        w.write_record(row).map_err(out)?;
    }
    w.flush().map_err(|e| CliError::Output(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, 1e-300, 2.5e10] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(opt(None), "");
    }

    #[test]
    fn document_carries_schema_version() {
        let mut r = Report::new("ldp", &json!({"x": [1.0]})).unwrap();
        r.results(&json!({"mean": 0.3})).unwrap();
        let doc = r.document(7);
        assert_eq!(doc["schema_version"], 1);
        assert_eq!(doc["results"]["mean"], 0.3);
        assert_eq!(doc["generated_at_unix"], 7);
    }

    #[test]
    fn writes_requested_formats() {
        let dir = tempfile::tempdir().unwrap();
        let mut r = Report::new("trace-approx", &json!({})).unwrap();
        let mut t = Table::new("", &["t", "delta"]);
        t.push(vec![num(8.0), num(0.5)]);
        r.tables.push(t);
        let files = r.write(dir.path(), "run-", Format::Csv).unwrap();
        assert_eq!(files, vec![dir.path().join("run-trace-approx.csv")]);
        let text = std::fs::read_to_string(&files[0]).unwrap();
        assert_eq!(text, "t,delta\n8,0.5\n");
        let files = r.write(dir.path(), "", Format::Both).unwrap();
        assert_eq!(files.len(), 2);
    }
}
