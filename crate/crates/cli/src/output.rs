//! Self-describing output files.
//!
//! JSON documents carry `schema`, `timestamp`, `config` and `result`. CSV
//! files start with three comment lines (`# schema=`, `# timestamp=`,
//! `# config=` followed by the config as JSON), then a header row fixing the
//! column order. Floats are written with 17 significant digits so that
//! parsing a file recovers every value exactly. The timestamp is the only
//! field that differs between identical runs.

use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::{Command, RunConfig};
use crate::Failure;

pub const SCHEMA_VERSION: u32 = 1;

pub fn schema(command: Command) -> String {
    format!("srwalk.{}/{}", command.name(), SCHEMA_VERSION)
}

fn timestamp() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Document<T> {
    pub schema: String,
    pub timestamp: u64,
    pub config: RunConfig,
    pub result: T,
}

/// A table ready for CSV output.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn json_document<T: Serialize>(config: &RunConfig, result: &T) -> Result<String, Failure> {
    let doc = Document { schema: schema(config.command), timestamp: timestamp(), config: config.clone(), result };
    let mut text = serde_json::to_string_pretty(&doc).map_err(|e| Failure::usage(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

pub fn csv_document(config: &RunConfig, table: &Table) -> Result<String, Failure> {
    let config_json = serde_json::to_string(config).map_err(|e| Failure::usage(e.to_string()))?;
    let mut out = format!("# schema={}\n# timestamp={}\n# config={config_json}\n", schema(config.command), timestamp());
    let mut writer = csv::Writer::from_writer(Vec::new());
    let failure = |e: csv::Error| Failure::usage(e.to_string());
    writer.write_record(&table.header).map_err(failure)?;
    for row in &table.rows {
        writer.write_record(row).map_err(failure)?;
    }
    let bytes = writer.into_inner().map_err(|e| Failure::usage(e.to_string()))?;
    out.push_str(&String::from_utf8(bytes).expect("csv output is utf-8"));
    Ok(out)
}

/// Write to the configured path, or standard output.
pub fn emit(config: &RunConfig, text: &str) -> Result<(), Failure> {
    match &config.output.path {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::usage(format!("{}: {e}", path.display()))),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(text.as_bytes()).and_then(|_| lock.flush()).map_err(|e| Failure::usage(e.to_string()))
        }
    }
}

pub fn parse_json<T: DeserializeOwned>(text: &str) -> Result<Document<T>, Failure> {
    serde_json::from_str(text).map_err(|e| Failure::usage(format!("invalid output document: {e}")))
}

#[derive(Clone, Debug, PartialEq)]
pub struct CsvDocument {
    pub schema: String,
    pub timestamp: Option<u64>,
    pub config: Option<RunConfig>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvDocument {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// First of `names` present in the header.
    pub fn any_column(&self, names: &[&str]) -> Option<usize> {
        names.iter().find_map(|n| self.column(n))
    }

    pub fn get<T: std::str::FromStr>(&self, row: usize, name: &str) -> Result<T, Failure> {
        let col = self.column(name).ok_or_else(|| Failure::usage(format!("missing column {name}")))?;
        let cell = &self.rows[row][col];
        cell.parse().map_err(|_| Failure::usage(format!("row {}: cannot parse {name} = {cell:?}", row + 1)))
    }
}

/// Parse a CSV file; the comment preamble is optional so that hand-written
/// tables can be read too.
pub fn parse_csv(text: &str) -> Result<CsvDocument, Failure> {
    let mut doc = CsvDocument { schema: String::new(), timestamp: None, config: None, header: Vec::new(), rows: Vec::new() };
    for line in text.lines().take_while(|l| l.starts_with('#')) {
        let body = line.trim_start_matches('#').trim_start();
        if let Some(s) = body.strip_prefix("schema=") {
            doc.schema = s.to_string();
        } else if let Some(t) = body.strip_prefix("timestamp=") {
            doc.timestamp = t.parse().ok();
        } else if let Some(c) = body.strip_prefix("config=") {
            doc.config = Some(serde_json::from_str(c).map_err(|e| Failure::usage(format!("invalid config line: {e}")))?);
        }
    }
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes());
    doc.header = reader.headers().map_err(|e| Failure::usage(e.to_string()))?.iter().map(str::to_string).collect();
    for record in reader.records() {
        let record = record.map_err(|e| Failure::usage(e.to_string()))?;
        doc.rows.push(record.iter().map(str::to_string).collect());
    }
    Ok(doc)
}

pub fn read_to_string(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

/// The document without its timestamp, for comparing runs.
pub fn strip_timestamp(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with("# timestamp=") && !l.starts_with("  \"timestamp\":"))
        .map(|l| format!("{l}\n"))
        .collect()
}
