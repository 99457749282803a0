use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

use serde_json::Value;

use luroth_core::dimension::DimensionError;

pub const SCHEMA: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Plain,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad input: exit 2.
    #[error("{0}")]
    Usage(String),
    /// A computation could not finish (indecision, I/O): exit 1.
    #[error("{0}")]
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) => ExitCode::from(2),
            CliError::Failure(_) => ExitCode::from(1),
        }
    }
}

impl From<luroth_core::Error> for CliError {
    fn from(e: luroth_core::Error) -> Self {
        match e {
            luroth_core::Error::Indecision(_) => CliError::Failure(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<DimensionError> for CliError {
    fn from(e: DimensionError) -> Self {
        match e {
            DimensionError::Indecision(_) => CliError::Failure(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Failure(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Usage(format!("malformed JSON: {e}"))
    }
}

/// Rows for CSV output.
#[derive(Debug, Default)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(headers: &[&str]) -> Self {
        Table { headers: headers.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push<I: IntoIterator<Item = S>, S: ToString>(&mut self, row: I) {
        self.rows.push(row.into_iter().map(|c| c.to_string()).collect());
    }

    /// Two-column `field,value` table from a flat JSON object.
    pub fn from_fields(json: &Value) -> Self {
        let mut t = Table::new(&["field", "value"]);
        if let Value::Object(map) = json {
            for (k, v) in map {
                let cell = match v {
                    Value::String(s) => s.clone(),
                    other => other.to_string(),
                };
                t.push([k.clone(), cell]);
            }
        }
        t
    }
}

/// One command's result in all output formats.
#[derive(Debug)]
pub struct Report {
    pub json: Value,
    pub table: Table,
    pub plain: String,
    /// A certificate failed or a replay did not match: exit 3.
    pub violation: bool,
}

impl Report {
    pub fn new(json: Value, table: Table, plain: String) -> Self {
        Report { json, table, plain, violation: false }
    }

    pub fn violation(mut self) -> Self {
        self.violation = true;
        self
    }

    pub fn exit_code(&self) -> ExitCode {
        if self.violation {
            ExitCode::from(3)
        } else {
            ExitCode::SUCCESS
        }
    }

    fn render(&self, format: Format) -> Result<Vec<u8>, CliError> {
        Ok(match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.json)?;
                s.push('\n');
                s.into_bytes()
            }
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(&self.table.headers).map_err(|e| CliError::Failure(e.to_string()))?;
                for row in &self.table.rows {
                    w.write_record(row).map_err(|e| CliError::Failure(e.to_string()))?;
                }
                w.into_inner().map_err(|e| CliError::Failure(e.to_string()))?
            }
            Format::Plain => {
                let mut s = self.plain.clone();
                if !s.ends_with('\n') {
                    s.push('\n');
                }
                s.into_bytes()
            }
        })
    }

    pub fn emit(&self, format: Format, path: Option<&Path>) -> Result<(), CliError> {
        let bytes = self.render(format)?;
        match path {
            Some(p) => std::fs::write(p, bytes)?,
            None => std::io::stdout().lock().write_all(&bytes)?,
        }
        Ok(())
    }
}

/// Reads a file, or stdin for `-`.
pub fn read_input(path: &str) -> Result<String, CliError> {
    if path == "-" {
        let mut s = String::new();
        std::io::Read::read_to_string(&mut std::io::stdin(), &mut s)?;
        Ok(s)
    } else {
        std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {path}: {e}")))
    }
}

pub fn digits(ds: &[u64]) -> String {
    ds.iter().map(u64::to_string).collect::<Vec<_>>().join(" ")
}
