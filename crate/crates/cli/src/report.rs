use std::io::Write;
use std::path::Path;

use clap::ValueEnum;
use serde_json::Value;

use crate::error::CliResult;

pub const CSV_HEADER: &str = "family,n,d,epsilon,samples_used,estimate,oracle_value,abs_error,wall_time_ms,seed";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Csv,
    Json,
}

/// One benchmark or estimate row. `wall_time_ms` stays empty unless timing
/// was requested, so default output is reproducible byte for byte.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Record {
    pub family: String,
    pub n: usize,
    pub d: Option<f64>,
    pub epsilon: f64,
    pub samples_used: Option<usize>,
    pub estimate: Option<f64>,
    pub oracle_value: Option<f64>,
    pub wall_time_ms: Option<f64>,
    pub seed: u64,
}

fn cell<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

impl Record {
    pub fn abs_error(&self) -> Option<f64> {
        Some((self.estimate? - self.oracle_value?).abs())
    }

    pub fn csv_row(&self) -> String {
        [
            self.family.clone(),
            self.n.to_string(),
            cell(self.d),
            self.epsilon.to_string(),
            cell(self.samples_used),
            cell(self.estimate),
            cell(self.oracle_value),
            cell(self.abs_error()),
            self.wall_time_ms.map(|t| format!("{t:.3}")).unwrap_or_default(),
            self.seed.to_string(),
        ]
        .join(",")
    }
}

/// Ordered key/value output of a single command.
#[derive(Debug, Clone, Default)]
pub struct Report {
    fields: Vec<(String, Value)>,
    record: Option<Record>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn field(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.fields.push((key.to_string(), value.into()));
        self
    }

    pub fn opt(self, key: &str, value: Option<impl Into<Value>>) -> Self {
        match value {
            Some(v) => self.field(key, v),
            None => self,
        }
    }

    pub fn with_record(mut self, record: Record) -> Self {
        self.record = Some(record);
        self
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Text => self
                .fields
                .iter()
                .map(|(k, v)| match v {
                    Value::String(s) => format!("{k}: {s}\n"),
                    other => format!("{k}: {other}\n"),
                })
                .collect(),
            Format::Json => {
                let map: serde_json::Map<String, Value> = self.fields.iter().cloned().collect();
                let mut text = serde_json::to_string_pretty(&Value::Object(map)).expect("json values serialize");
                text.push('\n');
                text
            }
            Format::Csv => match &self.record {
                Some(r) => format!("{CSV_HEADER}\n{}\n", r.csv_row()),
                None => {
                    let keys: Vec<&str> = self.fields.iter().map(|(k, _)| k.as_str()).collect();
                    let vals: Vec<String> = self
                        .fields
                        .iter()
                        .map(|(_, v)| match v {
                            Value::String(s) => s.clone(),
                            other => other.to_string(),
                        })
                        .collect();
                    format!("{}\n{}\n", keys.join(","), vals.join(","))
                }
            },
        }
    }
}

/// Writes to `out`, or stdout when absent.
pub fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}
