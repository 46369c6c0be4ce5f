//! CSV and JSON serialization with the resolved configuration embedded.

use std::io::{self, Write};

use serde_json::{Map, Number, Value};

use crate::config::{format_real, RunConfig};

/// Result of a subcommand, ready to be written.
#[derive(Debug, Clone, PartialEq)]
pub enum Report {
    Table(Table),
    Json(Map<String, Value>),
}

/// A CSV body plus summary values emitted as comments.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    pub notes: Vec<(&'static str, String)>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn note(&mut self, key: &'static str, value: impl Into<String>) {
        self.notes.push((key, value.into()));
    }
}

/// JSON number carrying seventeen significant digits; `null` when not finite.
pub fn number(x: f64) -> Value {
    if x.is_finite() {
        Value::Number(format_real(x).parse::<Number>().expect("formatted float is valid JSON"))
    } else {
        Value::Null
    }
}

pub fn count(n: usize) -> Value {
    Value::Number(Number::from(n))
}

fn config_object(cfg: &RunConfig) -> Value {
    let mut obj = Map::new();
    for (key, raw) in cfg.entries() {
        let value = match raw.parse::<Number>() {
            Ok(n) => Value::Number(n),
            Err(_) => Value::String(raw),
        };
        obj.insert(key.to_string(), value);
    }
    Value::Object(obj)
}

pub fn write_report(out: &mut dyn Write, command: &str, cfg: &RunConfig, report: &Report) -> io::Result<()> {
    match report {
        Report::Table(table) => write_table(out, command, cfg, table),
        Report::Json(result) => {
            let mut doc = Map::new();
            doc.insert("command".into(), Value::String(command.to_string()));
            doc.insert("config".into(), config_object(cfg));
            doc.insert("result".into(), Value::Object(result.clone()));
            let text = serde_json::to_string_pretty(&Value::Object(doc)).map_err(io::Error::other)?;
            writeln!(out, "{text}")
        }
    }
}

fn write_table(out: &mut dyn Write, command: &str, cfg: &RunConfig, table: &Table) -> io::Result<()> {
    writeln!(out, "# bjj {command}")?;
    for (key, value) in cfg.entries() {
        writeln!(out, "#: {key}={value}")?;
    }
    for (key, value) in &table.notes {
        writeln!(out, "# {key}={value}")?;
    }
    writeln!(out, "{}", table.columns.join(","))?;
    for row in &table.rows {
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}
