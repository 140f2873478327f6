//! Report assembly and serialization. Floats are written with 17
//! significant digits in both JSON and CSV so that identical configs give
//! byte-identical files.

use std::io;
use std::path::Path;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::{Map, Value};

use crate::config::Format;
use crate::error::CliError;

pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Pretty JSON with fixed-precision floats.
struct FixedFloats(PrettyFormatter<'static>);

impl Formatter for FixedFloats {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(format_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedFloats(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("in-memory serialization");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json writes UTF-8")
}

#[derive(Clone, Debug, Serialize)]
pub struct Table {
    pub name: String,
    pub rows: Vec<Map<String, Value>>,
}

/// Output of one command: tables of rows, a summary, printable lines and
/// any invariant violations found.
#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub summary: Vec<Map<String, Value>>,
    pub tables: Vec<Table>,
    pub violations: Vec<String>,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub lines: Vec<String>,
}

fn row_object<T: Serialize>(row: &T, hash: &str) -> Map<String, Value> {
    let Value::Object(fields) = serde_json::to_value(row).expect("rows serialize to JSON") else {
        panic!("report rows must be structs");
    };
    let mut out = Map::new();
    out.insert("config_hash".into(), Value::String(hash.into()));
    out.extend(fields);
    out
}

impl Report {
    pub fn new(command: &str, config_hash: &str, seed: u64) -> Self {
        Self {
            command: command.into(),
            config_hash: config_hash.into(),
            seed,
            summary: Vec::new(),
            tables: Vec::new(),
            violations: Vec::new(),
            warnings: Vec::new(),
            lines: Vec::new(),
        }
    }

    pub fn push_table<T: Serialize>(&mut self, name: &str, rows: &[T]) {
        let rows = rows.iter().map(|r| row_object(r, &self.config_hash)).collect();
        self.tables.push(Table { name: name.into(), rows });
    }

    pub fn push_summary<T: Serialize>(&mut self, row: &T) {
        let obj = row_object(row, &self.config_hash);
        self.summary.push(obj);
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn to_json(&self) -> String {
        to_json_string(self)
    }

    /// Writes `<command>.json` and one `<command>_<table>.csv` per table.
    pub fn write(&self, dir: &Path, format: Format) -> Result<(), CliError> {
        std::fs::create_dir_all(dir)?;
        if matches!(format, Format::Json | Format::Both) {
            std::fs::write(dir.join(format!("{}.json", self.command)), self.to_json())?;
        }
        if matches!(format, Format::Csv | Format::Both) {
            let mut tables: Vec<(&str, &[Map<String, Value>])> =
                self.tables.iter().map(|t| (t.name.as_str(), t.rows.as_slice())).collect();
            tables.push(("summary", &self.summary));
            for (name, rows) in tables {
                write_csv(&dir.join(format!("{}_{name}.csv", self.command)), rows)?;
            }
        }
        Ok(())
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::Number(n) => match (n.as_i64(), n.as_u64()) {
            (Some(i), _) => i.to_string(),
            (_, Some(u)) => u.to_string(),
            _ => format_f64(n.as_f64().unwrap_or(f64::NAN)),
        },
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn write_csv(path: &Path, rows: &[Map<String, Value>]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Io(e.to_string()))?;
    if let Some(first) = rows.first() {
        w.write_record(first.keys()).map_err(|e| CliError::Io(e.to_string()))?;
        for row in rows {
            w.write_record(first.keys().map(|k| row.get(k).map(cell).unwrap_or_default()))
                .map_err(|e| CliError::Io(e.to_string()))?;
        }
    }
    w.flush()?;
    Ok(())
}
