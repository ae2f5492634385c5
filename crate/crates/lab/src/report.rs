//! Report envelopes and writers. Every float is printed with 17
//! significant digits so that reports round-trip and compare byte for byte.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{LabError, Status};

pub const TOOL: &str = "groupoid-lab";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// `v` in scientific notation with 17 significant digits.
pub fn format_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:.16e}")
    }
}

struct Digits17(PrettyFormatter<'static>);

impl Formatter for Digits17 {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        w.write_all(format_f64(v).as_bytes())
    }
    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        self.write_f64(w, f64::from(v))
    }
    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
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
    fn begin_object_key<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Pretty JSON with 17-digit floats and a trailing newline.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser =
        serde_json::Serializer::with_formatter(&mut buf, Digits17(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("report values serialize");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json writes UTF-8")
}

pub fn to_value<T: Serialize + ?Sized>(value: &T) -> Value {
    serde_json::to_value(value).expect("report values serialize")
}

/// SHA-256 of the compact, key-sorted form of `config`.
pub fn config_hash(config: &Value) -> String {
    let bytes = serde_json::to_vec(config).expect("values serialize");
    let digest = Sha256::digest(&bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        write!(out, "{b:02x}").expect("writing to a String");
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.into())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Int(i64::from(v))
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Float(v) => format_f64(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Float(v) => to_value(v),
            Cell::Int(v) => Value::from(*v),
            Cell::Text(s) => Value::from(s.as_str()),
        }
    }
}

/// A plot-ready table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::render))
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv writes UTF-8")
    }

    pub fn to_json_value(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| Value::Array(r.iter().map(Cell::json).collect()))
            .collect();
        serde_json::json!({ "name": self.name, "columns": self.columns, "rows": rows })
    }
}

#[derive(
    Debug,
    Clone,
    Copy,
    PartialEq,
    Eq,
    Default,
    serde::Serialize,
    serde::Deserialize,
    clap::ValueEnum,
)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    #[default]
    Csv,
}

/// The result of one subcommand before it is written out.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub command: String,
    pub config: Value,
    pub seeds: BTreeMap<String, u64>,
    pub result: Value,
    pub tables: Vec<Table>,
    pub status: Status,
}

#[derive(Serialize)]
struct Envelope<'a> {
    tool: &'a str,
    version: &'a str,
    command: &'a str,
    config_hash: String,
    seeds: &'a BTreeMap<String, u64>,
    threads: usize,
    config: &'a Value,
    status: Status,
    exit_code: u8,
    tables: Vec<&'a str>,
    result: &'a Value,
}

impl Outcome {
    /// The full report: provenance, config, status and result.
    pub fn report_json(&self, threads: usize) -> String {
        let env = Envelope {
            tool: TOOL,
            version: VERSION,
            command: &self.command,
            config_hash: config_hash(&self.config),
            seeds: &self.seeds,
            threads,
            config: &self.config,
            status: self.status,
            exit_code: self.status.exit_code(),
            tables: self.tables.iter().map(|t| t.name.as_str()).collect(),
            result: &self.result,
        };
        to_json(&env)
    }

    /// Writes `<command>.json` and one file per table into `dir`; returns the paths.
    pub fn write(
        &self,
        dir: &Path,
        format: Format,
        threads: usize,
    ) -> Result<Vec<PathBuf>, LabError> {
        let write = |path: PathBuf, text: String| -> Result<PathBuf, LabError> {
            std::fs::write(&path, text).map_err(|source| LabError::Write {
                path: path.clone(),
                source,
            })?;
            Ok(path)
        };
        std::fs::create_dir_all(dir).map_err(|source| LabError::Write {
            path: dir.into(),
            source,
        })?;
        let mut paths = vec![write(
            dir.join(format!("{}.json", self.command)),
            self.report_json(threads),
        )?];
        for t in &self.tables {
            let p = match format {
                Format::Csv => write(
                    dir.join(format!("{}_{}.csv", self.command, t.name)),
                    t.to_csv(),
                )?,
                Format::Json => write(
                    dir.join(format!("{}_{}.json", self.command, t.name)),
                    to_json(&t.to_json_value()),
                )?,
            };
            paths.push(p);
        }
        Ok(paths)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_keep_seventeen_digits() {
        assert_eq!(format_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(format_f64(2.0), "2.0000000000000000e0");
        let back: f64 = format_f64(std::f64::consts::PI).parse().unwrap();
        assert_eq!(back, std::f64::consts::PI);
        let json = to_json(&serde_json::json!({"x": 1.0 / 3.0, "n": 3}));
        assert!(json.contains("3.3333333333333331e-1"), "{json}");
        assert!(json.contains("\"n\": 3"));
        let v: Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["x"].as_f64().unwrap(), 1.0 / 3.0);
    }

    #[test]
    fn hash_ignores_nothing_but_is_stable() {
        let a = serde_json::json!({"b": 1, "a": [1.5, 2]});
        let b: Value = serde_json::from_str(r#"{"a": [1.5, 2], "b": 1}"#).unwrap();
        assert_eq!(config_hash(&a), config_hash(&b));
        assert_ne!(
            config_hash(&a),
            config_hash(&serde_json::json!({"b": 2, "a": [1.5, 2]}))
        );
        assert_eq!(config_hash(&a).len(), 64);
    }

    #[test]
    fn csv_quotes_text_and_formats_floats() {
        let mut t = Table::new("t", &["x", "label"]);
        t.push(vec![0.5.into(), "a,b".into()]);
        assert_eq!(t.to_csv(), "x,label\n5.0000000000000000e-1,\"a,b\"\n");
    }
}
