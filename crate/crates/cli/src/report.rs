//! Reports are TOML documents whose first line is the unit banner. Keys keep
//! insertion order so output is byte-identical across runs.

use std::io::Write;
use std::path::Path;

use algebroid_core::UNIT_BANNER;
use nalgebra::{Matrix4, Matrix5, Vector4};
use toml::{Table, Value};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Default)]
pub struct Report {
    root: Table,
}

pub fn vector(v: &Vector4<f64>) -> Value {
    Value::Array(v.iter().map(|x| Value::Float(*x)).collect())
}

pub fn matrix4(m: &Matrix4<f64>) -> Value {
    Value::Array((0..4).map(|i| vector(&m.row(i).transpose())).collect())
}

pub fn matrix5(m: &Matrix5<f64>) -> Value {
    Value::Array(
        (0..5)
            .map(|i| Value::Array((0..5).map(|j| Value::Float(m[(i, j)])).collect()))
            .collect(),
    )
}

pub fn rows(m: &nalgebra::DMatrix<f64>) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| Value::Float(m[(i, j)])).collect()))
            .collect(),
    )
}

impl Report {
    pub fn new(command: &str) -> Self {
        let mut r = Self::default();
        r.set("units", UNIT_BANNER.trim_start_matches("units: "));
        r.set("command", command);
        r
    }

    pub fn set(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.root.insert(key.into(), value.into());
        self
    }

    /// Nested table under `key`, created on first use.
    pub fn table(&mut self, key: &str) -> &mut Table {
        let entry = self.root.entry(key.to_string()).or_insert_with(|| Value::Table(Table::new()));
        match entry {
            Value::Table(t) => t,
            _ => panic!("report key `{key}` already holds a non-table value"),
        }
    }

    /// Appends to the array of tables under `key`.
    pub fn push(&mut self, key: &str, row: Table) {
        let entry = self.root.entry(key.to_string()).or_insert_with(|| Value::Array(Vec::new()));
        match entry {
            Value::Array(a) => a.push(Value::Table(row)),
            _ => panic!("report key `{key}` already holds a non-array value"),
        }
    }

    pub fn render(&self) -> String {
        let body = toml::to_string(&self.root).expect("report values are plain TOML");
        format!("# {UNIT_BANNER}\n{body}")
    }

    /// Writes to `out` if given, otherwise to `stdout`.
    pub fn emit(&self, out: Option<&Path>, stdout: &mut dyn Write) -> CliResult<()> {
        let text = self.render();
        match out {
            Some(path) => std::fs::write(path, text).map_err(|e| CliError::io(path, e)),
            None => stdout
                .write_all(text.as_bytes())
                .map_err(|e| CliError::io("<stdout>", e)),
        }
    }
}
