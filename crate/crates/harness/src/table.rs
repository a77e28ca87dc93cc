//! Result tables and their CSV form.
//!
//! Floats are written in the shortest form that parses back to the same
//! bits, so `from_csv(to_csv(t)) == t` for every table whose text cells do
//! not themselves read as numbers or booleans.

use std::fmt;
use std::path::Path;

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone)]
pub enum Value {
    Int(i64),
    Float(f64),
    Bool(bool),
    Text(String),
    Empty,
}

impl Value {
    /// Reads a cell: integer, then float, then boolean, else text.
    pub fn parse(s: &str) -> Self {
        if s.is_empty() {
            return Self::Empty;
        }
        if let Ok(i) = s.parse::<i64>() {
            return Self::Int(i);
        }
        if let Ok(x) = s.parse::<f64>() {
            return Self::Float(x);
        }
        match s {
            "true" => Self::Bool(true),
            "false" => Self::Bool(false),
            _ => Self::Text(s.to_string()),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Self::Int(i) => Some(i as f64),
            Self::Float(x) => Some(x),
            _ => None,
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        match *self {
            Self::Int(i) => Some(i),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match *self {
            Self::Bool(b) => Some(b),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Self::Text(s) => Some(s),
            _ => None,
        }
    }
}

impl PartialEq for Value {
    /// Floats compare by bit pattern, so `NaN == NaN` and `0.0 != -0.0`.
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Self::Int(a), Self::Int(b)) => a == b,
            (Self::Float(a), Self::Float(b)) => a.to_bits() == b.to_bits(),
            (Self::Bool(a), Self::Bool(b)) => a == b,
            (Self::Text(a), Self::Text(b)) => a == b,
            (Self::Empty, Self::Empty) => true,
            _ => false,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Int(i) => write!(f, "{i}"),
            // `Debug` is the shortest round-trip form and always keeps a
            // decimal point or exponent, so floats never read back as ints.
            Self::Float(x) => write!(f, "{x:?}"),
            Self::Bool(b) => write!(f, "{b}"),
            Self::Text(s) => f.write_str(s),
            Self::Empty => Ok(()),
        }
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Self::Float(x)
    }
}

impl From<usize> for Value {
    fn from(n: usize) -> Self {
        Self::Int(n as i64)
    }
}

impl From<i64> for Value {
    fn from(n: i64) -> Self {
        Self::Int(n)
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Self::Bool(b)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Self::Text(s.to_string())
    }
}

impl From<String> for Value {
    fn from(s: String) -> Self {
        Self::Text(s)
    }
}

impl<T: Into<Value>> From<Option<T>> for Value {
    fn from(v: Option<T>) -> Self {
        v.map_or(Self::Empty, Into::into)
    }
}

/// Named columns over row-major records.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultTable {
    columns: Vec<String>,
    rows: Vec<Vec<Value>>,
}

impl ResultTable {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self { columns: columns.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<Value>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn push(&mut self, row: Vec<Value>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(HarnessError::Table(format!(
                "row has {} cells but the table has {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Value>> {
        let j = self.column_index(name)?;
        Some(self.rows.iter().map(|r| &r[j]).collect())
    }

    /// Numeric cells of a column; `None` entries for non-numeric cells.
    pub fn floats(&self, name: &str) -> Option<Vec<Option<f64>>> {
        Some(self.column(name)?.into_iter().map(Value::as_f64).collect())
    }

    /// Rows whose cell in `name` equals `value`.
    pub fn filter(&self, name: &str, value: &Value) -> Option<Self> {
        let j = self.column_index(name)?;
        Some(Self {
            columns: self.columns.clone(),
            rows: self.rows.iter().filter(|r| &r[j] == value).cloned().collect(),
        })
    }

    /// Appends `order = log₂(e_prev / e)` computed from consecutive rows of
    /// `error_column`, restarting wherever a `group` column changes value.
    /// Rows should run from coarse to fine.
    pub fn add_order_column(&mut self, error_column: &str, group: Option<&str>, name: &str) -> Result<()> {
        let e = self
            .column_index(error_column)
            .ok_or_else(|| HarnessError::Table(format!("no column '{error_column}'")))?;
        let g = match group {
            Some(gname) => {
                Some(self.column_index(gname).ok_or_else(|| HarnessError::Table(format!("no column '{gname}'")))?)
            }
            None => None,
        };
        let mut prev: Option<(Value, f64)> = None;
        for row in &mut self.rows {
            let key = g.map_or(Value::Empty, |g| row[g].clone());
            let err = row[e].as_f64();
            let order = match (&prev, err) {
                (Some((k, p)), Some(x)) if *k == key && *p > 0.0 && x > 0.0 => Value::Float((p / x).log2()),
                _ => Value::Empty,
            };
            prev = err.map(|x| (key, x));
            row.push(order);
        }
        self.columns.push(name.to_string());
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        if self.columns.is_empty() {
            return String::new();
        }
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let mut write = |record: Vec<String>| w.write_record(record).expect("writing to memory cannot fail");
        write(self.columns.clone());
        for row in &self.rows {
            write(row.iter().map(Value::to_string).collect());
        }
        let bytes = w.into_inner().expect("flushing to memory cannot fail");
        String::from_utf8(bytes).expect("records are built from UTF-8 strings")
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        if text.is_empty() {
            return Ok(Self::default());
        }
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
        let columns: Vec<String> = r
            .headers()
            .map_err(|e| HarnessError::Table(e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        let mut table = Self::new(columns);
        for record in r.records() {
            let record = record.map_err(|e| HarnessError::Table(e.to_string()))?;
            table.push(record.iter().map(Value::parse).collect())?;
        }
        Ok(table)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        Self::from_csv(&std::fs::read_to_string(path)?)
    }
}
