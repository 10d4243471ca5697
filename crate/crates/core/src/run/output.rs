use std::io::Write;

use serde::Serialize;
use serde_json::{json, Map, Value};

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Float(f64),
    Int(u64),
    Text(String),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Float(v) => format!("{v:e}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Float(v) if v.is_finite() => json!(v),
            Cell::Float(v) => json!(v.to_string()),
            Cell::Int(v) => json!(v),
            Cell::Text(s) => json!(s),
            Cell::Empty => Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Float)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    /// Physically impossible grid point, such as more Bell pairs than atoms.
    Omitted,
    Error,
}

impl Status {
    fn as_str(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::Omitted => "omitted",
            Status::Error => "error",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub status: Status,
    pub message: String,
    pub cells: Vec<Cell>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Row>,
}

/// A result table and the metadata needed to reproduce it.
#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub metadata: Vec<(String, String)>,
    pub table: Table,
}

impl Report {
    pub fn has_errors(&self) -> bool {
        self.table.rows.iter().any(|r| r.status == Status::Error)
    }

    /// CSV with `# key: value` metadata lines ahead of the header.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (k, v) in &self.metadata {
            writeln!(out, "# {k}: {v}")?;
        }
        self.write_csv_body(out)
    }

    /// The header and rows only.
    pub fn write_csv_body<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<&str> = self.table.columns.clone();
        header.extend(["status", "message"]);
        w.write_record(&header)?;
        for row in &self.table.rows {
            let mut rec: Vec<String> = row.cells.iter().map(Cell::csv).collect();
            rec.resize(self.table.columns.len(), String::new());
            rec.push(row.status.as_str().to_string());
            rec.push(row.message.clone());
            w.write_record(&rec)?;
        }
        w.flush()
    }

    pub fn to_json(&self) -> Value {
        let metadata: Map<String, Value> = self.metadata.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
        json!({ "metadata": metadata, "rows": self.rows_json() })
    }

    pub fn rows_json(&self) -> Value {
        let rows: Vec<Value> = self
            .table
            .rows
            .iter()
            .map(|row| {
                let mut m = Map::new();
                for (i, col) in self.table.columns.iter().enumerate() {
                    m.insert(col.to_string(), row.cells.get(i).map_or(Value::Null, Cell::json));
                }
                m.insert("status".into(), json!(row.status.as_str()));
                m.insert("message".into(), json!(row.message));
                Value::Object(m)
            })
            .collect();
        Value::Array(rows)
    }

    pub fn write_json<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        serde_json::to_writer_pretty(&mut out, &self.to_json())?;
        writeln!(out)
    }
}
