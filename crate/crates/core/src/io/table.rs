//! Plot-ready comma-separated tables.
//!
//! Column names carry units with κ = 1 (`eta_per_inv_kappa`,
//! `g_per_kappa`); dimensionless columns are bare. Floats are written in
//! shortest round-trip form, so reading a table back gives identical bits.

use std::path::Path;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => format!("{x:?}"),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Cell::Num(x) if x.is_finite() => serde_json::json!(x),
            Cell::Num(x) => serde_json::Value::String(format!("{x}")),
            Cell::Int(i) => serde_json::json!(i),
            Cell::Text(s) => serde_json::Value::String(s.clone()),
            Cell::Empty => serde_json::Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i as i64)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Num)
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    /// Appends a row. Panics if its width differs from the header.
    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(
            row.len(),
            self.columns.len(),
            "row width does not match the header"
        );
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let ser = |e: csv::Error| Error::Serialize(e.to_string());
        w.write_record(&self.columns).map_err(ser)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).map_err(ser)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::Serialize(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Serialize(e.to_string()))
    }

    /// Rows as an array of objects keyed by column name.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    serde_json::Value::Object(
                        self.columns
                            .iter()
                            .zip(row)
                            .map(|(c, v)| (c.clone(), v.json()))
                            .collect(),
                    )
                })
                .collect(),
        )
    }
}

pub fn write_table(table: &Table, path: &Path) -> Result<()> {
    std::fs::write(path, table.to_csv()?)?;
    Ok(())
}

pub fn write_table_json(table: &Table, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(&table.to_json())
        .map_err(|e| Error::Serialize(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_table_is_header_only() {
        let t = Table::new(["g_per_kappa", "eta_per_inv_kappa"]);
        assert_eq!(t.to_csv().unwrap(), "g_per_kappa,eta_per_inv_kappa\n");
    }

    #[test]
    fn floats_round_trip_and_text_is_quoted() {
        let mut t = Table::new(["x", "state", "n"]);
        let x = 0.1 + 0.2;
        t.push(vec![x.into(), "g,0".into(), 7usize.into()]);
        t.push(vec![f64::NAN.into(), Cell::Empty, 0usize.into()]);
        let text = t.to_csv().unwrap();
        assert_eq!(text, "x,state,n\n0.30000000000000004,\"g,0\",7\nNaN,,0\n");
        let mut rd = csv::Reader::from_reader(text.as_bytes());
        let first = rd.records().next().unwrap().unwrap();
        assert_eq!(first[0].parse::<f64>().unwrap().to_bits(), x.to_bits());
        assert_eq!(&first[1], "g,0");
    }
}
