//! CSV tables with a header row.
//!
//! Floats are written in Rust's shortest round-trip form, so equal values
//! always produce equal bytes.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) -> Result<()> {
        if row.len() != self.header.len() {
            return Err(Error::Dimension(format!("row has {} cells, header has {}", row.len(), self.header.len())));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Format(e.to_string());
        w.write_record(&self.header).map_err(io)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_header_and_rows() {
        let mut t = Table::new(&["n", "value", "note"]);
        t.push(vec![1usize.into(), 0.1.into(), "a, b".into()]).unwrap();
        t.push(vec![(-2i64).into(), f64::INFINITY.into(), "".into()]).unwrap();
        assert_eq!(t.to_csv().unwrap(), "n,value,note\n1,0.1,\"a, b\"\n-2,inf,\n");
        assert!(t.push(vec![1usize.into()]).is_err());
    }

    #[test]
    fn floats_round_trip() {
        let mut t = Table::new(&["x"]);
        let x = 0.1 + 0.2;
        t.push(vec![x.into()]).unwrap();
        let text = t.to_csv().unwrap();
        let parsed: f64 = text.lines().nth(1).unwrap().parse().unwrap();
        assert_eq!(parsed.to_bits(), x.to_bits());
    }
}
