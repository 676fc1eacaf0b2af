//! Column-oriented results and their CSV form.

use std::io::Write;

use anyhow::{bail, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(header: Vec<String>) -> Self {
        Self { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.header.len() {
            bail!("row has {} values for {} columns", row.len(), self.header.len());
        }
        self.rows.push(row);
        Ok(())
    }

    /// Orders rows by the first (axis) column.
    pub fn sort_by_axis(&mut self) {
        self.rows.sort_by(|a, b| a[0].total_cmp(&b[0]));
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|&v| format_value(v)))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf)?)
    }
}

/// Shortest round-trip form, switching to exponent notation for very small
/// or very large magnitudes.
pub fn format_value(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_header_and_sorted_rows() {
        let mut t = Table::new(vec!["x".into(), "y".into()]);
        t.push(vec![2.0, 0.5]).unwrap();
        t.push(vec![1.0, 1e-20]).unwrap();
        assert!(t.push(vec![1.0]).is_err());
        t.sort_by_axis();
        assert_eq!(t.to_csv_string().unwrap(), "x,y\n1,1e-20\n2,0.5\n");
        assert_eq!(t.column("y"), Some(vec![1e-20, 0.5]));
        assert_eq!(t.column("z"), None);
    }
}
