//! Long-format result tables: identifier columns, then `metric,value`.

use std::io::Write;
use std::path::Path;

use crate::error::CliResult;

#[derive(Debug, Clone, PartialEq)]
pub struct TidyTable {
    id_columns: Vec<String>,
    rows: Vec<(Vec<String>, String, f64)>,
}

impl TidyTable {
    pub fn new(id_columns: &[&str]) -> Self {
        Self {
            id_columns: id_columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, ids: Vec<String>, metric: &str, value: f64) {
        assert_eq!(ids.len(), self.id_columns.len(), "identifier count must match the header");
        self.rows.push((ids, metric.to_string(), value));
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Values of `metric` among rows whose identifiers start with `prefix`.
    pub fn values(&self, prefix: &[&str], metric: &str) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|(ids, m, _)| m == metric && ids.iter().zip(prefix).all(|(a, b)| a == b))
            .map(|&(_, _, v)| v)
            .collect()
    }

    pub fn write<W: Write>(&self, out: W) -> CliResult<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = self.id_columns.clone();
        header.extend(["metric".to_string(), "value".to_string()]);
        w.write_record(&header)?;
        for (ids, metric, value) in &self.rows {
            let mut record = ids.clone();
            record.push(metric.clone());
            record.push(value.to_string());
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_path(&self, path: &Path) -> CliResult<()> {
        self.write(std::fs::File::create(path)?)
    }
}
