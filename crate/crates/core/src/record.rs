//! Column-oriented experiment records with deterministic CSV and JSON output.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::error::{Error, Result};

/// Accepted column-name unit suffixes.
pub const UNIT_SUFFIXES: &[&str] = &["_us", "_mhz", "_rad", "_quanta", "_photons", "_per_us", "_ratio", "_index"];

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub name: String,
    pub metadata: BTreeMap<String, Value>,
    columns: Vec<Column>,
}

impl ExperimentRecord {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), metadata: BTreeMap::new(), columns: Vec::new() }
    }

    /// Record with empty columns, filled by [`ExperimentRecord::push_row`].
    pub fn with_columns(name: impl Into<String>, columns: &[&str]) -> Result<Self> {
        let mut r = Self::new(name);
        for c in columns {
            r.push_column(*c, Vec::new())?;
        }
        Ok(r)
    }

    pub fn set_meta(&mut self, key: impl Into<String>, value: impl Into<Value>) {
        self.metadata.insert(key.into(), value.into());
    }

    pub fn push_column(&mut self, name: impl Into<String>, values: Vec<f64>) -> Result<()> {
        let name = name.into();
        if !UNIT_SUFFIXES.iter().any(|s| name.ends_with(s)) {
            return Err(Error::config(format!("column `{name}` lacks a units suffix")));
        }
        if self.columns.iter().any(|c| c.name == name) {
            return Err(Error::config(format!("duplicate column `{name}`")));
        }
        if let Some(first) = self.columns.first() {
            if first.values.len() != values.len() {
                return Err(Error::config(format!(
                    "column `{name}` has {} rows, record has {}",
                    values.len(),
                    first.values.len()
                )));
            }
        }
        self.columns.push(Column { name, values });
        Ok(())
    }

    pub fn push_row(&mut self, row: &[f64]) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::config(format!("row has {} values, record has {} columns", row.len(), self.columns.len())));
        }
        for (c, v) in self.columns.iter_mut().zip(row) {
            c.values.push(*v);
        }
        Ok(())
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns.iter().find(|c| c.name == name).map(|c| c.values.as_slice())
    }

    pub fn num_rows(&self) -> usize {
        self.columns.first().map_or(0, |c| c.values.len())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::config(format!("csv: {e}"));
        w.write_record(self.columns.iter().map(|c| c.name.as_str())).map_err(csv_err)?;
        for i in 0..self.num_rows() {
            w.write_record(self.columns.iter().map(|c| format_g12(c.values[i]))).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::config(format!("csv: {e}")))?;
        String::from_utf8(bytes).map_err(|e| Error::config(format!("csv: {e}")))
    }

    pub fn metadata_json(&self) -> String {
        let mut root = serde_json::Map::new();
        root.insert("name".into(), Value::String(self.name.clone()));
        root.insert("columns".into(), self.columns.iter().map(|c| Value::String(c.name.clone())).collect());
        root.insert("rows".into(), Value::from(self.num_rows()));
        root.insert("metadata".into(), Value::Object(self.metadata.clone().into_iter().collect()));
        let mut s = serde_json::to_string_pretty(&Value::Object(root)).expect("json values serialize");
        s.push('\n');
        s
    }

    /// Writes `<name>.csv` and `<name>.meta.json` into `dir`; returns both paths.
    pub fn write(&self, dir: &Path) -> std::io::Result<(PathBuf, PathBuf)> {
        fs::create_dir_all(dir)?;
        let csv_path = dir.join(format!("{}.csv", self.name));
        let meta_path = dir.join(format!("{}.meta.json", self.name));
        let csv = self.to_csv_string().map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
        fs::write(&csv_path, csv)?;
        fs::write(&meta_path, self.metadata_json())?;
        Ok((csv_path, meta_path))
    }
}

/// C `printf("%.12g")` formatting.
pub fn format_g12(x: f64) -> String {
    const P: i32 = 12;
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.*e}", (P - 1) as usize, x);
    let (mant, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= P {
        let mant = trim_fraction(mant);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mant}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (P - 1 - exp).max(0) as usize;
        trim_fraction(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g12_matches_printf() {
        let cases = [
            (1.0, "1"),
            (0.1, "0.1"),
            (-2.5, "-2.5"),
            (1.0 / 3.0, "0.333333333333"),
            (123456789012.0, "123456789012"),
            (1234567890123.0, "1.23456789012e+12"),
            (1e-5, "1e-05"),
            (0.0001, "0.0001"),
            (6.02214076e23, "6.02214076e+23"),
            (2.0f64.sqrt(), "1.41421356237"),
            (999999999999.5, "1e+12"),
            (0.0, "0"),
        ];
        for (x, want) in cases {
            assert_eq!(format_g12(x), want, "{x}");
        }
    }

    #[test]
    fn csv_layout() {
        let mut r = ExperimentRecord::with_columns("demo", &["t_us", "n_photons"]).unwrap();
        r.push_row(&[0.0, 1.0]).unwrap();
        r.push_row(&[0.5, 0.25]).unwrap();
        assert_eq!(r.to_csv_string().unwrap(), "t_us,n_photons\n0,1\n0.5,0.25\n");
        assert!(r.push_row(&[1.0]).is_err());
        assert!(r.push_column("bad", vec![0.0, 0.0]).is_err());
        assert!(r.push_column("x_ratio", vec![0.0]).is_err());
    }

    #[test]
    fn metadata_is_sorted_json() {
        let mut r = ExperimentRecord::new("m");
        r.set_meta("zeta", 1.5);
        r.set_meta("alpha", "x");
        let j = r.metadata_json();
        assert!(j.find("alpha").unwrap() < j.find("zeta").unwrap());
        let v: Value = serde_json::from_str(&j).unwrap();
        assert_eq!(v["metadata"]["zeta"], 1.5);
    }
}
