//! Column-oriented sweep output with its input parameters attached.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::BTreeMap;
use std::io::Write;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveTable {
    pub schema_version: u32,
    pub meta: BTreeMap<String, Value>,
    pub columns: Vec<Column>,
}

impl Default for CurveTable {
    fn default() -> Self {
        Self::new()
    }
}

impl CurveTable {
    pub fn new() -> Self {
        let mut meta = BTreeMap::new();
        meta.insert("version".into(), Value::from(env!("CARGO_PKG_VERSION")));
        Self {
            schema_version: SCHEMA_VERSION,
            meta,
            columns: Vec::new(),
        }
    }

    pub fn with_meta(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.meta.insert(key.to_owned(), value.into());
        self
    }

    pub fn set_meta(&mut self, key: &str, value: impl Into<Value>) {
        self.meta.insert(key.to_owned(), value.into());
    }

    pub fn push_column(&mut self, name: &str, values: Vec<f64>) -> Result<()> {
        if let Some(first) = self.columns.first() {
            if first.values.len() != values.len() {
                return Err(Error::Domain(format!(
                    "column `{name}` has {} rows, expected {}",
                    values.len(),
                    first.values.len()
                )));
            }
        }
        self.columns.push(Column {
            name: name.to_owned(),
            values,
        });
        Ok(())
    }

    pub fn with_column(mut self, name: &str, values: Vec<f64>) -> Result<Self> {
        self.push_column(name, values)?;
        Ok(self)
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.values.as_slice())
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, |c| c.values.len())
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Domain(format!(
                "unsupported schema_version {}",
                self.schema_version
            )));
        }
        if !self.meta.contains_key("version") {
            return Err(Error::Domain("meta lacks `version`".into()));
        }
        let rows = self.rows();
        match self.columns.iter().find(|c| c.values.len() != rows) {
            Some(c) => Err(Error::Domain(format!("column `{}` is ragged", c.name))),
            None => Ok(()),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("curve tables serialise")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let t: Self = serde_json::from_str(s).map_err(|e| Error::Domain(e.to_string()))?;
        t.validate()?;
        Ok(t)
    }

    /// CSV with `# key=value` metadata lines, one header row, LF endings.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# schema_version={}", self.schema_version)?;
        for (k, v) in &self.meta {
            writeln!(w, "# {k}={v}")?;
        }
        let header: Vec<&str> = self.columns.iter().map(|c| c.name.as_str()).collect();
        writeln!(w, "{}", header.join(","))?;
        for i in 0..self.rows() {
            let row: Vec<String> = self.columns.iter().map(|c| c.values[i].to_string()).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv output is utf-8")
    }

    pub fn from_csv(s: &str) -> Result<Self> {
        let mut table = Self::new();
        table.meta.clear();
        let mut lines = s.lines().peekable();
        while let Some(line) = lines.peek() {
            let Some(rest) = line.strip_prefix("# ") else {
                break;
            };
            let (k, v) = rest
                .split_once('=')
                .ok_or_else(|| Error::Domain(format!("bad metadata line `{line}`")))?;
            if k == "schema_version" {
                table.schema_version = v
                    .parse()
                    .map_err(|_| Error::Domain(format!("bad schema_version `{v}`")))?;
            } else {
                let value = serde_json::from_str(v).unwrap_or_else(|_| Value::from(v));
                table.meta.insert(k.to_owned(), value);
            }
            lines.next();
        }
        let header = lines
            .next()
            .ok_or_else(|| Error::Domain("missing header row".into()))?;
        let names: Vec<&str> = header.split(',').collect();
        let mut cols: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
        for line in lines {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != names.len() {
                return Err(Error::Domain(format!("ragged row `{line}`")));
            }
            for (c, f) in cols.iter_mut().zip(fields) {
                c.push(
                    f.parse()
                        .map_err(|_| Error::Domain(format!("bad number `{f}`")))?,
                );
            }
        }
        for (name, values) in names.into_iter().zip(cols) {
            table.push_column(name, values)?;
        }
        table.validate()?;
        Ok(table)
    }
}
