//! Schema-versioned run reports and their artifacts.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use aqc_core::ineq::{InequalityReport, TableRow};
use serde::{Deserialize, Serialize};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Numeric table with named columns, written as CSV.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    #[serde(with = "nonfinite")]
    pub rows: Vec<Vec<f64>>,
}

/// Non-finite entries travel as the strings `inf`, `-inf` and `NaN`.
mod nonfinite {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Num {
        Finite(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(rows: &[Vec<f64>], s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<Num>> = rows
            .iter()
            .map(|r| r.iter().map(|&v| if v.is_finite() { Num::Finite(v) } else { Num::Text(v.to_string()) }).collect())
            .collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<f64>>, D::Error> {
        let rows: Vec<Vec<Num>> = Vec::deserialize(d)?;
        rows.into_iter()
            .map(|r| {
                r.into_iter()
                    .map(|n| match n {
                        Num::Finite(v) => Ok(v),
                        Num::Text(t) => t.parse::<f64>().map_err(serde::de::Error::custom),
                    })
                    .collect()
            })
            .collect()
    }
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn from_rows(rows: &[TableRow]) -> Self {
        let mut t = Table::new(&["param", "lhs", "rhs", "ratio"]);
        for r in rows {
            t.push(vec![r.param, r.lhs, r.rhs, r.ratio]);
        }
        t
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub experiment: String,
    pub seed: u64,
    /// Seconds since the Unix epoch; the only field that varies between
    /// identical runs.
    pub timestamp: u64,
    pub holds: bool,
    pub config: serde_json::Value,
    pub summary: serde_json::Value,
    pub tables: BTreeMap<String, Table>,
    /// Files written next to the report, relative to the output directory.
    pub artifacts: Vec<String>,
}

impl Report {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read report {}", path.display()))?;
        let value: serde_json::Value =
            serde_json::from_str(&text).with_context(|| format!("malformed report {}", path.display()))?;
        let version = value.get("schema_version").and_then(|v| v.as_u64());
        if version != Some(REPORT_SCHEMA_VERSION as u64) {
            bail!("report schema mismatch: found {version:?}, expected {REPORT_SCHEMA_VERSION}");
        }
        serde_json::from_value(value).with_context(|| format!("report {} does not match the schema", path.display()))
    }
}

/// Experiment outcome before it is stamped and written.
#[derive(Debug, Default)]
pub struct Outcome {
    pub holds: bool,
    pub summary: serde_json::Map<String, serde_json::Value>,
    pub tables: BTreeMap<String, Table>,
    pub fields: Vec<(String, aqc_core::Field)>,
}

impl Outcome {
    pub fn put(&mut self, key: &str, value: impl Serialize) -> Result<()> {
        self.summary.insert(key.to_string(), serde_json::to_value(value)?);
        Ok(())
    }

    /// Stores an inequality report under `key`, moving its tables out with
    /// `key` as prefix.
    pub fn put_inequality(&mut self, key: &str, mut r: InequalityReport) -> Result<()> {
        for (name, rows) in std::mem::take(&mut r.tables) {
            self.tables.insert(format!("{key}_{name}"), Table::from_rows(&rows));
        }
        let constant = r.fitted_constant;
        self.put(key, r)?;
        if let Some(serde_json::Value::Object(m)) = self.summary.get_mut(key) {
            m.remove("tables");
            if !constant.is_finite() {
                m.insert("fitted_constant".into(), constant.to_string().into());
            }
        }
        Ok(())
    }
}
