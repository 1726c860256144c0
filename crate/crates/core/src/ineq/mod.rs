//! Numerical checks of Korn, Poincaré, Hardy-type and rearrangement
//! inequalities.

mod bagby;
mod hardy;
mod korn;
mod loglog;
mod poincare;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use bagby::bagby_check;
pub use hardy::{hardy_check, HardyOptions};
pub use korn::{korn_ratio, korn_search, staircase_field, KornSearchOptions};
pub use loglog::{loglog_density, loglog_korn_check, loglog_sweep};
pub use poincare::poincare_ratio;

use crate::fieldlab::Field;

/// One row of a sweep table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub param: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

/// Outcome of an inequality check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs`; `None` when both sides vanish.
    pub ratio: Option<f64>,
    pub fitted_constant: f64,
    pub holds: bool,
    /// Both sides vanish identically.
    pub trivial: bool,
    pub config_digest: String,
    #[serde(default)]
    pub notes: Vec<String>,
    #[serde(default)]
    pub constants: BTreeMap<String, f64>,
    #[serde(default)]
    pub tables: BTreeMap<String, Vec<TableRow>>,
}

impl InequalityReport {
    /// Report for a single `lhs <= C rhs` evaluation with `C` the observed ratio.
    pub(crate) fn from_sides(lhs: f64, rhs: f64, digest: String) -> Self {
        let trivial = lhs == 0.0 && rhs == 0.0;
        let ratio = if trivial { None } else { Some(lhs / rhs) };
        InequalityReport {
            lhs,
            rhs,
            ratio,
            fitted_constant: ratio.unwrap_or(0.0),
            holds: ratio.map_or(true, f64::is_finite),
            trivial,
            config_digest: digest,
            notes: Vec::new(),
            constants: BTreeMap::new(),
            tables: BTreeMap::new(),
        }
    }
}

/// SHA-256 over a textual description and optional field samples.
pub fn digest(description: &str, fields: &[&Field]) -> String {
    let mut h = Sha256::new();
    h.update(description.as_bytes());
    for f in fields {
        h.update(f.grid().shape().iter().flat_map(|s| (*s as u64).to_le_bytes()).collect::<Vec<u8>>());
        h.update((f.dim() as u64).to_le_bytes());
        for v in f.values() {
            h.update(v.to_le_bytes());
        }
    }
    hex::encode(h.finalize())
}

/// Least-squares slope of `ys` against `xs`.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
