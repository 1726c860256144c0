use serde::{Deserialize, Serialize};

use super::energy;
use crate::error::{Error, Result};
use crate::fieldlab::testfields::{TrigFamily, DEFAULT_COLLAR};
use crate::fieldlab::{Field, Grid};
use crate::ineq::ls_slope;
use crate::opsym::DiffOp;
use crate::qcx::Integrand;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoercivityRow {
    pub lambda: f64,
    /// `E(u0 + lambda zeta)`
    pub energy: f64,
    /// `E(u0 + lambda zeta) - E(lambda zeta)`
    pub i_term: f64,
    /// `E(lambda zeta)`
    pub ii_term: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoercivityReport {
    pub baseline: f64,
    pub rows: Vec<CoercivityRow>,
    /// Log-log slope of `E(u0 + lambda zeta) - E(u0)` over the upper half of
    /// the scales.
    pub fitted_exponent: f64,
    pub diverges: bool,
    /// `|I| <= II / 2 + |E(u0)| + |F(0)| |Omega|` at the largest scale.
    pub split_holds: bool,
    pub seed: u64,
}

/// Energy along `u0 + lambda zeta` for a fixed random compactly supported
/// `zeta` drawn from `seed`.
pub fn coercivity_probe(
    f: &Integrand,
    op: &DiffOp,
    grid: &Grid,
    boundary: &Field,
    scales: &[f64],
    seed: u64,
) -> Result<CoercivityReport> {
    if boundary.grid() != grid {
        return Err(Error::Malformed("boundary field lives on a different grid".into()));
    }
    let zeta = TrigFamily::new(grid, op.dim_v(), 2, DEFAULT_COLLAR)?.sample(seed, 1.0);
    let baseline = energy(f, op, boundary)?;
    let mut rows = Vec::with_capacity(scales.len());
    for &lambda in scales {
        let e = energy(f, op, &boundary.axpy(lambda, &zeta)?)?;
        let ii = energy(f, op, &zeta.scaled(lambda))?;
        rows.push(CoercivityRow { lambda, energy: e, i_term: e - ii, ii_term: ii });
    }
    let mut upper: Vec<&CoercivityRow> = rows.iter().filter(|r| r.lambda > 0.0 && r.energy > baseline).collect();
    upper.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    let upper = &upper[upper.len() / 2..];
    let fitted_exponent = if upper.len() >= 2 {
        let xs: Vec<f64> = upper.iter().map(|r| r.lambda.ln()).collect();
        let ys: Vec<f64> = upper.iter().map(|r| (r.energy - baseline).ln()).collect();
        ls_slope(&xs, &ys)
    } else {
        f64::NAN
    };
    let mut sorted = rows.clone();
    sorted.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    let diverges = sorted.len() >= 2 && {
        let (a, b) = (sorted[sorted.len() - 2], sorted[sorted.len() - 1]);
        b.energy > a.energy && b.energy > 10.0 * baseline.abs() + 1.0
    };
    let slack = baseline.abs() + f.value(&vec![0.0; f.dim_w()]).abs() * grid.volume();
    let split_holds = sorted.last().is_some_and(|r| r.i_term.abs() <= 0.5 * r.ii_term + slack);
    Ok(CoercivityReport { baseline, rows, fitted_exponent, diverges, split_holds, seed })
}
