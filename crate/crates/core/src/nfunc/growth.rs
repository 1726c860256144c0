use serde::{Deserialize, Serialize};

use super::NFunction;
use crate::error::{Error, Result};
use crate::quad;

/// Default scan range for doubling constants.
pub const DEFAULT_RANGE: (f64, f64) = (1e-8, 1e8);
/// Default number of log-spaced samples.
pub const DEFAULT_SAMPLES: usize = 10_000;
/// Relative growth over the last decade that marks a ratio as unbounded.
pub const TAIL_GROWTH: f64 = 0.01;

/// A doubling constant that is either finite or flagged unbounded.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    Finite(f64),
    Unbounded,
}

impl Bound {
    pub fn is_bounded(&self) -> bool {
        matches!(self, Bound::Finite(_))
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            Bound::Finite(v) => Some(*v),
            Bound::Unbounded => None,
        }
    }
}

/// Sampled estimate of `sup_t psi(2t) / psi(t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub constant: Bound,
    pub scan_range: (f64, f64),
    pub samples: usize,
    /// Sample where the largest finite ratio was seen.
    pub sup_attained_at: f64,
    /// Largest finite ratio seen, also when the tail test fires.
    pub sup_sampled: f64,
}

/// Estimates the Δ₂ constant of `psi` on a log grid.
pub fn delta2_estimate(psi: &NFunction, range: (f64, f64), samples: usize) -> Result<GrowthReport> {
    let (lo, hi) = range;
    if !(lo > 0.0) || !(hi > lo) || samples < 2 {
        return Err(Error::Domain(format!("bad scan range [{lo}, {hi}] with {samples} samples")));
    }
    let grid = quad::log_grid(lo, hi, samples);
    let mut ratios = Vec::with_capacity(grid.len());
    let mut overflow = false;
    for &t in &grid {
        let v = psi.value(t);
        if v.is_nan() || v <= 0.0 {
            return Err(Error::InvalidNFunction(format!("{psi} vanishes or is undefined at t = {t}")));
        }
        let v2 = psi.value(2.0 * t);
        let r = v2 / v;
        if !r.is_finite() {
            overflow = true;
            break;
        }
        ratios.push(r);
    }
    let (arg, sup) = ratios
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &r)| if r > acc.1 { (i, r) } else { acc });
    let constant = if overflow || tail_grows(&grid[..ratios.len()], &ratios, hi) {
        Bound::Unbounded
    } else {
        Bound::Finite(sup)
    };
    Ok(GrowthReport { constant, scan_range: range, samples, sup_attained_at: grid[arg], sup_sampled: sup })
}

fn tail_grows(grid: &[f64], ratios: &[f64], hi: f64) -> bool {
    let Some(&last) = ratios.last() else {
        return true;
    };
    let start = grid.partition_point(|&t| t < hi / 10.0).min(ratios.len() - 1);
    last > ratios[start] * (1.0 + TAIL_GROWTH)
}

/// Estimates the ∇₂ constant, i.e. Δ₂ of the conjugate.
pub fn nabla2_estimate(psi: &NFunction, range: (f64, f64), samples: usize) -> Result<GrowthReport> {
    delta2_estimate(&psi.conjugate()?, range, samples)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftSample {
    pub a: f64,
    pub delta2: Bound,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftScanReport {
    pub base_delta2: f64,
    pub base_nabla2: f64,
    pub per_shift: Vec<ShiftSample>,
    pub max_delta2: Bound,
    /// `max_delta2 / base_delta2`; infinite if some shift is unbounded.
    pub ratio: f64,
}

/// Δ₂ constants of `phi_a` across shift parameters, compared with `phi`.
pub fn shift_comparability_scan(
    phi: &NFunction,
    a_samples: &[f64],
    range: (f64, f64),
    samples: usize,
) -> Result<ShiftScanReport> {
    let base = delta2_estimate(phi, range, samples)?;
    let nabla = nabla2_estimate(phi, range, samples)?;
    let (Some(base_delta2), Some(base_nabla2)) = (base.constant.value(), nabla.constant.value()) else {
        return Err(Error::ClassViolation(format!("{phi} is not in Δ₂ ∩ ∇₂ on the scanned range")));
    };
    let mut per_shift = Vec::with_capacity(a_samples.len());
    for &a in a_samples {
        // phi_0 = phi identically; skip the quadrature.
        let delta2 = if a == 0.0 { base.constant } else { delta2_estimate(&phi.shift(a)?, range, samples)?.constant };
        per_shift.push(ShiftSample { a, delta2 });
    }
    let max_delta2 = per_shift.iter().try_fold(f64::NEG_INFINITY, |m, s| s.delta2.value().map(|v| m.max(v)));
    let (max_delta2, ratio) = match max_delta2 {
        Some(m) if m.is_finite() => (Bound::Finite(m), m / base_delta2),
        Some(_) => (Bound::Finite(base_delta2), 1.0),
        None => (Bound::Unbounded, f64::INFINITY),
    };
    Ok(ShiftScanReport { base_delta2, base_nabla2, per_shift, max_delta2, ratio })
}
