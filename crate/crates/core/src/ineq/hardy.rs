use serde::{Deserialize, Serialize};

use super::{digest, InequalityReport, TableRow};
use crate::error::{Error, Result};
use crate::nfunc::{legendre, NFunction};
use crate::quad;

const INNER_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HardyOptions {
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
    /// Relative growth of the required constant over the last decade that
    /// is read as divergence.
    pub tail_growth: f64,
}

impl Default for HardyOptions {
    fn default() -> Self {
        Self { t_min: 1e-6, t_max: 1e6, points: 1000, tail_growth: 0.05 }
    }
}

/// Least `s >= 0` with `f(s) >= y` for non-decreasing `f`; `inf` if none.
fn inverse_increasing(f: impl Fn(f64) -> f64, y: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    let mut hi = 1.0;
    while f(hi) < y {
        hi *= 2.0;
        if hi > 1e300 {
            return f64::INFINITY;
        }
    }
    quad::bisect_increasing(|s| f(s) - y, 0.0, hi)
}

/// Result of scanning one Hardy condition `t int_0^t F(s)/s^2 ds <= G(c t)`.
struct Condition {
    required: Vec<Option<f64>>,
    lhs: Vec<f64>,
    diverges_at_zero: bool,
}

fn scan_condition(
    integrand: impl Fn(f64) -> f64,
    target: impl Fn(f64) -> f64,
    grid: &[f64],
    breaks: &[f64],
) -> Condition {
    let g = |s: f64| integrand(s) / (s * s);
    let t0 = grid[0];
    let near = quad::integrate(&g, t0 * 1e-4, t0, INNER_TOL);
    let far = quad::integrate(&g, t0 * 1e-8, t0, INNER_TOL);
    let diverges_at_zero = !far.is_finite() || far - near > 0.01 * far.abs().max(1e-300);
    let mut acc = if diverges_at_zero { f64::INFINITY } else { quad::integrate(&g, 0.0, t0, INNER_TOL) };
    let mut required = Vec::with_capacity(grid.len());
    let mut lhs = Vec::with_capacity(grid.len());
    for (k, &t) in grid.iter().enumerate() {
        if k > 0 && acc.is_finite() {
            acc += quad::integrate_split(&g, grid[k - 1], t, breaks, INNER_TOL);
        }
        let l = t * acc;
        lhs.push(l);
        required.push(if l.is_finite() { Some(inverse_increasing(&target, l) / t) } else { None });
    }
    Condition { required, lhs, diverges_at_zero }
}

/// Relative growth of the required constant over the last decade of points
/// where it could be evaluated.
fn tail_growth(grid: &[f64], required: &[Option<f64>]) -> f64 {
    let pts: Vec<(f64, f64)> = grid.iter().zip(required).filter_map(|(&t, c)| c.map(|c| (t, c))).collect();
    let Some(&(t_end, c_end)) = pts.last() else {
        return f64::INFINITY;
    };
    let start = pts.iter().find(|(t, _)| *t >= t_end / 10.0).map(|p| p.1).unwrap_or(c_end);
    if start > 0.0 {
        c_end / start - 1.0
    } else if c_end > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

/// Checks `t int_0^t Phi(s)/s^2 ds <= Psi(c t)` and
/// `t int_0^t Psi*(s)/s^2 ds <= Phi*(c t)` on a log grid and fits the least
/// `c` for which both hold on the grid.
pub fn hardy_check(phi: &NFunction, psi: &NFunction, opts: &HardyOptions) -> Result<InequalityReport> {
    if !(opts.t_min > 0.0) || !(opts.t_max > opts.t_min) || opts.points < 2 {
        return Err(Error::Domain("hardy grid needs 0 < t_min < t_max and at least two points".into()));
    }
    let grid = quad::log_grid(opts.t_min, opts.t_max, opts.points);
    let phi_breaks = breakpoints(phi);
    let psi_star_breaks: Vec<f64> = breakpoints(psi).iter().map(|&b| psi.deriv(b)).collect();

    let first = scan_condition(|s| phi.value(s), |s| psi.value(s), &grid, &phi_breaks);
    let second = scan_condition(|s| legendre(psi, s), |s| legendre(phi, s), &grid, &psi_star_breaks);

    let mut report = InequalityReport::from_sides(0.0, 0.0, digest(&format!("hardy|{phi}|{psi}|{opts:?}"), &[]));
    report.trivial = false;
    let mut fitted: f64 = 0.0;
    let mut holds = true;
    for (name, cond) in [("first", &first), ("second", &second)] {
        let c = cond.required.iter().flatten().fold(0.0f64, |m, &c| m.max(c));
        let growth = tail_growth(&grid, &cond.required);
        let skipped = cond.required.iter().filter(|c| c.is_none()).count();
        let diverged = cond.diverges_at_zero || !c.is_finite() || growth > opts.tail_growth;
        report.constants.insert(format!("c_{name}"), c);
        report.constants.insert(format!("tail_growth_{name}"), growth);
        report.constants.insert(format!("skipped_{name}"), skipped as f64);
        if cond.diverges_at_zero {
            report.notes.push(format!("{name} condition: inner integral diverges at 0"));
        }
        if growth > opts.tail_growth {
            report.notes.push(format!(
                "{name} condition: required constant grows by {:.1}% over the last decade, c diverges along the grid",
                100.0 * growth
            ));
        }
        if skipped > 0 {
            report.notes.push(format!("{name} condition: {skipped} points skipped where the left side overflows"));
        }
        holds &= !diverged;
        fitted = fitted.max(c);
    }
    let target_first = |t: f64| psi.value(fitted * t);
    let target_second = |t: f64| legendre(phi, fitted * t);
    for (name, cond, target) in
        [("first", &first, &target_first as &dyn Fn(f64) -> f64), ("second", &second, &target_second)]
    {
        let rows = grid
            .iter()
            .zip(&cond.lhs)
            .filter(|(_, l)| l.is_finite())
            .map(|(&t, &l)| {
                let r = target(t);
                TableRow { param: t, lhs: l, rhs: r, ratio: if r > 0.0 { l / r } else { f64::INFINITY } }
            })
            .collect();
        report.tables.insert(name.into(), rows);
    }
    let worst = report
        .tables
        .values()
        .flatten()
        .fold(None::<&TableRow>, |m, r| if m.map_or(true, |m| r.ratio > m.ratio) { Some(r) } else { m });
    if let Some(w) = worst {
        report.lhs = w.lhs;
        report.rhs = w.rhs;
        report.ratio = Some(w.ratio);
    }
    report.fitted_constant = fitted;
    report.holds = holds && fitted.is_finite();
    Ok(report)
}

fn breakpoints(f: &NFunction) -> Vec<f64> {
    match f {
        NFunction::Piecewise(pw) => pw.breaks().to_vec(),
        _ => Vec::new(),
    }
}
