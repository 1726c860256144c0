use super::{digest, ls_slope, InequalityReport, TableRow};
use crate::error::{Error, Result};
use crate::fieldlab::{apply_op_fd, integrate_with, jacobian_fd, Field};
use crate::opsym::DiffOp;

/// Slack allowed on the log-ratio slope of an amplitude sweep.
pub const SLOPE_TOL: f64 = 0.05;

/// `r log^alpha(1 + r)` as a pointwise density on vectors.
pub fn loglog_density(alpha: f64) -> impl Fn(&[f64]) -> f64 + Sync {
    move |v: &[f64]| {
        let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if r == 0.0 {
            0.0
        } else {
            r * r.ln_1p().powf(alpha)
        }
    }
}

/// `int |grad u| log^a(1+|grad u|)` against `int |A u| log^(a+1)(1+|A u|)`.
pub fn loglog_korn_check(op: &DiffOp, alpha: f64, u: &Field) -> Result<InequalityReport> {
    if !(alpha >= 0.0) {
        return Err(Error::Domain(format!("alpha must be >= 0, got {alpha}")));
    }
    let au = apply_op_fd(op, u)?;
    let lhs = integrate_with(&jacobian_fd(u), loglog_density(alpha));
    let rhs = integrate_with(&au, loglog_density(alpha + 1.0));
    if rhs == 0.0 && lhs > 0.0 {
        return Err(Error::DegenerateDenominator("the operator annihilates u".into()));
    }
    Ok(InequalityReport::from_sides(lhs, rhs, digest(&format!("loglog|{alpha}|{:?}", op.descriptor()), &[u])))
}

/// Runs [`loglog_korn_check`] on `amplitude * u` and fits the slope of
/// `log ratio` against `log amplitude`; holds when the slope is at most
/// [`SLOPE_TOL`].
pub fn loglog_sweep(op: &DiffOp, alpha: f64, u: &Field, amplitudes: &[f64]) -> Result<InequalityReport> {
    if amplitudes.len() < 2 || amplitudes.iter().any(|&a| !(a > 0.0)) {
        return Err(Error::Domain("sweep needs at least two positive amplitudes".into()));
    }
    let mut rows = Vec::with_capacity(amplitudes.len());
    for &a in amplitudes {
        let r = loglog_korn_check(op, alpha, &u.scaled(a))?;
        let ratio = r.ratio.ok_or_else(|| Error::DegenerateDenominator("sweep field vanishes".into()))?;
        rows.push(TableRow { param: a, lhs: r.lhs, rhs: r.rhs, ratio });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.param.ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.ratio.ln()).collect();
    let slope = ls_slope(&xs, &ys);
    let max_ratio = rows.iter().map(|r| r.ratio).fold(f64::NEG_INFINITY, f64::max);
    let last = rows.last().expect("non-empty sweep").clone();
    let mut report = InequalityReport::from_sides(
        last.lhs,
        last.rhs,
        digest(&format!("loglog_sweep|{alpha}|{:?}|{amplitudes:?}", op.descriptor()), &[u]),
    );
    report.fitted_constant = max_ratio;
    report.holds = slope <= SLOPE_TOL && max_ratio.is_finite();
    report.constants.insert("log_slope".into(), slope);
    report.constants.insert("alpha".into(), alpha);
    report.tables.insert("sweep".into(), rows);
    Ok(report)
}
