use super::{digest, InequalityReport, TableRow};
use crate::error::Result;
use crate::fieldlab::{apply_multiplier, rearrangement, Field};
use crate::opsym::Multiplier;

/// Fits the least `C` with `g*(t) <= C ((1/t) int_0^t f* + int_t^|Omega| f*(s)/s ds)`
/// where `g` is the multiplier applied to `f`; `t` runs over the midpoints
/// of the steps of `g*`.
pub fn bagby_check(m: &Multiplier, f: &Field) -> Result<InequalityReport> {
    let g = apply_multiplier(m, f)?;
    let fp = rearrangement(f);
    let gp = rearrangement(&g);
    let steps = fp.thresholds.len();
    let mut prefix = vec![0.0; steps + 1];
    for k in 0..steps {
        prefix[k + 1] = prefix[k] + fp.thresholds[k] * fp.measures[k];
    }
    // suffix[k] = int_{s_left(k)}^{total} f*(s)/s ds for k >= 1
    let mut suffix = vec![0.0; steps + 1];
    for k in (1..steps).rev() {
        suffix[k] = suffix[k + 1] + fp.thresholds[k] * (fp.s_right[k] / fp.s_left(k)).ln();
    }
    let rhs_at = |t: f64| -> f64 {
        let k = fp.s_right.partition_point(|&r| r <= t).min(steps - 1);
        let left = fp.s_left(k);
        let avg = (prefix[k] + fp.thresholds[k] * (t - left)) / t;
        let tail = fp.thresholds[k] * (fp.s_right[k] / t).ln() + suffix[k + 1];
        avg + tail
    };
    let mut rows = Vec::with_capacity(gp.thresholds.len());
    let mut c: f64 = 0.0;
    for k in 0..gp.thresholds.len() {
        let t = 0.5 * (gp.s_left(k) + gp.s_right[k]);
        let lhs = gp.thresholds[k];
        let rhs = rhs_at(t);
        let ratio = if rhs > 0.0 {
            lhs / rhs
        } else if lhs > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        c = c.max(ratio);
        rows.push(TableRow { param: t, lhs, rhs, ratio });
    }
    let worst = rows.iter().fold(None::<&TableRow>, |m, r| if m.map_or(true, |m| r.ratio > m.ratio) { Some(r) } else { m });
    let (lhs, rhs) = worst.map_or((0.0, 0.0), |w| (w.lhs, w.rhs));
    let mut report = InequalityReport::from_sides(lhs, rhs, digest(&format!("bagby|{m:?}"), &[f]));
    report.trivial = gp.thresholds.iter().all(|&v| v == 0.0);
    report.fitted_constant = c;
    report.holds = c.is_finite();
    report.tables.insert("profile".into(), rows);
    Ok(report)
}
