use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nfunc::NFunction;
use crate::quad::{bisect_increasing, log_grid};

const NORM_SAMPLES: usize = 9;
const ANGLE_SAMPLES: usize = 16;
const RADIAL_SAMPLES: usize = 60;
const FAR_DECADES: f64 = 1e6;
const RATIO_GRID: (f64, f64) = (1.0, 1e12);

/// Constants of the large- and small-increment sandwich lemmas for one
/// `(phi, M)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuxReport {
    pub m: f64,
    /// Threshold from `2 phi(1+M) <= phi(1+S)`, raised to at least `3M`.
    pub s: f64,
    /// Threshold from `(2/K) phi(1+M) <= phi(1+S)`, used for the upper bound.
    pub s_upper: f64,
    /// `inf_{t>=1} phi(t/12) / phi(t)` on the scan grid.
    pub k: f64,
    /// `sup_{t>=1} f(t)` with `f(t) = phi(t) / (12 phi(t/12))`.
    pub f_max: f64,
    /// `f` at the far end of the scan grid.
    pub f_tail: f64,
    /// Least observed lower constant over `|xi| >= S`; the lemma gives 1/2.
    pub c1_fit: f64,
    /// Least observed upper constant over `|xi| >= s_upper`; the lemma gives `K/2`.
    pub c2_fit: f64,
    pub c2_lemma: f64,
    /// Range of the Bregman quotient over `|xi| <= S`.
    pub small_min: f64,
    pub small_max: f64,
    /// Least raw difference quotient `(V(z0+xi) - V(z0)) / |xi|^2`; negative
    /// when `z0 != 0`.
    pub small_raw_min: f64,
    /// Range of `|z|^2 / phi_{1+|z0|}(|z|)` over `0 < |z| <= S`.
    pub quadr_min: f64,
    pub quadr_max: f64,
    pub holds: bool,
}

fn least_threshold(phi: &NFunction, target: f64) -> f64 {
    let g = |s: f64| phi.value(1.0 + s) - target;
    if g(0.0) >= 0.0 {
        return 0.0;
    }
    let mut hi = 1.0;
    while g(hi) < 0.0 && hi < 1e300 {
        hi *= 2.0;
    }
    bisect_increasing(g, 0.0, hi)
}

fn check_monotone(phi: &NFunction) -> Result<()> {
    let grid = log_grid(1e-6, 1e12, 400);
    let mut prev = 0.0;
    for &t in &grid {
        let v = phi.value(t);
        if !(v > prev) {
            return Err(Error::Domain(format!("{phi} is not strictly increasing near t = {t:e}")));
        }
        prev = v;
    }
    Ok(())
}

/// Norm of `z0 + xi` for `|z0| = r0`, `|xi| = r` at angle `theta`.
fn sum_norm(r0: f64, r: f64, theta: f64) -> f64 {
    (r0 * r0 + r * r + 2.0 * r0 * r * theta.cos()).max(0.0).sqrt()
}

fn v(phi: &NFunction, r: f64) -> f64 {
    phi.value((1.0 + r * r).sqrt())
}

pub fn aux_bounds_scan(phi: &NFunction, m: f64) -> Result<AuxReport> {
    if !(m > 0.0) || !m.is_finite() {
        return Err(Error::Domain(format!("M must be positive, got {m}")));
    }
    check_monotone(phi)?;

    let ts = log_grid(RATIO_GRID.0, RATIO_GRID.1, 400);
    let f: Vec<f64> = ts.iter().map(|&t| phi.value(t) / (12.0 * phi.value(t / 12.0))).collect();
    let f_max = f.iter().cloned().fold(0.0, f64::max);
    let f_tail = *f.last().unwrap();
    let k = 1.0 / (12.0 * f_max);

    let s = least_threshold(phi, 2.0 * phi.value(1.0 + m)).max(3.0 * m);
    let s_upper = least_threshold(phi, 2.0 / k * phi.value(1.0 + m)).max(s);

    let norms0: Vec<f64> = (0..NORM_SAMPLES).map(|i| m * i as f64 / (NORM_SAMPLES - 1) as f64).collect();
    let angles: Vec<f64> =
        (0..ANGLE_SAMPLES).map(|i| std::f64::consts::PI * i as f64 / (ANGLE_SAMPLES - 1) as f64).collect();

    let far_quotient = |r0: f64, r: f64, th: f64| {
        let num = phi.value(1.0 + r0 + r) - phi.value(1.0 + r0);
        let den = v(phi, sum_norm(r0, r, th)) - v(phi, r0);
        num / den
    };
    let mut c1_fit = f64::INFINITY;
    let mut c2_fit = f64::INFINITY;
    for &r0 in &norms0 {
        for &th in &angles {
            for &r in &log_grid(s, s * FAR_DECADES, RADIAL_SAMPLES) {
                c1_fit = c1_fit.min(far_quotient(r0, r, th));
            }
            for &r in &log_grid(s_upper, s_upper * FAR_DECADES, RADIAL_SAMPLES) {
                c2_fit = c2_fit.min(1.0 / far_quotient(r0, r, th));
            }
        }
    }

    let (mut small_min, mut small_max, mut small_raw_min) = (f64::INFINITY, 0.0f64, f64::INFINITY);
    let (mut quadr_min, mut quadr_max) = (f64::INFINITY, 0.0f64);
    let radii = log_grid(s * 1e-4, s, RADIAL_SAMPLES);
    for &r0 in &norms0 {
        let a = (1.0 + r0 * r0).sqrt();
        let slope = phi.deriv(a) * r0 / a;
        for &th in &angles {
            for &r in &radii {
                let raw = v(phi, sum_norm(r0, r, th)) - v(phi, r0);
                let breg = raw - slope * r * th.cos();
                small_min = small_min.min(breg / (r * r));
                small_max = small_max.max(breg / (r * r));
                small_raw_min = small_raw_min.min(raw / (r * r));
            }
        }
        let shifted = phi.shift(1.0 + r0)?;
        for &r in &radii {
            let q = r * r / shifted.value(r);
            quadr_min = quadr_min.min(q);
            quadr_max = quadr_max.max(q);
        }
    }

    let finite = [c1_fit, c2_fit, small_min, small_max, quadr_min, quadr_max].iter().all(|x| x.is_finite());
    let c2_lemma = 0.5 * k;
    let holds = finite
        && c1_fit >= 0.5 * (1.0 - 1e-9)
        && c2_fit >= c2_lemma * (1.0 - 1e-9)
        && small_min > 0.0
        && quadr_min > 0.0;
    Ok(AuxReport {
        m,
        s,
        s_upper,
        k,
        f_max,
        f_tail,
        c1_fit,
        c2_fit,
        c2_lemma,
        small_min,
        small_max,
        small_raw_min,
        quadr_min,
        quadr_max,
        holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_recipe() {
        let r = aux_bounds_scan(&NFunction::power(2.0), 1.0).unwrap();
        assert_eq!(r.s, 3.0);
        assert!((r.k - 1.0 / 144.0).abs() < 1e-12);
        assert!(r.holds, "{r:?}");
        // V_{t^2}(z) = |z|^2 + 1, so the Bregman quotient is exactly 1.
        assert!((r.small_min - 1.0).abs() < 1e-6 && (r.small_max - 1.0).abs() < 1e-6);
        assert!((r.quadr_min - 1.0).abs() < 1e-8 && (r.quadr_max - 1.0).abs() < 1e-8);
        assert!(r.small_raw_min < 0.0);
    }

    #[test]
    fn llogl_ratio_profile() {
        let r = aux_bounds_scan(&NFunction::LLogL, 1.0).unwrap();
        let f1 = 2f64.ln() / (13.0f64 / 12.0).ln();
        assert!((r.f_max - f1).abs() < 1e-9, "{}", r.f_max);
        assert!(r.f_tail > 1.0 && r.f_tail < 1.2);
        assert!(r.holds, "{r:?}");
    }

    #[test]
    fn cubic_holds() {
        let r = aux_bounds_scan(&NFunction::power(3.0), 2.0).unwrap();
        assert!(r.holds && r.s >= 6.0, "{r:?}");
    }

    #[test]
    fn rejects_non_monotone() {
        let bump = NFunction::custom("bump", |t| (t * t).min(1.0), |t| if t < 1.0 { 2.0 * t } else { 0.0 });
        assert!(aux_bounds_scan(&bump, 1.0).is_err());
    }
}
