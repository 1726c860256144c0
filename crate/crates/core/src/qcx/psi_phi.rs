use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nfunc::{legendre, Branch, NFunction};
use crate::quad::log_grid;

/// Gluing data of the L log L pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairInfo {
    pub m: f64,
    /// Surrogate for `|pi_A(z0)|`.
    pub a: f64,
    /// Breakpoint `max{3M, 1}`.
    pub s: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub delta3: f64,
    pub delta4: f64,
    /// `(1+a^2)^{-3/2}`, the slope limit of `Phi`.
    pub kappa: f64,
}

/// The pair `(Psi, Phi)`: `Psi` grows like `t log t`, `Phi` linearly, both
/// quadratic below `S`.
#[derive(Clone, Debug)]
pub struct PsiPhiPair {
    pub psi: NFunction,
    pub phi: NFunction,
    pub info: PairInfo,
}

/// Builds the pair for `phi(t) = t log(1+t)`.
///
/// Both functions are `C^1` at `S`: the quadratic coefficient matches the
/// slope of the outer branch and the additive constant matches its value.
pub fn build_psi_phi(m: f64, z0_norm: f64, pi_norm: f64) -> Result<PsiPhiPair> {
    if !(m > 0.0) || !m.is_finite() {
        return Err(Error::Domain(format!("M must be positive, got {m}")));
    }
    if !(z0_norm >= 0.0) || z0_norm > m {
        return Err(Error::Domain(format!("|z0| = {z0_norm} must lie in [0, M = {m}]")));
    }
    if !(pi_norm >= 0.0) || !pi_norm.is_finite() {
        return Err(Error::Domain(format!("projection norm must be >= 0, got {pi_norm}")));
    }
    let base = NFunction::LLogL;
    let a = pi_norm * z0_norm;
    let s = (3.0 * m).max(1.0);

    let outer_psi = |t: f64| base.value(1.0 + a + t) - base.value(1.0 + a);
    let delta1 = base.deriv(1.0 + a + s) / (2.0 * s);
    let delta2 = outer_psi(s) - delta1 * s * s;

    let kappa = (1.0 + a * a).powf(-1.5);
    let sq = NFunction::SqrtOnePlus;
    let delta3 = kappa * sq.deriv(s) / (2.0 * s);
    let delta4 = kappa * sq.value(s) - delta3 * s * s;

    let info = PairInfo { m, a, s, delta1, delta2, delta3, delta4, kappa };
    if ![delta1, delta2, delta3, delta4].iter().all(|d| d.is_finite()) || delta1 <= 0.0 || delta3 <= 0.0 {
        return Err(Error::Infeasible(format!("gluing at S = {s} gives {info:?}")));
    }

    let quad = |c: f64| Branch { base: NFunction::power(2.0), scale: c, offset: 0.0, constant: 0.0 };
    let psi = NFunction::piecewise(
        vec![s],
        vec![
            quad(delta1),
            Branch { base: base.clone(), scale: 1.0, offset: 1.0 + a, constant: -base.value(1.0 + a) - delta2 },
        ],
    )?;
    let phi = NFunction::piecewise(
        vec![s],
        vec![quad(delta3), Branch { base: sq, scale: kappa, offset: 0.0, constant: -delta4 }],
    )?;
    Ok(PsiPhiPair { psi, phi, info })
}

/// Numerical check of the conjugate bounds for a [`PsiPhiPair`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConjugateBounds {
    /// Slope limit of `Phi`; `Phi*` is infinite above it.
    pub phi_threshold: f64,
    pub phi_star_finite_below: bool,
    pub phi_star_infinite_above: bool,
    /// Rate `c` in `Psi*(t) <= max{t^2/4, c4 + c exp(t/c - 1)}`.
    pub psi_c: f64,
    pub psi_c4: f64,
    /// `Psi*(t) / (t log t)`-type tail: `Psi*(t) / exp(t - 1)` at the end of the grid.
    pub psi_tail_ratio: f64,
    pub holds: bool,
}

const RATE_CANDIDATES: [f64; 10] = [1.0, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1];

pub fn conjugate_bounds(pair: &PsiPhiPair, t_max: f64, points: usize) -> Result<ConjugateBounds> {
    let thr = pair.phi.slope_limit().ok_or_else(|| Error::ClassViolation("Phi is not of linear growth".into()))?;
    let below = [0.1, 0.5, 0.9, 0.99, 0.999].iter().all(|f| legendre(&pair.phi, f * thr).is_finite());
    let above = [1.001, 1.1, 2.0, 10.0].iter().all(|f| legendre(&pair.phi, f * thr).is_infinite());

    let ts = log_grid(1e-3, t_max, points);
    let star: Vec<f64> = ts.iter().map(|&t| legendre(&pair.psi, t)).collect();
    let upper = ts.len() * 3 / 4;
    let rate = RATE_CANDIDATES.iter().copied().find(|&c| {
        ts[upper..].iter().zip(&star[upper..]).all(|(&t, &v)| v <= c * (t / c - 1.0).exp())
    });
    let (psi_c, psi_c4) = match rate {
        Some(c) => {
            let c4 = ts
                .iter()
                .zip(&star)
                .filter(|(&t, &v)| v > 0.25 * t * t)
                .map(|(&t, &v)| v - c * (t / c - 1.0).exp())
                .fold(0.0f64, f64::max);
            (c, c4)
        }
        None => (f64::NAN, f64::INFINITY),
    };
    let t_last = *ts.last().unwrap();
    let psi_tail_ratio = star.last().unwrap() / (t_last - 1.0).exp();
    Ok(ConjugateBounds {
        phi_threshold: thr,
        phi_star_finite_below: below,
        phi_star_infinite_above: above,
        psi_c,
        psi_c4,
        psi_tail_ratio,
        holds: below && above && rate.is_some() && psi_c4.is_finite(),
    })
}
