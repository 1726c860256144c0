//! Young and N-functions: evaluation, shifting, Fenchel conjugation and
//! growth-class estimates.
//!
//! An [`NFunction`] is a cheap, clonable handle. Closed forms are used where
//! they exist (power family, the exponential/entropy pair); everything else
//! falls back to adaptive quadrature (shifts) or monotone bisection on the
//! optimality condition `psi'(s) = t` (conjugates).

mod descriptor;
mod growth;
mod vfunc;

use std::fmt;
use std::sync::Arc;

pub use descriptor::{BranchDescriptor, Descriptor};
pub use growth::{
    delta2_estimate, nabla2_estimate, shift_comparability_scan, Bound, GrowthReport, ShiftSample, ShiftScanReport, DEFAULT_RANGE,
    DEFAULT_SAMPLES, TAIL_GROWTH,
};
pub use vfunc::{v_function, v_gradient};

use crate::error::{Error, Result};
use crate::quad;

/// Relative tolerance used for the shift integral.
pub const SHIFT_REL_TOL: f64 = 1e-10;

/// One branch of a piecewise function: `scale * base(offset + t) + constant`.
#[derive(Clone, Debug)]
pub struct Branch {
    pub base: NFunction,
    pub scale: f64,
    pub offset: f64,
    pub constant: f64,
}

impl Branch {
    pub fn value(&self, t: f64) -> f64 {
        self.scale * self.base.value(self.offset + t) + self.constant
    }

    pub fn deriv(&self, t: f64) -> f64 {
        self.scale * self.base.deriv(self.offset + t)
    }

    pub fn deriv2(&self, t: f64) -> Option<f64> {
        self.base.deriv2(self.offset + t).map(|d| self.scale * d)
    }
}

/// A function defined by branches glued at increasing breakpoints.
///
/// Branch `i` covers `(breaks[i-1], breaks[i]]`.
#[derive(Clone, Debug)]
pub struct Piecewise {
    breaks: Vec<f64>,
    branches: Vec<Branch>,
}

impl Piecewise {
    pub fn new(breaks: Vec<f64>, branches: Vec<Branch>) -> Result<Self> {
        if branches.len() != breaks.len() + 1 {
            return Err(Error::Malformed(format!(
                "piecewise function needs {} branches for {} breaks, got {}",
                breaks.len() + 1,
                breaks.len(),
                branches.len()
            )));
        }
        if breaks.windows(2).any(|w| w[0] >= w[1]) || breaks.iter().any(|&b| !(b > 0.0)) {
            return Err(Error::Malformed("breakpoints must be positive and increasing".into()));
        }
        Ok(Self { breaks, branches })
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    fn branch(&self, t: f64) -> &Branch {
        let i = self.breaks.partition_point(|&b| b < t);
        &self.branches[i]
    }
}

type ScalarFn = dyn Fn(f64) -> f64 + Send + Sync;

/// A user-supplied function with an explicit derivative.
pub struct CustomFn {
    pub name: String,
    pub value: Box<ScalarFn>,
    pub deriv: Box<ScalarFn>,
}

impl fmt::Debug for CustomFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CustomFn({})", self.name)
    }
}

/// A Young function on `[0, inf)`.
#[derive(Clone, Debug)]
pub enum NFunction {
    /// `coef * t^p`
    Power { p: f64, coef: f64 },
    /// `t log(1 + t)`
    LLogL,
    /// `e^t - t - 1`
    ExpConjugate,
    /// `(1 + t) log(1 + t) - t`, the conjugate of [`NFunction::ExpConjugate`].
    Entropy,
    /// `sqrt(1 + t^2) - 1`; linear growth, so not an N-function at infinity.
    SqrtOnePlus,
    /// The shifted function `phi_a(t) = int_0^t phi'(a+s) s / (a+s) ds`.
    Shifted { base: Arc<NFunction>, a: f64 },
    /// Fenchel conjugate computed pointwise by bisection.
    NumericConjugate { base: Arc<NFunction> },
    Piecewise(Arc<Piecewise>),
    Custom(Arc<CustomFn>),
}

impl NFunction {
    /// `t^p`.
    pub fn power(p: f64) -> Self {
        NFunction::Power { p, coef: 1.0 }
    }

    /// `t^p / p`.
    pub fn power_normalized(p: f64) -> Self {
        NFunction::Power { p, coef: 1.0 / p }
    }

    pub fn custom(
        name: impl Into<String>,
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        deriv: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        NFunction::Custom(Arc::new(CustomFn { name: name.into(), value: Box::new(value), deriv: Box::new(deriv) }))
    }

    pub fn piecewise(breaks: Vec<f64>, branches: Vec<Branch>) -> Result<Self> {
        Ok(NFunction::Piecewise(Arc::new(Piecewise::new(breaks, branches)?)))
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            NFunction::Power { .. } => "power",
            NFunction::LLogL => "llogl",
            NFunction::ExpConjugate => "exp_conjugate",
            NFunction::Entropy => "entropy",
            NFunction::SqrtOnePlus => "sqrt_one_plus",
            NFunction::Shifted { .. } => "shifted",
            NFunction::NumericConjugate { .. } => "numeric_conjugate",
            NFunction::Piecewise(_) => "piecewise",
            NFunction::Custom(_) => "custom",
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        let t = t.max(0.0);
        match self {
            NFunction::Power { p, coef } => coef * t.powf(*p),
            NFunction::LLogL => t * t.ln_1p(),
            NFunction::ExpConjugate => {
                if t < 1e-3 {
                    // e^t - 1 - t by its Taylor series; avoids cancellation.
                    let t2 = t * t;
                    t2 * (0.5 + t * (1.0 / 6.0 + t * (1.0 / 24.0 + t * (1.0 / 120.0 + t / 720.0))))
                } else {
                    t.exp_m1() - t
                }
            }
            NFunction::Entropy => {
                if t < 1e-3 {
                    // sum_{k>=2} (-1)^k t^k / (k (k-1))
                    let mut acc = 0.0;
                    let mut pow = t * t;
                    for k in 2..10 {
                        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                        acc += sign * pow / (k * (k - 1)) as f64;
                        pow *= t;
                    }
                    acc
                } else {
                    (1.0 + t) * t.ln_1p() - t
                }
            }
            NFunction::SqrtOnePlus => t * t / ((1.0 + t * t).sqrt() + 1.0),
            NFunction::Shifted { base, a } => {
                if t == 0.0 {
                    return 0.0;
                }
                let a = *a;
                quad::integrate(|s| base.deriv(a + s) * s / (a + s), 0.0, t, SHIFT_REL_TOL)
            }
            NFunction::NumericConjugate { base } => conjugate_by_bisection(base, t).0,
            NFunction::Piecewise(pw) => pw.branch(t).value(t),
            NFunction::Custom(c) => (c.value)(t),
        }
    }

    pub fn deriv(&self, t: f64) -> f64 {
        let t = t.max(0.0);
        match self {
            NFunction::Power { p, coef } => {
                if t == 0.0 {
                    if *p > 1.0 {
                        0.0
                    } else {
                        coef * p
                    }
                } else {
                    coef * p * t.powf(p - 1.0)
                }
            }
            NFunction::LLogL => t.ln_1p() + t / (1.0 + t),
            NFunction::ExpConjugate => t.exp_m1(),
            NFunction::Entropy => t.ln_1p(),
            NFunction::SqrtOnePlus => t / (1.0 + t * t).sqrt(),
            NFunction::Shifted { base, a } => {
                if t == 0.0 {
                    0.0
                } else {
                    base.deriv(a + t) * t / (a + t)
                }
            }
            NFunction::NumericConjugate { base } => conjugate_by_bisection(base, t).1,
            NFunction::Piecewise(pw) => pw.branch(t).deriv(t),
            NFunction::Custom(c) => (c.deriv)(t),
        }
    }

    /// Second derivative where a closed form is available.
    pub fn deriv2(&self, t: f64) -> Option<f64> {
        let t = t.max(0.0);
        match self {
            NFunction::Power { p, coef } => {
                if t == 0.0 && *p < 2.0 {
                    None
                } else {
                    Some(coef * p * (p - 1.0) * t.powf(p - 2.0))
                }
            }
            NFunction::LLogL => Some(1.0 / (1.0 + t) + 1.0 / ((1.0 + t) * (1.0 + t))),
            NFunction::ExpConjugate => Some(t.exp()),
            NFunction::Entropy => Some(1.0 / (1.0 + t)),
            NFunction::SqrtOnePlus => Some((1.0 + t * t).powf(-1.5)),
            NFunction::Shifted { base, a } => {
                let r = a + t;
                if r == 0.0 {
                    return base.deriv2(0.0);
                }
                let d2 = if t > 0.0 { base.deriv2(r)? * t / r } else { 0.0 };
                Some(d2 + base.deriv(r) * a / (r * r))
            }
            NFunction::NumericConjugate { base } => {
                let (_, s) = conjugate_by_bisection(base, t);
                base.deriv2(s).map(|d| 1.0 / d)
            }
            NFunction::Piecewise(pw) => pw.branch(t).deriv2(t),
            NFunction::Custom(_) => None,
        }
    }

    /// Finite supremum of the derivative, if the function grows only linearly.
    ///
    /// Returns `None` for superlinear functions.
    pub fn slope_limit(&self) -> Option<f64> {
        match self {
            NFunction::Power { p, coef } => (*p <= 1.0).then_some(coef * p),
            NFunction::LLogL | NFunction::ExpConjugate | NFunction::Entropy => None,
            NFunction::SqrtOnePlus => Some(1.0),
            _ => {
                let far = self.deriv(1e100);
                let mid = self.deriv(1e50);
                if !far.is_finite() || far > mid * (1.0 + 1e-9) {
                    None
                } else {
                    Some(far)
                }
            }
        }
    }

    /// The shifted function `phi_a`.
    pub fn shift(&self, a: f64) -> Result<NFunction> {
        if !(a >= 0.0) || !a.is_finite() {
            return Err(Error::Domain(format!("shift parameter must be finite and >= 0, got {a}")));
        }
        Ok(NFunction::Shifted { base: Arc::new(self.clone()), a })
    }

    /// Fenchel conjugate. Closed forms for the power family and the
    /// exponential/entropy pair, pointwise bisection otherwise.
    pub fn conjugate(&self) -> Result<NFunction> {
        match self {
            NFunction::Power { p, coef } if *p > 1.0 => {
                let q = p / (p - 1.0);
                let c = (p - 1.0) / p * (coef * p).powf(-1.0 / (p - 1.0));
                Ok(NFunction::Power { p: q, coef: c })
            }
            NFunction::ExpConjugate => Ok(NFunction::Entropy),
            NFunction::Entropy => Ok(NFunction::ExpConjugate),
            _ => self.numeric_conjugate(),
        }
    }

    /// Conjugate that always goes through bisection; refuses linear growth.
    pub fn numeric_conjugate(&self) -> Result<NFunction> {
        if let Some(threshold) = self.slope_limit() {
            return Err(Error::DegenerateConjugate { threshold });
        }
        Ok(NFunction::NumericConjugate { base: Arc::new(self.clone()) })
    }

    /// Evaluates the checked N-function axioms on a log grid over `[lo, hi]`.
    pub fn check_axioms(&self, lo: f64, hi: f64, samples: usize) -> Result<()> {
        if self.value(0.0) != 0.0 || self.deriv(0.0) != 0.0 {
            return Err(Error::InvalidNFunction(format!("{} does not vanish to first order at 0", self.kind_name())));
        }
        let grid = quad::log_grid(lo, hi, samples);
        let mut prev = 0.0;
        for &t in &grid {
            let d = self.deriv(t);
            if !(d > 0.0) || d < prev * (1.0 - 1e-12) {
                return Err(Error::InvalidNFunction(format!(
                    "derivative of {} not positive and non-decreasing at t = {t}",
                    self.kind_name()
                )));
            }
            prev = d;
        }
        Ok(())
    }
}

/// Value of the Fenchel conjugate `sup_s (s t - psi(s))`, `+inf` where the
/// supremum diverges.
pub fn legendre(psi: &NFunction, t: f64) -> f64 {
    match psi {
        NFunction::Power { p, .. } if *p > 1.0 => psi.conjugate().map(|c| c.value(t)).unwrap_or(f64::INFINITY),
        NFunction::ExpConjugate => NFunction::Entropy.value(t),
        NFunction::Entropy => NFunction::ExpConjugate.value(t),
        _ => {
            if let Some(limit) = psi.slope_limit() {
                if t > limit {
                    return f64::INFINITY;
                }
            }
            conjugate_by_bisection(psi, t).0
        }
    }
}

/// Solves `psi'(s) = t` by bracketing and bisection. Returns
/// `(psi*(t), s)`; `(inf, inf)` when no finite maximizer exists.
fn conjugate_by_bisection(psi: &NFunction, t: f64) -> (f64, f64) {
    if t <= 0.0 {
        return (0.0, 0.0);
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    loop {
        let d = psi.deriv(hi);
        if d >= t || d.is_nan() {
            break;
        }
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() || hi > 1e300 {
            return (f64::INFINITY, f64::INFINITY);
        }
    }
    for _ in 0..2100 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if psi.deriv(mid) < t {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s = 0.5 * (lo + hi);
    let v = s * t - psi.value(s);
    (v.max(0.0), s)
}

impl fmt::Display for NFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NFunction::Power { p, coef } if *coef == 1.0 => write!(f, "t^{p}"),
            NFunction::Power { p, coef } => write!(f, "{coef}*t^{p}"),
            NFunction::LLogL => write!(f, "t*log(1+t)"),
            NFunction::ExpConjugate => write!(f, "exp(t)-t-1"),
            NFunction::Entropy => write!(f, "(1+t)*log(1+t)-t"),
            NFunction::SqrtOnePlus => write!(f, "sqrt(1+t^2)-1"),
            NFunction::Shifted { base, a } => write!(f, "shift({base}, {a})"),
            NFunction::NumericConjugate { base } => write!(f, "conj({base})"),
            NFunction::Piecewise(pw) => write!(f, "piecewise({} branches)", pw.branches.len()),
            NFunction::Custom(c) => write!(f, "custom({})", c.name),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn quadratic_shift_is_identity() {
        // phi'(a+s) s/(a+s) = s for phi = t^2/2, so phi_a = phi.
        let phi = NFunction::power_normalized(2.0);
        for a in [0.0, 1.0, 10.0] {
            let sh = phi.shift(a).unwrap();
            for t in [1e-3, 0.5, 2.0, 17.0] {
                assert!(rel(sh.value(t), t * t / 2.0) < 1e-12, "a={a} t={t}");
                assert!(rel(sh.deriv(t), t) < 1e-14);
            }
        }
    }

    #[test]
    fn shift_by_zero_reproduces_base() {
        for phi in [NFunction::power(3.0), NFunction::LLogL, NFunction::ExpConjugate] {
            let sh = phi.shift(0.0).unwrap();
            for t in quad::log_grid(1e-3, 20.0, 25) {
                assert!(rel(sh.value(t), phi.value(t)) < 1e-9, "{phi} t={t}");
            }
        }
    }

    #[test]
    fn cubic_shift_hand_integral() {
        // phi = t^3/3, a = 1: int_0^2 (1+s) s ds = 2 + 8/3 = 14/3.
        let sh = NFunction::power_normalized(3.0).shift(1.0).unwrap();
        assert!((sh.value(2.0) - 14.0 / 3.0).abs() < 1e-12);
        // deriv2 closed form against a central difference
        let h = 1e-5;
        let fd = (sh.deriv(2.0 + h) - sh.deriv(2.0 - h)) / (2.0 * h);
        assert!(rel(sh.deriv2(2.0).unwrap(), fd) < 1e-8);
    }

    #[test]
    fn negative_shift_is_rejected() {
        assert!(matches!(NFunction::LLogL.shift(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn conjugate_closed_forms() {
        let half_sq = NFunction::power_normalized(2.0).conjugate().unwrap();
        assert!(rel(half_sq.value(3.0), 4.5) < 1e-15);
        let cubic = NFunction::power_normalized(3.0).conjugate().unwrap();
        assert!(rel(cubic.value(2.0), 2f64.powf(1.5) / 1.5) < 1e-14);
        let ent = NFunction::ExpConjugate.conjugate().unwrap();
        assert!(rel(ent.value(1.0), 2.0 * 2f64.ln() - 1.0) < 1e-14);
    }

    #[test]
    fn numeric_conjugate_matches_closed_forms() {
        let psi = NFunction::power_normalized(3.0);
        let num = psi.numeric_conjugate().unwrap();
        assert!(rel(num.value(2.0), 2f64.powf(1.5) / 1.5) < 1e-12);
        let num = NFunction::ExpConjugate.numeric_conjugate().unwrap();
        assert!(rel(num.value(1.0), 2.0 * 2f64.ln() - 1.0) < 1e-12);
    }

    #[test]
    fn linear_growth_conjugate_is_degenerate() {
        match NFunction::SqrtOnePlus.conjugate() {
            Err(Error::DegenerateConjugate { threshold }) => assert!((threshold - 1.0).abs() < 1e-12),
            other => panic!("expected degenerate conjugate, got {other:?}"),
        }
        assert!(legendre(&NFunction::SqrtOnePlus, 1.5).is_infinite());
        // below the threshold: sup_s (s t - sqrt(1+s^2) + 1) = 1 - sqrt(1 - t^2)
        let t: f64 = 0.6;
        assert!(rel(legendre(&NFunction::SqrtOnePlus, t), 1.0 - (1.0 - t * t).sqrt()) < 1e-10);
    }

    #[test]
    fn series_branches_are_continuous() {
        for f in [NFunction::ExpConjugate, NFunction::Entropy] {
            let below = f.value(1e-3 * (1.0 - 1e-12));
            let above = f.value(1e-3 * (1.0 + 1e-12));
            assert!(rel(below, above) < 1e-9, "{f}");
        }
    }

    #[test]
    fn axioms_hold_for_shipped_functions() {
        for f in [NFunction::power(2.0), NFunction::power(3.0), NFunction::LLogL, NFunction::ExpConjugate, NFunction::Entropy] {
            f.check_axioms(1e-6, 1e6, 200).unwrap();
        }
        assert!(NFunction::power(1.0).check_axioms(1e-3, 1.0, 10).is_err());
    }
}
