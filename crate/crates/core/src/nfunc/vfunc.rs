use super::NFunction;
use crate::quad;

/// `V_phi(z) = phi(sqrt(1 + |z|^2)) - phi(1)`.
///
/// For small `|z|` the difference is integrated from `phi'` instead of
/// subtracting two nearby values.
pub fn v_function(phi: &NFunction, z: &[f64]) -> f64 {
    let r2: f64 = z.iter().map(|x| x * x).sum();
    let s = (1.0 + r2).sqrt();
    let d = r2 / (s + 1.0);
    if d < 0.1 {
        quad::gauss_legendre7(|t| phi.deriv(t), 1.0, 1.0 + d)
    } else {
        phi.value(s) - phi.value(1.0)
    }
}

/// Gradient of [`v_function`] in `z`: `phi'(s) z / s` with `s = sqrt(1 + |z|^2)`.
pub fn v_gradient(phi: &NFunction, z: &[f64]) -> Vec<f64> {
    let r2: f64 = z.iter().map(|x| x * x).sum();
    let s = (1.0 + r2).sqrt();
    let k = phi.deriv(s) / s;
    z.iter().map(|x| k * x).collect()
}
