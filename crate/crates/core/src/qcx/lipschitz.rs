use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::Integrand;
use crate::nfunc::NFunction;

/// Fitted constant of `|F(z)-F(w)| <= L phi(1+|z|+|w|)/(1+|z|+|w|) |z-w|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzReport {
    pub samples: usize,
    /// Fit over the first half of the pairs.
    pub l_half: f64,
    pub l_fit: f64,
    /// Pairs with `z = w`, skipped.
    pub coincident: usize,
    pub holds: bool,
}

/// Random pairs with norms log-uniform in `[1e-3, radius]`; every other pair
/// is a small perturbation to probe the local constant.
pub fn lipschitz_bound_check(f: &Integrand, phi: &NFunction, samples: usize, radius: f64, seed: u64) -> LipschitzReport {
    let dim = f.dim_w();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lo = 1e-3f64;
    let draw = |rng: &mut ChaCha8Rng, r: f64| {
        let dir: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let n = dir.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
        dir.into_iter().map(|x| x * r / n).collect::<Vec<f64>>()
    };
    let (mut l_half, mut l_fit, mut coincident) = (0.0f64, 0.0f64, 0);
    for k in 0..samples {
        let rz = (lo.ln() + rng.random::<f64>() * (radius / lo).ln()).exp();
        let z = draw(&mut rng, rz);
        let w = if k % 2 == 0 {
            let rw = (lo.ln() + rng.random::<f64>() * (radius / lo).ln()).exp();
            draw(&mut rng, rw)
        } else {
            let d = draw(&mut rng, 1e-3 * rz);
            z.iter().zip(&d).map(|(a, b)| a + b).collect()
        };
        let dist = z.iter().zip(&w).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        if dist == 0.0 {
            coincident += 1;
            continue;
        }
        let s = 1.0 + z.iter().map(|x| x * x).sum::<f64>().sqrt() + w.iter().map(|x| x * x).sum::<f64>().sqrt();
        let q = (f.value(&z) - f.value(&w)).abs() / (phi.value(s) / s * dist);
        l_fit = l_fit.max(q);
        if k < samples / 2 {
            l_half = l_half.max(q);
        }
    }
    let holds = l_fit.is_finite() && l_fit <= 1.1 * l_half;
    LipschitzReport { samples, l_half, l_fit, coincident, holds }
}
