use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Both sides of `E(z) >= (1/4)(1+|z0|^2)^{-3/2} V1(z)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonBound {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `V1(z) = sqrt(1 + |z|^2) - 1`.
pub fn v1(z: &[f64]) -> f64 {
    let r2 = dot(z, z);
    r2 / ((1.0 + r2).sqrt() + 1.0)
}

/// Bregman excess `V1(z0+z) - V1(z0) - <V1'(z0), z>` without cancellation.
///
/// Uses `E = (|z|^2 + wedge) / (a (ab + 1 + d))` with `a, b` the
/// `sqrt(1+|.|^2)` of `z0, z0+z`, `d = <z0, z0+z>` and `wedge` the squared
/// norm of `z0 ^ (z0+z)`. For `d < 0` the factor `ab + d` is rewritten as a
/// sum of non-negative terms.
pub fn bregman_v1(z0: &[f64], z: &[f64]) -> f64 {
    let w = z0;
    let v: Vec<f64> = w.iter().zip(z).map(|(a, b)| a + b).collect();
    let (w2, v2, z2) = (dot(w, w), dot(&v, &v), dot(z, z));
    if z2 == 0.0 {
        return 0.0;
    }
    let a = (1.0 + w2).sqrt();
    let b = (1.0 + v2).sqrt();
    let d = dot(w, &v);
    let mut wedge = 0.0;
    for i in 0..w.len() {
        for j in i + 1..w.len() {
            let c = w[i] * z[j] - w[j] * z[i];
            wedge += c * c;
        }
    }
    let den = if d >= 0.0 {
        a * b + 1.0 + d
    } else {
        let (nw, nv) = (w2.sqrt(), v2.sqrt());
        1.0 + (1.0 + w2 + v2) / (a * b + nw * nv) + wedge / (nw * nv - d)
    };
    (z2 + wedge) / (a * den)
}

pub fn comp_lower_bound(z0: &[f64], z: &[f64]) -> ComparisonBound {
    let lhs = bregman_v1(z0, z);
    let rhs = 0.25 * (1.0 + dot(z0, z0)).powf(-1.5) * v1(z);
    ComparisonBound { lhs, rhs, holds: lhs >= rhs - 1e-12 }
}

/// Random sampling summary of [`comp_lower_bound`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonScan {
    pub samples: usize,
    pub violations: usize,
    /// Least observed `lhs / rhs`.
    pub min_ratio: f64,
}

/// Pairs with norms log-uniform in `[1e-6, radius]` and random directions in
/// `R^dim`.
pub fn comparison_scan(dim: usize, samples: usize, radius: f64, seed: u64) -> ComparisonScan {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lo = 1e-6f64;
    let draw = |rng: &mut ChaCha8Rng| {
        let dir: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let n = dot(&dir, &dir).sqrt().max(1e-300);
        let r = (lo.ln() + rng.random::<f64>() * (radius / lo).ln()).exp();
        dir.into_iter().map(|x| x * r / n).collect::<Vec<f64>>()
    };
    let mut violations = 0;
    let mut min_ratio = f64::INFINITY;
    for _ in 0..samples {
        let z0 = draw(&mut rng);
        let z = draw(&mut rng);
        let c = comp_lower_bound(&z0, &z);
        if !c.holds {
            violations += 1;
        }
        if c.rhs > 0.0 {
            min_ratio = min_ratio.min(c.lhs / c.rhs);
        }
    }
    ComparisonScan { samples, violations, min_ratio }
}
