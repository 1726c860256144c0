//! Families of compactly supported, band-limited test fields.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{Field, Grid};
use crate::error::{Error, Result};

/// Width of the zero collar as a fraction of each box side.
pub const DEFAULT_COLLAR: f64 = 0.125;

/// `(seed, band, amplitude)` triple naming one member of the family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestFieldSpec {
    pub seed: u64,
    pub band: usize,
    pub amplitude: f64,
}

/// `sin^4` bump on `[collar, 1 - collar]` (relative to each side), zero outside.
pub fn window(x: &[f64], extent: &[f64], collar: f64) -> f64 {
    x.iter()
        .zip(extent)
        .map(|(&xi, &e)| {
            let t = (xi / e - collar) / (1.0 - 2.0 * collar);
            if t <= 0.0 || t >= 1.0 {
                0.0
            } else {
                (std::f64::consts::PI * t).sin().powi(4)
            }
        })
        .product()
}

/// Linear family `u = window * sum_k c_k phi_k` with separable
/// trigonometric `phi_k` of frequency at most `band` per axis.
#[derive(Clone, Debug)]
pub struct TrigFamily {
    grid: Grid,
    dim: usize,
    band: usize,
    /// `basis[a][node_k * width + b]`: 1-D basis function `b` on axis `a`.
    basis: Vec<Vec<f64>>,
    window: Vec<f64>,
}

impl TrigFamily {
    pub fn new(grid: &Grid, dim: usize, band: usize, collar: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&collar) {
            return Err(Error::Domain(format!("collar must lie in [0, 1/2), got {collar}")));
        }
        let width = 2 * band + 1;
        let basis = (0..grid.n())
            .map(|a| {
                let mut b = Vec::with_capacity(grid.counts()[a] * width);
                for k in 0..grid.counts()[a] {
                    let s = k as f64 * grid.h(a) / grid.extent()[a];
                    b.push(1.0);
                    for f in 1..=band {
                        let th = std::f64::consts::TAU * f as f64 * s;
                        b.push(th.cos());
                        b.push(th.sin());
                    }
                }
                b
            })
            .collect();
        let mut x = vec![0.0; grid.n()];
        let window = (0..grid.len())
            .map(|i| {
                grid.coords_into(i, &mut x);
                window(&x, grid.extent(), collar)
            })
            .collect();
        Ok(Self { grid: grid.clone(), dim, band, basis, window })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn width(&self) -> usize {
        2 * self.band + 1
    }

    pub fn num_coeffs(&self) -> usize {
        self.dim * self.width().pow(self.grid.n() as u32)
    }

    /// Field for a coefficient vector of length [`TrigFamily::num_coeffs`].
    pub fn synthesize(&self, coeffs: &[f64]) -> Field {
        assert_eq!(coeffs.len(), self.num_coeffs(), "coefficient count");
        let g = &self.grid;
        let n = g.n();
        let width = self.width();
        let per_comp = width.pow(n as u32);
        let mut values = vec![0.0; g.len() * self.dim];
        let mut k = vec![0usize; n];
        for idx in 0..g.len() {
            let w = self.window[idx];
            if w == 0.0 {
                continue;
            }
            for (a, slot) in k.iter_mut().enumerate() {
                *slot = (idx / g.strides()[a]) % g.counts()[a];
            }
            for c in 0..self.dim {
                let mut acc = 0.0;
                for m in 0..per_comp {
                    let mut prod = coeffs[c * per_comp + m];
                    let mut rest = m;
                    for a in (0..n).rev() {
                        let b = rest % width;
                        rest /= width;
                        prod *= self.basis[a][k[a] * width + b];
                    }
                    acc += prod;
                }
                values[idx * self.dim + c] = w * acc;
            }
        }
        Field::from_values(g.clone(), self.dim, values).expect("synthesized field has the grid size")
    }

    pub fn random_coeffs(&self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..self.num_coeffs()).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    /// Random member scaled to sup-norm `amplitude`.
    pub fn sample(&self, seed: u64, amplitude: f64) -> Field {
        let f = self.synthesize(&self.random_coeffs(seed));
        let m = f.max_abs();
        if m == 0.0 {
            f
        } else {
            f.scaled(amplitude / m)
        }
    }
}

/// Random compactly supported field with the default collar.
pub fn random_compact_field(grid: &Grid, dim: usize, spec: TestFieldSpec) -> Result<Field> {
    Ok(TrigFamily::new(grid, dim, spec.band, DEFAULT_COLLAR)?.sample(spec.seed, spec.amplitude))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fieldlab::Boundary;

    #[test]
    fn support_and_normalization() {
        let g = Grid::unit(2, 32, Boundary::Periodic).unwrap();
        let f = random_compact_field(&g, 2, TestFieldSpec { seed: 7, band: 2, amplitude: 3.0 }).unwrap();
        assert!((f.max_abs() - 3.0).abs() < 1e-12);
        assert!(f.is_supported_inside(DEFAULT_COLLAR, 0.0));
        let again = random_compact_field(&g, 2, TestFieldSpec { seed: 7, band: 2, amplitude: 3.0 }).unwrap();
        assert_eq!(f, again);
        let other = random_compact_field(&g, 2, TestFieldSpec { seed: 8, band: 2, amplitude: 3.0 }).unwrap();
        assert_ne!(f, other);
    }

    #[test]
    fn synthesis_is_linear() {
        let g = Grid::unit(2, 12, Boundary::DirichletLayer { width: 1 }).unwrap();
        let fam = TrigFamily::new(&g, 1, 1, DEFAULT_COLLAR).unwrap();
        let a = fam.random_coeffs(1);
        let b = fam.random_coeffs(2);
        let ab: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + 2.0 * y).collect();
        let lhs = fam.synthesize(&ab);
        let rhs = fam.synthesize(&a).axpy(2.0, &fam.synthesize(&b)).unwrap();
        for (x, y) in lhs.values().iter().zip(rhs.values()) {
            assert!((x - y).abs() < 1e-13);
        }
    }
}
