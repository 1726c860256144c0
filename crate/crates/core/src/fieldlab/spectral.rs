use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

use super::{Field, Grid};
use crate::error::{Error, Result};
use crate::opsym::Multiplier;

/// In-place n-dimensional FFT of a node-major scalar array.
fn fft_nd(grid: &Grid, data: &mut [Complex64], direction: FftDirection) {
    let mut planner = FftPlanner::new();
    for axis in 0..grid.n() {
        let len = grid.counts()[axis];
        if len == 1 {
            continue;
        }
        let stride = grid.strides()[axis];
        let fft = planner.plan_fft(len, direction);
        let mut line = vec![Complex64::new(0.0, 0.0); len];
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        for start in 0..data.len() {
            if (start / stride) % len != 0 {
                continue;
            }
            for (k, slot) in line.iter_mut().enumerate() {
                *slot = data[start + k * stride];
            }
            fft.process_with_scratch(&mut line, &mut scratch);
            for (k, v) in line.iter().enumerate() {
                data[start + k * stride] = *v;
            }
        }
    }
}

/// Signed integer frequency of FFT bin `k` on an axis of length `len`.
fn frequency(k: usize, len: usize) -> f64 {
    if k <= len / 2 {
        k as f64
    } else {
        k as f64 - len as f64
    }
}

/// Applies `m(xi)` per integer frequency on a periodic grid and returns the
/// real part of the result.
pub fn apply_multiplier(m: &Multiplier, f: &Field) -> Result<Field> {
    let grid = f.grid();
    if !grid.is_periodic() {
        return Err(Error::UnsupportedBoundary("spectral multipliers need a periodic grid".into()));
    }
    if f.dim() != m.cols() {
        return Err(Error::DimensionMismatch { expected: m.cols(), got: f.dim() });
    }
    let len = grid.len();
    let (rows, cols) = (m.rows(), m.cols());
    let mut spectra: Vec<Vec<Complex64>> = (0..cols)
        .into_par_iter()
        .map(|c| {
            let mut d: Vec<Complex64> = (0..len).map(|i| Complex64::new(f.values()[i * cols + c], 0.0)).collect();
            fft_nd(grid, &mut d, FftDirection::Forward);
            d
        })
        .collect();
    let out_spectra: Vec<Vec<Complex64>> = {
        let mixed: Vec<Vec<Complex64>> = (0..len)
            .into_par_iter()
            .map(|i| {
                let xi: Vec<f64> = grid.multi_index(i).iter().zip(grid.counts()).map(|(&k, &c)| frequency(k, c)).collect();
                let mat = m.eval(&xi);
                (0..rows)
                    .map(|r| (0..cols).fold(Complex64::new(0.0, 0.0), |acc, c| acc + spectra[c][i] * mat[(r, c)]))
                    .collect()
            })
            .collect();
        spectra.clear();
        (0..rows).map(|r| mixed.iter().map(|v| v[r]).collect()).collect()
    };
    let scale = 1.0 / len as f64;
    let components: Vec<Vec<f64>> = out_spectra
        .into_par_iter()
        .map(|mut d| {
            fft_nd(grid, &mut d, FftDirection::Inverse);
            d.into_iter().map(|z| z.re * scale).collect()
        })
        .collect();
    let mut values = vec![0.0; len * rows];
    for (r, comp) in components.iter().enumerate() {
        for (i, v) in comp.iter().enumerate() {
            values[i * rows + r] = *v;
        }
    }
    Field::from_values(grid.clone(), rows, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fieldlab::Boundary;
    use crate::opsym::DiffOp;
    use std::f64::consts::TAU;

    #[test]
    fn identity_round_trip() {
        let g = Grid::new(vec![12, 10], vec![1.0, 1.0], Boundary::Periodic).unwrap();
        let f = Field::from_fn(g, 2, |x, o| {
            o[0] = (x[0] * 7.0).exp() - x[1];
            o[1] = (x[1] * 3.0).sin();
        });
        let g = apply_multiplier(&Multiplier::identity(2), &f).unwrap();
        let err = f.values().iter().zip(g.values()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-12 * f.max_abs());
    }

    #[test]
    fn riesz_multiplier_recovers_partial_derivatives() {
        let op = DiffOp::preset("sym_grad", 2, None).unwrap();
        let g = Grid::unit(2, 32, Boundary::Periodic).unwrap();
        // u = (sin(2 pi (x + 2y)), cos(2 pi 3 x)); symmetric gradient analytically
        let du = |x: &[f64]| {
            let a = TAU * (x[0] + 2.0 * x[1]);
            let b = TAU * 3.0 * x[0];
            // rows: d_i u_j at j*2+i
            [TAU * a.cos(), 2.0 * TAU * a.cos(), -3.0 * TAU * b.sin(), 0.0]
        };
        let eps = Field::from_fn(g.clone(), 4, |x, o| {
            let j = du(x);
            o[0] = j[0];
            o[1] = 0.5 * (j[1] + j[2]);
            o[2] = o[1];
            o[3] = j[3];
        });
        for axis in 0..2 {
            let back = apply_multiplier(&op.multiplier(axis).unwrap(), &eps).unwrap();
            for idx in 0..g.len() {
                let j = du(&g.coords(idx));
                for c in 0..2 {
                    assert!((back.at(idx)[c] - j[c * 2 + axis]).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn constants_vanish_under_operator_multipliers() {
        let op = DiffOp::preset("grad", 2, Some(1)).unwrap();
        let g = Grid::unit(2, 8, Boundary::Periodic).unwrap();
        let f = Field::constant(g, &[3.0, -1.0]);
        let out = apply_multiplier(&op.multiplier(1).unwrap(), &f).unwrap();
        assert!(out.max_abs() < 1e-14);
    }

    #[test]
    fn dirichlet_grid_is_rejected() {
        let g = Grid::unit(1, 8, Boundary::DirichletLayer { width: 1 }).unwrap();
        let f = Field::zeros(g, 1);
        assert!(matches!(apply_multiplier(&Multiplier::identity(1), &f), Err(Error::UnsupportedBoundary(_))));
    }
}
