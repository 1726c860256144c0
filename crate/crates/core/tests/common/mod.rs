//! Oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use aqc_core::fieldlab::{Field, Grid};
use nalgebra::DVector;
use nalgebra_sparse::factorization::CscCholesky;
use nalgebra_sparse::{CooMatrix, CscMatrix};

/// One-dimensional difference matrix on `cells + 1` vertices: one-sided at
/// the ends, central inside, as triplets `(row, col, value)`.
fn diff_1d(cells: usize, h: f64) -> Vec<(usize, usize, f64)> {
    let mut t = vec![(0, 1, 1.0 / h), (0, 0, -1.0 / h), (cells, cells, 1.0 / h), (cells, cells - 1, -1.0 / h)];
    for k in 1..cells {
        t.push((k, k + 1, 0.5 / h));
        t.push((k, k - 1, -0.5 / h));
    }
    t
}

fn trapezoid(cells: usize, h: f64, k: usize) -> f64 {
    if k == 0 || k == cells {
        0.5 * h
    } else {
        h
    }
}

/// Minimizer of `sum_k w_k |D u|^2` for a scalar field on a 2-D vertex grid
/// with the outer ring pinned to `boundary`, by sparse Cholesky on the free
/// nodes. The stencils are assembled here independently of the library.
pub fn dirichlet_oracle(grid: &Grid, boundary: &Field) -> Vec<f64> {
    let (nx, ny) = (grid.shape()[0], grid.shape()[1]);
    let (hx, hy) = (grid.h(0), grid.h(1));
    let (sx, sy) = (grid.strides()[0], grid.strides()[1]);
    let node = |i: usize, j: usize| i * sx + j * sy;
    let total = grid.len();
    // Rows of the stacked difference operator, with their quadrature weight.
    let mut rows: Vec<(Vec<(usize, f64)>, f64)> = Vec::new();
    for (axis, cells, h) in [(0, nx, hx), (1, ny, hy)] {
        let d = diff_1d(cells, h);
        let other = if axis == 0 { ny } else { nx };
        let (oh, ocells) = if axis == 0 { (hy, ny) } else { (hx, nx) };
        for m in 0..=other {
            for k in 0..=cells {
                let entries: Vec<(usize, f64)> = d
                    .iter()
                    .filter(|(r, _, _)| *r == k)
                    .map(|&(_, c, v)| (if axis == 0 { node(c, m) } else { node(m, c) }, v))
                    .collect();
                rows.push((entries, trapezoid(cells, h, k) * trapezoid(ocells, oh, m)));
            }
        }
    }
    let pinned: Vec<bool> = (0..total).map(|i| grid.is_pinned(i)).collect();
    let mut free_index = vec![usize::MAX; total];
    let mut nfree = 0;
    for i in 0..total {
        if !pinned[i] {
            free_index[i] = nfree;
            nfree += 1;
        }
    }
    let ub: Vec<f64> = (0..total).map(|i| if pinned[i] { boundary.at(i)[0] } else { 0.0 }).collect();
    let mut coo = CooMatrix::new(nfree, nfree);
    let mut rhs = DVector::zeros(nfree);
    for (entries, w) in &rows {
        let bpart: f64 = entries.iter().map(|&(c, v)| v * ub[c]).sum();
        for &(r, vr) in entries {
            if pinned[r] {
                continue;
            }
            let fr = free_index[r];
            rhs[fr] -= w * vr * bpart;
            for &(c, vc) in entries {
                if !pinned[c] {
                    coo.push(fr, free_index[c], w * vr * vc);
                }
            }
        }
    }
    let a = CscMatrix::from(&coo);
    let chol = CscCholesky::factor(&a).expect("discrete Dirichlet form is positive definite");
    let x = chol.solve(&rhs);
    (0..total).map(|i| if pinned[i] { ub[i] } else { x[free_index[i]] }).collect()
}
