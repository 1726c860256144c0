use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{Field, Grid};
use crate::error::{Error, Result};
use crate::opsym::DiffOp;

/// Discrete Jacobian: component `j * n + i` holds `D_i u_j`.
pub fn jacobian_fd(u: &Field) -> Field {
    let g = u.grid();
    let (n, dv) = (g.n(), u.dim());
    let width = dv * n;
    let mut out = vec![0.0; g.len() * width];
    if width > 0 {
        let src = u.values();
        out.par_chunks_mut(width).enumerate().for_each(|(idx, jac)| {
            for a in 0..n {
                let s = g.strides()[a];
                let k = (idx / s) % g.counts()[a];
                let (kp, km, scale) = g.diff_pair(a, k);
                let base = idx - k * s;
                let (ip, im) = (base + kp * s, base + km * s);
                for j in 0..dv {
                    jac[j * n + a] = (src[ip * dv + j] - src[im * dv + j]) * scale;
                }
            }
        });
    }
    Field::from_values(g.clone(), width, out).expect("jacobian has the grid size")
}

/// Transpose of [`jacobian_fd`]: maps a Jacobian-shaped cotangent back to
/// a `dim_v`-field.
pub fn jacobian_fd_adjoint(grid: &Grid, dim_v: usize, cot: &Field) -> Result<Field> {
    let n = grid.n();
    let width = dim_v * n;
    if cot.dim() != width {
        return Err(Error::DimensionMismatch { expected: width, got: cot.dim() });
    }
    let mut out = vec![0.0; grid.len() * dim_v];
    let c = cot.values();
    for idx in 0..grid.len() {
        for a in 0..n {
            let s = grid.strides()[a];
            let k = (idx / s) % grid.counts()[a];
            let (kp, km, scale) = grid.diff_pair(a, k);
            let base = idx - k * s;
            let (ip, im) = (base + kp * s, base + km * s);
            for j in 0..dim_v {
                let q = c[idx * width + j * n + a] * scale;
                out[ip * dim_v + j] += q;
                out[im * dim_v + j] -= q;
            }
        }
    }
    Field::from_values(grid.clone(), dim_v, out)
}

/// `A_h u = pi_A(grad_h u)` at every node.
pub fn apply_op_fd(op: &DiffOp, u: &Field) -> Result<Field> {
    check(op, u.grid(), u.dim())?;
    let jac = jacobian_fd(u);
    Ok(map_nodes(&op.projection_pi(), &jac))
}

/// Transpose of [`apply_op_fd`] applied to a W-valued cotangent.
pub fn apply_op_fd_adjoint(op: &DiffOp, cot: &Field) -> Result<Field> {
    if cot.dim() != op.dim_w() {
        return Err(Error::DimensionMismatch { expected: op.dim_w(), got: cot.dim() });
    }
    check(op, cot.grid(), op.dim_v())?;
    let jac_cot = map_nodes(&op.projection_pi().transpose(), cot);
    jacobian_fd_adjoint(cot.grid(), op.dim_v(), &jac_cot)
}

fn check(op: &DiffOp, grid: &Grid, dim: usize) -> Result<()> {
    if dim != op.dim_v() {
        return Err(Error::DimensionMismatch { expected: op.dim_v(), got: dim });
    }
    if grid.n() != op.n() {
        return Err(Error::DimensionMismatch { expected: op.n(), got: grid.n() });
    }
    Ok(())
}

/// Applies a fixed matrix to the sample at every node.
pub(crate) fn map_nodes(m: &DMatrix<f64>, f: &Field) -> Field {
    let (rows, cols) = m.shape();
    debug_assert_eq!(cols, f.dim());
    let mut out = vec![0.0; f.grid().len() * rows];
    if rows > 0 {
        let src = f.values();
        out.par_chunks_mut(rows).enumerate().for_each(|(idx, o)| {
            let v = &src[idx * cols..(idx + 1) * cols];
            for (r, slot) in o.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (c, x) in v.iter().enumerate() {
                    acc += m[(r, c)] * x;
                }
                *slot = acc;
            }
        });
    }
    Field::from_values(f.grid().clone(), rows, out).expect("mapped field has the grid size")
}
