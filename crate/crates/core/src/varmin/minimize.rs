use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use rayon::prelude::*;

use super::{energy, energy_grad};
use crate::error::{Error, Result};
use crate::fieldlab::{apply_op_fd, Field, Grid};
use crate::quad::pairwise_sum;
use crate::opsym::DiffOp;
use crate::qcx::Integrand;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MinimizeOptions {
    pub max_iters: usize,
    /// Tolerance on the sup norm of [`energy_grad`](super::energy_grad).
    pub grad_tol: f64,
    /// Armijo sufficient-decrease constant.
    pub armijo: f64,
    /// Step reduction factor per backtracking step.
    pub shrink: f64,
    pub max_halvings: usize,
    /// Number of curvature pairs kept by the quasi-Newton update.
    pub history_depth: usize,
    pub seed: u64,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self { max_iters: 5000, grad_tol: 1e-10, armijo: 1e-4, shrink: 0.5, max_halvings: 60, history_depth: 10, seed: 0 }
    }
}

/// One line of the iteration log.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub energy: f64,
    pub grad_norm: f64,
    pub step: f64,
}

#[derive(Clone, Debug)]
pub struct MinimizeResult {
    pub u: Field,
    pub trace: Vec<TraceRow>,
    pub converged: bool,
    /// The line search failed, either after the allowed number of step
    /// reductions or because the required decrease fell below the
    /// floating-point resolution of the energy; `u` is the last accepted
    /// iterate.
    pub stagnated: bool,
    /// The line search had switched to the approximate Wolfe test when it
    /// stagnated.
    pub at_floor: bool,
}

impl MinimizeResult {
    /// Converged, or stopped at the floating-point resolution of the energy.
    pub fn settled(&self) -> bool {
        self.converged || self.at_floor
    }

    pub fn energy(&self) -> f64 {
        self.trace.last().map_or(f64::NAN, |r| r.energy)
    }

    pub fn grad_norm(&self) -> f64 {
        self.trace.last().map_or(f64::NAN, |r| r.grad_norm)
    }

    /// Whether the logged energies never increase.
    pub fn monotone(&self) -> bool {
        self.trace.windows(2).all(|w| w[1].energy <= w[0].energy)
    }
}

/// Keeps the pinned values of `boundary` and fills every free node with the
/// value of the nearest pinned node (nearest face along one axis).
pub fn extend_boundary(boundary: &Field) -> Field {
    let grid = boundary.grid();
    let mut out = boundary.clone();
    let Some(width) = dirichlet_width(grid) else {
        return out;
    };
    let dim = boundary.dim();
    for idx in 0..grid.len() {
        if grid.is_pinned(idx) {
            continue;
        }
        let mut k = grid.multi_index(idx);
        let (mut best, mut axis, mut target) = (usize::MAX, 0, 0);
        for (a, &ka) in k.iter().enumerate() {
            let lo = ka + 1 - width;
            let hi = grid.shape()[a] - width + 1 - ka;
            if lo < best {
                (best, axis, target) = (lo, a, width - 1);
            }
            if hi < best {
                (best, axis, target) = (hi, a, grid.shape()[a] - width + 1);
            }
        }
        k[axis] = target;
        let src = grid.flat_index(&k);
        let v = boundary.at(src).to_vec();
        out.values_mut()[idx * dim..(idx + 1) * dim].copy_from_slice(&v);
    }
    out
}

fn dirichlet_width(grid: &Grid) -> Option<usize> {
    match grid.boundary() {
        crate::fieldlab::Boundary::DirichletLayer { width } => Some(*width),
        crate::fieldlab::Boundary::Periodic => None,
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sup(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Limited-memory BFGS with Armijo backtracking from the boundary data
/// extended inward.
///
/// Logged energies are the initial energy plus the accepted decreases, each
/// evaluated node by node. Once a decrease drops below the floating-point
/// resolution of the energy, steps are accepted by the approximate Wolfe
/// test of Hager and Zhang and the decrease is logged as the trapezoid
/// estimate `alpha (phi'(0) + phi'(alpha)) / 2`.
pub fn minimize(f: &Integrand, op: &DiffOp, grid: &Grid, boundary: &Field, opts: &MinimizeOptions) -> Result<MinimizeResult> {
    if !(opts.grad_tol > 0.0) {
        return Err(Error::Domain(format!("grad_tol must be positive, got {}", opts.grad_tol)));
    }
    if boundary.grid() != grid {
        return Err(Error::Malformed("boundary field lives on a different grid".into()));
    }
    if boundary.dim() != op.dim_v() {
        return Err(Error::DimensionMismatch { expected: op.dim_v(), got: boundary.dim() });
    }
    let mut u = extend_boundary(boundary);
    let weights = grid.quadrature_weights();
    let mut au = apply_op_fd(op, &u)?;
    let mut e = energy(f, op, &u)?;
    let mut g = energy_grad(f, op, &u)?.into_values();
    let mut gn = sup(&g);
    let mut trace = vec![TraceRow { iter: 0, energy: e, grad_norm: gn, step: 0.0 }];
    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let (mut converged, mut stagnated, mut at_floor) = (gn <= opts.grad_tol, false, false);
    let mut approximate = false;
    let floor = 4.0 * f64::EPSILON / (grid.len() as f64).sqrt();

    let mut iter = 0;
    while !converged && iter < opts.max_iters {
        iter += 1;
        let mut p = direction(&g, &pairs);
        let mut slope = dot(&g, &p);
        if !(slope < 0.0) {
            pairs.clear();
            p = direction(&g, &pairs);
            slope = dot(&g, &p);
        }
        let ap = apply_op_fd(op, &Field::from_values(grid.clone(), u.dim(), p.clone())?)?;
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            if !approximate && -alpha * slope <= floor * e.abs() {
                // The expected decrease is below the floating-point
                // resolution of the energy; from here on the decrease is
                // measured through the directional derivative.
                approximate = true;
            }
            if approximate {
                let trial: Vec<f64> = u.values().iter().zip(&p).map(|(x, d)| x + alpha * d).collect();
                let gt = energy_grad(f, op, &Field::from_values(grid.clone(), u.dim(), trial)?)?.into_values();
                let dt = dot(&gt, &p);
                if dt.is_finite() && dt <= (2.0 * opts.armijo - 1.0) * slope {
                    accepted = Some((0.5 * alpha * (slope + dt), Some(gt)));
                    break;
                }
            } else {
                let de = energy_change(f, &weights, &au, &ap, alpha);
                if de.is_finite() && de <= opts.armijo * alpha * slope {
                    accepted = Some((de, None));
                    break;
                }
            }
            alpha *= opts.shrink;
        }
        let Some((de, gt)) = accepted else {
            stagnated = true;
            at_floor = approximate;
            break;
        };
        u.values_mut().iter_mut().zip(&p).for_each(|(x, d)| *x += alpha * d);
        au.values_mut().iter_mut().zip(ap.values()).for_each(|(x, d)| *x += alpha * d);
        let gnext = match gt {
            Some(gt) => gt,
            None => energy_grad(f, op, &u)?.into_values(),
        };
        let s: Vec<f64> = p.iter().map(|d| alpha * d).collect();
        let y: Vec<f64> = gnext.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-300 {
            if pairs.len() == opts.history_depth.max(1) {
                pairs.pop_front();
            }
            pairs.push_back((s, y, 1.0 / sy));
        }
        e += de;
        g = gnext;
        gn = sup(&g);
        trace.push(TraceRow { iter, energy: e, grad_norm: gn, step: alpha });
        converged = gn <= opts.grad_tol;
    }
    Ok(MinimizeResult { u, trace, converged, stagnated, at_floor })
}

/// `sum_k w_k (F(z_k + alpha d_k) - F(z_k))`, accumulated node by node so
/// that the difference keeps its relative accuracy.
fn energy_change(f: &Integrand, weights: &[f64], au: &Field, ap: &Field, alpha: f64) -> f64 {
    let dim = au.dim();
    let terms: Vec<f64> = au
        .values()
        .par_chunks(dim)
        .zip(ap.values().par_chunks(dim))
        .zip(weights.par_iter())
        .map(|((z, d), w)| {
            let zt: Vec<f64> = z.iter().zip(d).map(|(a, b)| a + alpha * b).collect();
            w * (f.value(&zt) - f.value(z))
        })
        .collect();
    pairwise_sum(&terms)
}

/// Two-loop recursion; steepest descent scaled to unit sup norm without
/// history.
fn direction(g: &[f64], pairs: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q: Vec<f64> = g.to_vec();
    let Some((s_last, y_last, _)) = pairs.back() else {
        let n = sup(g).max(1e-300);
        return q.iter().map(|x| -x / n).collect();
    };
    let mut alphas = Vec::with_capacity(pairs.len());
    for (s, y, rho) in pairs.iter().rev() {
        let a = rho * dot(s, &q);
        q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
        alphas.push(a);
    }
    let gamma = dot(s_last, y_last) / dot(y_last, y_last);
    q.iter_mut().for_each(|x| *x *= gamma);
    for ((s, y, rho), a) in pairs.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
    }
    q.iter_mut().for_each(|x| *x = -*x);
    q
}
