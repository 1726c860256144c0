//! Direct-method minimization of discretized functionals `int F(A u)` on
//! Dirichlet classes, coercivity probes and excess-based regularity
//! diagnostics.

mod coercivity;
mod demo;
mod excess;
mod minimize;

pub use coercivity::{coercivity_probe, CoercivityReport, CoercivityRow};
pub use demo::{nonelliptic_demo, staircase_depth, DemoOptions, DemoReport};
pub use excess::{excess_map, excess_of, ExcessMap};
pub use minimize::{extend_boundary, minimize, MinimizeOptions, MinimizeResult, TraceRow};

use crate::error::{Error, Result};
use crate::fieldlab::{apply_op_fd, apply_op_fd_adjoint, integrate_with, Field};
use crate::opsym::DiffOp;
use crate::qcx::Integrand;

fn check(f: &Integrand, op: &DiffOp) -> Result<()> {
    if f.dim_w() != op.dim_w() {
        return Err(Error::DimensionMismatch { expected: op.dim_w(), got: f.dim_w() });
    }
    Ok(())
}

/// `sum_k w_k F(A_h u(x_k))` with the grid quadrature weights.
pub fn energy(f: &Integrand, op: &DiffOp, u: &Field) -> Result<f64> {
    check(f, op)?;
    let au = apply_op_fd(op, u)?;
    Ok(integrate_with(&au, |z| f.value(z)))
}

/// Gradient of [`energy`] with respect to the nodal values of `u`; entries on
/// pinned nodes are zero.
pub fn energy_grad(f: &Integrand, op: &DiffOp, u: &Field) -> Result<Field> {
    check(f, op)?;
    if !f.has_grad() {
        return Err(Error::Unsupported(format!("integrand {} has no gradient", f.name())));
    }
    let au = apply_op_fd(op, u)?;
    let grid = u.grid();
    let w = grid.quadrature_weights();
    let dw = op.dim_w();
    let mut cot = vec![0.0; au.values().len()];
    for (idx, (c, z)) in cot.chunks_mut(dw).zip(au.values().chunks(dw)).enumerate() {
        f.grad(z, c)?;
        c.iter_mut().for_each(|x| *x *= w[idx]);
    }
    let cot = Field::from_values(grid.clone(), dw, cot)?;
    let mut g = apply_op_fd_adjoint(op, &cot)?;
    let dv = g.dim();
    if !grid.is_periodic() {
        let pinned = grid.pinned_mask();
        for (chunk, p) in g.values_mut().chunks_mut(dv).zip(pinned) {
            if p {
                chunk.iter_mut().for_each(|x| *x = 0.0);
            }
        }
    }
    Ok(g)
}

/// The integrand `G = F o pi_A` on full gradients; `energy(G, grad, u)`
/// equals `energy(F, op, u)`.
pub fn reduce(f: &Integrand, op: &DiffOp) -> Result<Integrand> {
    f.reduce(op)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fieldlab::testfields::{random_compact_field, TestFieldSpec};
    use crate::fieldlab::{Boundary, Grid};
    use crate::nfunc::NFunction;
    use std::f64::consts::PI;

    fn dirichlet(cells: usize) -> Grid {
        Grid::unit(2, cells, Boundary::DirichletLayer { width: 1 }).unwrap()
    }

    #[test]
    fn affine_and_constant() {
        let g = dirichlet(16);
        let op = DiffOp::preset("grad", 2, Some(2)).unwrap();
        let b = [1.0, -2.0, 0.5, 3.0];
        let u = Field::from_fn(g.clone(), 2, |x, o| {
            o[0] = 0.3 + b[0] * x[0] + b[1] * x[1];
            o[1] = -1.0 + b[2] * x[0] + b[3] * x[1];
        });
        let e = energy(&Integrand::squared_norm(4), &op, &u).unwrap();
        assert!((e - b.iter().map(|x| x * x).sum::<f64>()).abs() < 1e-12);
        let e = energy(&Integrand::constant(4, 2.5), &op, &u).unwrap();
        assert!((e - 2.5).abs() < 1e-12);
        // Affine fields are stationary.
        let gr = energy_grad(&Integrand::squared_norm(4), &op, &u).unwrap();
        assert!(gr.max_abs() < 1e-12);
    }

    #[test]
    fn sine_mode_energy() {
        // Periodic central differences see sin(2 pi h)/h in place of 2 pi.
        let n = 128;
        let g = Grid::unit(2, n, Boundary::Periodic).unwrap();
        let op = DiffOp::preset("grad", 2, Some(1)).unwrap();
        let u = Field::from_fn(g, 1, |x, o| o[0] = (2.0 * PI * x[0]).sin());
        let e = energy(&Integrand::v_function(2, NFunction::power(2.0)), &op, &u).unwrap();
        let h = 1.0 / n as f64;
        let k = (2.0 * PI * h).sin() / h;
        assert!((e - k * k / 2.0).abs() < 1e-6 * e, "{e}");
        assert!((e - 2.0 * PI * PI).abs() / e < 1e-3);
    }

    #[test]
    fn gradient_is_minus_twice_laplacian() {
        let g = Grid::unit(2, 16, Boundary::Periodic).unwrap();
        let op = DiffOp::preset("grad", 2, Some(1)).unwrap();
        let u = Field::from_fn(g.clone(), 1, |x, o| o[0] = (2.0 * PI * x[0]).sin() * (4.0 * PI * x[1]).cos());
        let gr = energy_grad(&Integrand::squared_norm(2), &op, &u).unwrap();
        let (n, h2) = (16usize, 1.0 / 256.0);
        for idx in 0..g.len() {
            let k = g.multi_index(idx);
            let at = |a: isize, b: isize| {
                let i = (k[0] as isize + a).rem_euclid(n as isize) as usize;
                let j = (k[1] as isize + b).rem_euclid(n as isize) as usize;
                u.at(g.flat_index(&[i, j]))[0]
            };
            // Wide-stencil Laplacian of the central-difference gradient.
            let lap = (at(2, 0) + at(-2, 0) + at(0, 2) + at(0, -2) - 4.0 * at(0, 0)) / (4.0 * h2);
            assert!((gr.at(idx)[0] + 2.0 * lap * h2).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_matches_directional_differences() {
        let g = dirichlet(12);
        let cases = [
            (Integrand::squared_norm(4), "grad"),
            (Integrand::power_norm(4, 4.0).unwrap(), "sym_grad"),
            (Integrand::v_function(4, NFunction::power(3.0)), "dev_sym_grad"),
            (Integrand::v_function(4, NFunction::LLogL), "grad"),
        ];
        for (f, name) in cases {
            let op = DiffOp::preset(name, 2, Some(2)).unwrap();
            let u = random_compact_field(&g, 2, TestFieldSpec { seed: 1, band: 2, amplitude: 1.0 }).unwrap();
            let du = random_compact_field(&g, 2, TestFieldSpec { seed: 2, band: 3, amplitude: 1.0 }).unwrap();
            let gr = energy_grad(&f, &op, &u).unwrap();
            let exact: f64 = gr.values().iter().zip(du.values()).map(|(a, b)| a * b).sum();
            let t = 1e-5;
            let fd = (energy(&f, &op, &u.axpy(t, &du).unwrap()).unwrap() - energy(&f, &op, &u.axpy(-t, &du).unwrap()).unwrap())
                / (2.0 * t);
            assert!((fd - exact).abs() < 1e-5 * exact.abs(), "{name}: {fd} {exact}");
        }
    }

    #[test]
    fn reduction_identity() {
        let g = dirichlet(10);
        let op = DiffOp::preset("sym_grad", 2, None).unwrap();
        let grad = DiffOp::preset("grad", 2, Some(2)).unwrap();
        let f = Integrand::squared_norm(4);
        let gf = reduce(&f, &op).unwrap();
        for seed in 0..5 {
            let u = random_compact_field(&g, 2, TestFieldSpec { seed, band: 3, amplitude: 2.0 }).unwrap();
            let (a, b) = (energy(&gf, &grad, &u).unwrap(), energy(&f, &op, &u).unwrap());
            assert!((a - b).abs() < 1e-12 * a.max(1.0));
        }
    }
}
