use serde::{Deserialize, Serialize};

use super::{energy, excess_map, minimize, MinimizeOptions};
use crate::error::{Error, Result};
use crate::fieldlab::{apply_op_fd, Field, Grid};
use crate::nfunc::NFunction;
use crate::opsym::{kernel_field_with, DiffOp, KernelProfile, DEFAULT_TOL};
use crate::qcx::Integrand;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct DemoOptions {
    /// Profile of the added kernel field. `None` picks a staircase whose
    /// finest jumps are `cells_per_jump` cells apart.
    pub profile: Option<KernelProfile>,
    pub cells_per_jump: usize,
    pub amplitude: f64,
    /// Reference function of the excess.
    pub phi: NFunction,
    pub m_tilde: f64,
    pub radii_cells: Vec<f64>,
    pub epsilon: f64,
    pub minimize: MinimizeOptions,
}

impl Default for DemoOptions {
    fn default() -> Self {
        Self {
            profile: None,
            cells_per_jump: 8,
            amplitude: 1.0,
            phi: NFunction::power(2.0),
            m_tilde: 10.0,
            radii_cells: vec![2.0, 3.0],
            epsilon: 0.05,
            minimize: MinimizeOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemoReport {
    pub xi: Vec<f64>,
    pub kernel_vector: Vec<f64>,
    pub depth: Option<u32>,
    pub energy_u: f64,
    pub energy_uv: f64,
    pub energy_diff: f64,
    /// Sup norm of `A_h v`.
    pub kernel_residual: f64,
    pub irregular_u: f64,
    pub irregular_uv: f64,
    pub converged: bool,
}

/// Staircase depth whose finest jumps are about `cells_per_jump` cells apart
/// along an axis of `cells` cells.
pub fn staircase_depth(cells: usize, cells_per_jump: usize) -> u32 {
    let ratio = (cells / cells_per_jump.max(1)).max(2);
    ratio.ilog2()
}

/// Minimizes, adds a kernel field of the non-elliptic `op` and compares
/// energies and excess maps of `u` and `u + v`.
pub fn nonelliptic_demo(op: &DiffOp, f: &Integrand, grid: &Grid, boundary: &Field, opts: &DemoOptions) -> Result<DemoReport> {
    let analysis = op.analyze(256, DEFAULT_TOL);
    if analysis.elliptic {
        return Err(Error::NoKernel);
    }
    let w = analysis.witnesses.first().ok_or(Error::NoKernel)?;
    let (profile, depth) = match &opts.profile {
        Some(p) => (p.clone(), None),
        None => {
            let cells = *grid.shape().iter().min().unwrap_or(&1);
            let d = staircase_depth(cells, opts.cells_per_jump);
            (KernelProfile::Staircase { depth: d }, Some(d))
        }
    };
    let kernel: Vec<f64> = w.kernel.iter().map(|x| x * opts.amplitude).collect();
    let v = kernel_field_with(op, &w.xi, &kernel, &profile, grid)?;
    let run = minimize(f, op, grid, boundary, &opts.minimize)?;
    let uv = run.u.axpy(1.0, &v)?;
    let energy_u = energy(f, op, &run.u)?;
    let energy_uv = energy(f, op, &uv)?;
    let kernel_residual = apply_op_fd(op, &v)?.max_abs();
    let eu = excess_map(&run.u, &opts.phi, opts.m_tilde, &opts.radii_cells, opts.epsilon)?;
    let euv = excess_map(&uv, &opts.phi, opts.m_tilde, &opts.radii_cells, opts.epsilon)?;
    Ok(DemoReport {
        xi: w.xi.clone(),
        kernel_vector: kernel,
        depth,
        energy_u,
        energy_uv,
        energy_diff: energy_uv - energy_u,
        kernel_residual,
        irregular_u: eu.irregular_fraction,
        irregular_uv: euv.irregular_fraction,
        converged: run.settled(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fieldlab::Boundary;

    fn setup(cells: usize) -> (DiffOp, Grid, Field) {
        let op = DiffOp::preset("d1", 2, None).unwrap();
        let g = Grid::unit(2, cells, Boundary::DirichletLayer { width: 1 }).unwrap();
        let b = Field::from_fn(g.clone(), 1, |x, o| o[0] = (x[0] + 0.5 * x[1]).sin());
        (op, g, b)
    }

    #[test]
    fn kernel_leaves_energy_alone() {
        let (op, g, b) = setup(32);
        let f = Integrand::squared_norm(1);
        let r = nonelliptic_demo(&op, &f, &g, &b, &DemoOptions::default()).unwrap();
        assert!(r.converged);
        assert!(r.energy_diff.abs() < 1e-10, "{}", r.energy_diff);
        assert_eq!(r.kernel_residual, 0.0);
        assert!(r.irregular_uv > 0.2 && r.irregular_u < r.irregular_uv, "{r:?}");
    }

    #[test]
    fn zero_kernel_changes_nothing() {
        let (op, g, b) = setup(16);
        let opts = DemoOptions { amplitude: 0.0, ..Default::default() };
        let r = nonelliptic_demo(&op, &Integrand::squared_norm(1), &g, &b, &opts).unwrap();
        assert_eq!(r.energy_u, r.energy_uv);
        assert_eq!(r.irregular_u, r.irregular_uv);
    }

    #[test]
    fn elliptic_is_rejected() {
        let op = DiffOp::preset("grad", 2, Some(1)).unwrap();
        let g = Grid::unit(2, 8, Boundary::DirichletLayer { width: 1 }).unwrap();
        let b = Field::zeros(g.clone(), 1);
        assert!(matches!(
            nonelliptic_demo(&op, &Integrand::squared_norm(2), &g, &b, &DemoOptions::default()),
            Err(Error::NoKernel)
        ));
    }

    #[test]
    fn depth_tracks_resolution() {
        assert_eq!(staircase_depth(32, 8), 2);
        assert_eq!(staircase_depth(64, 8), 3);
        assert_eq!(staircase_depth(4, 8), 1);
    }
}
