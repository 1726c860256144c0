//! Rectangular grids, sampled fields and the discrete operators acting on
//! them.
//!
//! Periodic grids carry `N` nodes per axis at `x = k h`. Dirichlet grids are
//! vertex-centred with `N + 1` nodes per axis including both faces and
//! trapezoid quadrature weights; the outer `width` node layers are pinned.

mod fd;
mod io;
mod rearrange;
mod spectral;
pub mod testfields;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use fd::{apply_op_fd, apply_op_fd_adjoint, jacobian_fd, jacobian_fd_adjoint};
pub use io::{read_field, write_csv, write_field, FieldHeader, FIELD_MAGIC, FIELD_SCHEMA_VERSION};
pub use rearrange::{rearrangement, RearrangedProfile};
pub use spectral::apply_multiplier;

use crate::error::{Error, Result};
use crate::nfunc::NFunction;
use crate::quad::pairwise_sum;

/// Default cap on the number of grid nodes.
pub const DEFAULT_NODE_CAP: usize = 1 << 24;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Periodic,
    DirichletLayer { width: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpec", into = "GridSpec")]
pub struct Grid {
    shape: Vec<usize>,
    extent: Vec<f64>,
    boundary: Boundary,
    counts: Vec<usize>,
    strides: Vec<usize>,
}

/// Serialized grid description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub shape: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extent: Option<Vec<f64>>,
    pub boundary: Boundary,
}

impl TryFrom<GridSpec> for Grid {
    type Error = Error;

    fn try_from(s: GridSpec) -> Result<Self> {
        let extent = s.extent.unwrap_or_else(|| vec![1.0; s.shape.len()]);
        Grid::with_cap(s.shape, extent, s.boundary, DEFAULT_NODE_CAP)
    }
}

impl From<Grid> for GridSpec {
    fn from(g: Grid) -> Self {
        GridSpec { shape: g.shape, extent: Some(g.extent), boundary: g.boundary }
    }
}

impl Grid {
    pub fn new(shape: Vec<usize>, extent: Vec<f64>, boundary: Boundary) -> Result<Self> {
        Self::with_cap(shape, extent, boundary, DEFAULT_NODE_CAP)
    }

    /// `cells^n` grid on the unit cube.
    pub fn unit(n: usize, cells: usize, boundary: Boundary) -> Result<Self> {
        Self::new(vec![cells; n], vec![1.0; n], boundary)
    }

    pub fn with_cap(shape: Vec<usize>, extent: Vec<f64>, boundary: Boundary, cap: usize) -> Result<Self> {
        if shape.is_empty() {
            return Err(Error::Malformed("grid needs at least one axis".into()));
        }
        if extent.len() != shape.len() {
            return Err(Error::DimensionMismatch { expected: shape.len(), got: extent.len() });
        }
        if shape.iter().any(|&s| s == 0) || extent.iter().any(|&e| !(e > 0.0) || !e.is_finite()) {
            return Err(Error::Malformed("grid shape and extent must be positive".into()));
        }
        let extra = match boundary {
            Boundary::Periodic => 0,
            Boundary::DirichletLayer { width } => {
                if width == 0 || shape.iter().any(|&s| 2 * width > s) {
                    return Err(Error::Malformed(format!("Dirichlet layer width {width} does not fit the grid")));
                }
                1
            }
        };
        let counts: Vec<usize> = shape.iter().map(|s| s + extra).collect();
        let total = counts.iter().try_fold(1usize, |acc, &c| acc.checked_mul(c)).unwrap_or(usize::MAX);
        if total > cap {
            return Err(Error::MemoryCap { cells: total, cap });
        }
        let mut strides = vec![1; counts.len()];
        for a in (0..counts.len() - 1).rev() {
            strides[a] = strides[a + 1] * counts[a + 1];
        }
        Ok(Self { shape, extent, boundary, counts, strides })
    }

    pub fn n(&self) -> usize {
        self.shape.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn extent(&self) -> &[f64] {
        &self.extent
    }

    pub fn boundary(&self) -> &Boundary {
        &self.boundary
    }

    pub fn is_periodic(&self) -> bool {
        self.boundary == Boundary::Periodic
    }

    /// Nodes per axis.
    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn h(&self, axis: usize) -> f64 {
        self.extent[axis] / self.shape[axis] as f64
    }

    pub fn spacing(&self) -> Vec<f64> {
        (0..self.n()).map(|a| self.h(a)).collect()
    }

    pub fn min_spacing(&self) -> f64 {
        self.spacing().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Volume of one cell.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().iter().product()
    }

    pub fn volume(&self) -> f64 {
        self.extent.iter().product()
    }

    pub fn multi_index(&self, idx: usize) -> Vec<usize> {
        self.counts.iter().zip(&self.strides).map(|(&c, &s)| (idx / s) % c).collect()
    }

    pub fn flat_index(&self, k: &[usize]) -> usize {
        k.iter().zip(&self.strides).map(|(a, b)| a * b).sum()
    }

    pub fn coords(&self, idx: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.n()];
        self.coords_into(idx, &mut x);
        x
    }

    pub fn coords_into(&self, idx: usize, x: &mut [f64]) {
        for a in 0..self.n() {
            let k = (idx / self.strides[a]) % self.counts[a];
            x[a] = k as f64 * self.h(a);
        }
    }

    /// Per-axis quadrature weight of node `k` (trapezoid on Dirichlet grids).
    pub fn axis_weight(&self, axis: usize, k: usize) -> f64 {
        match self.boundary {
            Boundary::Periodic => 1.0,
            Boundary::DirichletLayer { .. } => {
                if k == 0 || k == self.shape[axis] {
                    0.5
                } else {
                    1.0
                }
            }
        }
    }

    /// Quadrature weights including the cell volume; they sum to the box volume.
    pub fn quadrature_weights(&self) -> Vec<f64> {
        let vol = self.cell_volume();
        (0..self.len())
            .into_par_iter()
            .map(|idx| {
                let mut w = vol;
                for a in 0..self.n() {
                    w *= self.axis_weight(a, (idx / self.strides[a]) % self.counts[a]);
                }
                w
            })
            .collect()
    }

    /// Whether node `idx` lies in the pinned Dirichlet layer.
    pub fn is_pinned(&self, idx: usize) -> bool {
        match self.boundary {
            Boundary::Periodic => false,
            Boundary::DirichletLayer { width } => (0..self.n()).any(|a| {
                let k = (idx / self.strides[a]) % self.counts[a];
                k < width || k > self.shape[a] - width
            }),
        }
    }

    pub fn pinned_mask(&self) -> Vec<bool> {
        (0..self.len()).into_par_iter().map(|i| self.is_pinned(i)).collect()
    }

    /// Neighbour offsets and scale of the difference quotient along `axis`
    /// at axis position `k`: returns `(k_plus, k_minus, 1/(k_plus-k_minus)h)`.
    pub(crate) fn diff_pair(&self, axis: usize, k: usize) -> (usize, usize, f64) {
        let h = self.h(axis);
        let c = self.counts[axis];
        match self.boundary {
            Boundary::Periodic => ((k + 1) % c, (k + c - 1) % c, 0.5 / h),
            Boundary::DirichletLayer { .. } => {
                if k == 0 {
                    (1, 0, 1.0 / h)
                } else if k == c - 1 {
                    (k, k - 1, 1.0 / h)
                } else {
                    (k + 1, k - 1, 0.5 / h)
                }
            }
        }
    }

    /// The same grid with every cell count multiplied by `factor`.
    pub fn refined(&self, factor: usize) -> Result<Grid> {
        let boundary = match self.boundary {
            Boundary::Periodic => Boundary::Periodic,
            Boundary::DirichletLayer { width } => Boundary::DirichletLayer { width: width * factor },
        };
        Grid::new(self.shape.iter().map(|s| s * factor).collect(), self.extent.clone(), boundary)
    }
}

/// Vector-valued samples on a grid, stored node-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: Grid,
    dim: usize,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: Grid, dim: usize) -> Self {
        let len = grid.len() * dim;
        Self { grid, dim, values: vec![0.0; len] }
    }

    pub fn constant(grid: Grid, value: &[f64]) -> Self {
        let values = value.iter().copied().cycle().take(grid.len() * value.len()).collect();
        Self { dim: value.len(), grid, values }
    }

    pub fn from_values(grid: Grid, dim: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() * dim {
            return Err(Error::DimensionMismatch { expected: grid.len() * dim, got: values.len() });
        }
        Ok(Self { grid, dim, values })
    }

    /// Samples `f(x, out)` at every node.
    pub fn from_fn(grid: Grid, dim: usize, f: impl Fn(&[f64], &mut [f64]) + Sync) -> Self {
        let mut values = vec![0.0; grid.len() * dim];
        if dim > 0 {
            values.par_chunks_mut(dim).enumerate().for_each_init(
                || vec![0.0; grid.n()],
                |x, (idx, out)| {
                    grid.coords_into(idx, x);
                    f(x, out);
                },
            );
        }
        Self { grid, dim, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn at(&self, idx: usize) -> &[f64] {
        &self.values[idx * self.dim..(idx + 1) * self.dim]
    }

    /// Euclidean norm of the sample at every node.
    pub fn pointwise_norms(&self) -> Vec<f64> {
        if self.dim == 0 {
            return vec![0.0; self.grid.len()];
        }
        self.values.par_chunks(self.dim).map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt()).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|x| x.is_finite())
    }

    /// `self + alpha * other`.
    pub fn axpy(&self, alpha: f64, other: &Field) -> Result<Field> {
        self.check_compatible(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + alpha * b).collect();
        Ok(Field { grid: self.grid.clone(), dim: self.dim, values })
    }

    pub fn scaled(&self, alpha: f64) -> Field {
        Field { grid: self.grid.clone(), dim: self.dim, values: self.values.iter().map(|x| alpha * x).collect() }
    }

    pub fn check_compatible(&self, other: &Field) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        if self.grid != other.grid {
            return Err(Error::Malformed("fields live on different grids".into()));
        }
        Ok(())
    }

    /// Whether the field vanishes outside `[collar, extent - collar]` along
    /// every axis, up to `tol`.
    pub fn is_supported_inside(&self, collar: f64, tol: f64) -> bool {
        let g = &self.grid;
        (0..g.len()).all(|idx| {
            let x = g.coords(idx);
            let inside = x.iter().zip(g.extent()).all(|(&xi, &e)| xi >= collar - 1e-12 && xi <= e - collar + 1e-12);
            inside || self.at(idx).iter().all(|v| v.abs() <= tol)
        })
    }
}

/// `sum_k w_k phi(|f(x_k)|)` with the grid quadrature weights.
pub fn integrate_phi(phi: &NFunction, f: &Field) -> f64 {
    let w = f.grid.quadrature_weights();
    let norms = f.pointwise_norms();
    let terms: Vec<f64> = norms.par_iter().zip(&w).map(|(&r, &w)| w * phi.value(r)).collect();
    pairwise_sum(&terms)
}

/// `sum_k w_k g(f(x_k))` for an arbitrary pointwise density.
pub fn integrate_with(f: &Field, g: impl Fn(&[f64]) -> f64 + Sync) -> f64 {
    let w = f.grid.quadrature_weights();
    let dim = f.dim;
    let terms: Vec<f64> = (0..f.grid.len()).into_par_iter().map(|i| w[i] * g(&f.values[i * dim..(i + 1) * dim])).collect();
    pairwise_sum(&terms)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_layout() {
        let g = Grid::new(vec![4, 8], vec![1.0, 2.0], Boundary::Periodic).unwrap();
        assert_eq!(g.len(), 32);
        assert_eq!(g.strides(), &[8, 1]);
        assert_eq!(g.multi_index(13), vec![1, 5]);
        assert_eq!(g.coords(13), vec![0.25, 1.25]);
        let d = Grid::unit(2, 4, Boundary::DirichletLayer { width: 1 }).unwrap();
        assert_eq!(d.counts(), &[5, 5]);
        let total: f64 = d.quadrature_weights().iter().sum();
        assert!((total - 1.0).abs() < 1e-15);
        assert!(d.is_pinned(0) && d.is_pinned(4) && !d.is_pinned(6) && d.is_pinned(24));
    }

    #[test]
    fn memory_cap_is_enforced() {
        let e = Grid::with_cap(vec![100, 100], vec![1.0; 2], Boundary::Periodic, 1000);
        assert!(matches!(e, Err(Error::MemoryCap { cells: 10_000, cap: 1000 })));
    }

    #[test]
    fn integrate_constants_and_zero() {
        for b in [Boundary::Periodic, Boundary::DirichletLayer { width: 1 }] {
            let g = Grid::unit(2, 16, b).unwrap();
            let phi = NFunction::power(3.0);
            assert_eq!(integrate_phi(&phi, &Field::zeros(g.clone(), 2)), 0.0);
            let c = Field::constant(g, &[0.6, 0.8]);
            assert!((integrate_phi(&phi, &c) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn integrate_sin_squared() {
        let g = Grid::unit(2, 128, Boundary::Periodic).unwrap();
        let f = Field::from_fn(g, 1, |x, o| o[0] = (std::f64::consts::TAU * x[0]).sin());
        assert!((integrate_phi(&NFunction::power(2.0), &f) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn grid_json() {
        let g: Grid = serde_json::from_str(r#"{"shape":[8,8],"boundary":{"dirichlet_layer":{"width":1}}}"#).unwrap();
        assert_eq!(g.extent(), &[1.0, 1.0]);
        let p: Grid = serde_json::from_str(r#"{"shape":[8],"boundary":"periodic"}"#).unwrap();
        assert!(p.is_periodic());
    }
}
