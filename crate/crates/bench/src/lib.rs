//! Shared fixtures for the benchmarks.

use aqc_core::fieldlab::testfields::{random_compact_field, TestFieldSpec};
use aqc_core::{Boundary, Field, Grid};

/// `cells^2` grid on the unit square.
pub fn square(cells: usize, boundary: Boundary) -> Grid {
    Grid::unit(2, cells, boundary).expect("valid benchmark grid")
}

/// Seeded compactly supported field with `dim` components.
pub fn bump(grid: &Grid, dim: usize, seed: u64) -> Field {
    random_compact_field(grid, dim, TestFieldSpec { seed, band: 3, amplitude: 1.0 }).expect("valid benchmark field")
}
