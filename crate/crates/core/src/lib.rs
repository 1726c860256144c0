//! Computational toolkit for Orlicz-growth variational problems driven by
//! first-order differential operators.
//!
//! * [`nfunc`]: Young/N-functions, shifts, conjugates, doubling constants.
//! * [`opsym`]: operator symbols, ellipticity, essential range, multipliers.
//! * [`fieldlab`]: grids, fields, finite differences, spectral multipliers,
//!   Orlicz energies and rearrangements.
//! * [`ineq`]: Korn, Poincaré, Hardy and rearrangement inequality checks.
//! * [`qcx`]: quasiconvexity gaps, V-function equivalences, the L log L
//!   Young pair construction.
//! * [`varmin`]: discrete energies, a quasi-Newton minimizer and excess maps.

pub mod error;
pub mod fieldlab;
pub mod ineq;
pub mod nfunc;
pub mod opsym;
pub mod qcx;
pub mod quad;
pub mod varmin;

pub use error::{Error, Result};
pub use fieldlab::{Boundary, Field, Grid};
pub use nfunc::NFunction;
pub use opsym::{DiffOp, Multiplier};
pub use qcx::Integrand;
