//! Quantitative quasiconvexity: strong quasiconvexity gaps, the equivalence
//! between `V_phi` and shifted-function formulations, the sandwich lemmas
//! behind it, and the L log L pair used for the Korn-type estimate.

mod aux;
mod comparison;
mod gap;
mod integrand;
mod lipschitz;
mod psi_phi;

pub use aux::{aux_bounds_scan, AuxReport};
pub use comparison::{bregman_v1, comp_lower_bound, comparison_scan, v1, ComparisonBound, ComparisonScan};
pub use gap::{qc_gap, random_z0, v_equivalence, v_equivalence_scan, EquivalenceScan, EquivalenceScanOptions, QCReport};
pub use integrand::{projection_matrix, Integrand, IntegrandSpec};
pub use lipschitz::{lipschitz_bound_check, LipschitzReport};
pub use psi_phi::{build_psi_phi, conjugate_bounds, ConjugateBounds, PairInfo, PsiPhiPair};
