use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::Integrand;
use crate::error::{Error, Result};
use crate::fieldlab::testfields::{TrigFamily, DEFAULT_COLLAR};
use crate::fieldlab::{apply_op_fd, integrate_phi, integrate_with, Field, Grid};
use crate::ineq::digest;
use crate::nfunc::{v_function, v_gradient, NFunction};
use crate::opsym::DiffOp;

/// Outcome of a strong quasiconvexity gap evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QCReport {
    pub lhs_gap: f64,
    pub rhs_energy: f64,
    /// `lhs_gap / rhs_energy`. Over finitely many test fields this is only an
    /// upper bound for the best constant.
    pub nu_hat: Option<f64>,
    pub z0: Vec<f64>,
    pub m: f64,
    pub test_field_digest: String,
    pub trivial: bool,
}

impl QCReport {
    fn new(lhs: f64, rhs: f64, z0: &[f64], m: f64, digest: String) -> Self {
        let trivial = lhs == 0.0 && rhs == 0.0;
        QCReport {
            lhs_gap: lhs,
            rhs_energy: rhs,
            nu_hat: (rhs > 0.0).then(|| lhs / rhs),
            z0: z0.to_vec(),
            m,
            test_field_digest: digest,
            trivial,
        }
    }
}

fn check_support(zeta: &Field) -> Result<()> {
    let collar = 0.5 * zeta.grid().min_spacing();
    if !zeta.is_supported_inside(collar, 0.0) {
        return Err(Error::NotCompactlySupported(format!("test field must vanish within {collar} of the boundary")));
    }
    Ok(())
}

fn check_z0(op: &DiffOp, z0: &[f64]) -> Result<()> {
    if z0.len() != op.dim_w() {
        return Err(Error::DimensionMismatch { expected: op.dim_w(), got: z0.len() });
    }
    Ok(())
}

/// `int F(z0 + A zeta) - F(z0)` against `int phi_{1+|z0|}(|A zeta|)`.
pub fn qc_gap(f: &Integrand, op: &DiffOp, phi: &NFunction, z0: &[f64], zeta: &Field, m: f64) -> Result<QCReport> {
    check_z0(op, z0)?;
    if f.dim_w() != op.dim_w() {
        return Err(Error::DimensionMismatch { expected: op.dim_w(), got: f.dim_w() });
    }
    check_support(zeta)?;
    let az = apply_op_fd(op, zeta)?;
    let f0 = f.value(z0);
    let lhs = integrate_with(&az, |w| {
        let z: Vec<f64> = z0.iter().zip(w).map(|(a, b)| a + b).collect();
        f.value(&z) - f0
    });
    let norm0 = z0.iter().map(|x| x * x).sum::<f64>().sqrt();
    let rhs = integrate_phi(&phi.shift(1.0 + norm0)?, &az);
    let d = digest(&format!("qc_gap|{}|{phi}|{:?}|{z0:?}", f.name(), op.descriptor()), &[zeta]);
    Ok(QCReport::new(lhs, rhs, z0, m, d))
}

/// `int V_phi(z0 + A zeta) - V_phi(z0)` against `int phi_{1+|z0|}(|A zeta|)`.
///
/// The numerator is accumulated in Bregman form
/// `V(z0+w) - V(z0) - <V'(z0), w>`, which has the same integral because the
/// discrete `A zeta` has zero mean, and is non-negative node by node.
pub fn v_equivalence(phi: &NFunction, op: &DiffOp, z0: &[f64], zeta: &Field) -> Result<QCReport> {
    check_z0(op, z0)?;
    check_support(zeta)?;
    let az = apply_op_fd(op, zeta)?;
    let v0 = v_function(phi, z0);
    let g0 = v_gradient(phi, z0);
    let lhs = integrate_with(&az, |w| {
        let z: Vec<f64> = z0.iter().zip(w).map(|(a, b)| a + b).collect();
        let lin: f64 = g0.iter().zip(w).map(|(a, b)| a * b).sum();
        v_function(phi, &z) - v0 - lin
    });
    let norm0 = z0.iter().map(|x| x * x).sum::<f64>().sqrt();
    let rhs = integrate_phi(&phi.shift(1.0 + norm0)?, &az);
    if rhs == 0.0 && lhs != 0.0 {
        return Err(Error::DegenerateDenominator("shifted energy of A zeta vanishes".into()));
    }
    let d = digest(&format!("v_equivalence|{phi}|{:?}|{z0:?}", op.descriptor()), &[zeta]);
    Ok(QCReport::new(lhs, rhs, z0, norm0, d))
}

/// Parameters of an equivalence scan over a random test-field family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EquivalenceScanOptions {
    pub m: f64,
    pub amplitudes: Vec<f64>,
    pub fields_per_amplitude: usize,
    pub band: usize,
    pub seed: u64,
}

impl Default for EquivalenceScanOptions {
    fn default() -> Self {
        Self { m: 2.0, amplitudes: vec![0.1, 50.0], fields_per_amplitude: 20, band: 2, seed: 0 }
    }
}

/// Observed ratio interval of [`v_equivalence`] over a seeded family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceScan {
    pub r_min: f64,
    pub r_max: f64,
    /// `(amplitude, |z0|, ratio)` per test field.
    pub samples: Vec<(f64, f64, f64)>,
    pub seed: u64,
}

impl EquivalenceScan {
    pub fn spread(&self) -> f64 {
        self.r_max / self.r_min
    }
}

/// Random `z0` with `|z0| <= m`, uniform in norm.
pub fn random_z0(rng: &mut impl Rng, dim: usize, m: f64) -> Vec<f64> {
    let dir: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
    let n = dir.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
    let r = m * rng.random::<f64>();
    dir.iter().map(|x| x * r / n).collect()
}

pub fn v_equivalence_scan(phi: &NFunction, op: &DiffOp, grid: &Grid, opts: &EquivalenceScanOptions) -> Result<EquivalenceScan> {
    let family = TrigFamily::new(grid, op.dim_v(), opts.band, DEFAULT_COLLAR)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut samples = Vec::new();
    for &amp in &opts.amplitudes {
        for _ in 0..opts.fields_per_amplitude {
            let z0 = random_z0(&mut rng, op.dim_w(), opts.m);
            let zeta = family.sample(rng.random(), amp);
            let r = v_equivalence(phi, op, &z0, &zeta)?;
            if let Some(nu) = r.nu_hat {
                samples.push((amp, r.m, nu));
            }
        }
    }
    let r_min = samples.iter().map(|s| s.2).fold(f64::INFINITY, f64::min);
    let r_max = samples.iter().map(|s| s.2).fold(0.0, f64::max);
    Ok(EquivalenceScan { r_min, r_max, samples, seed: opts.seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fieldlab::testfields::{random_compact_field, TestFieldSpec};
    use crate::fieldlab::Boundary;

    fn setup() -> (DiffOp, Grid) {
        (DiffOp::preset("grad", 2, Some(2)).unwrap(), Grid::unit(2, 32, Boundary::DirichletLayer { width: 1 }).unwrap())
    }

    #[test]
    fn quadratic_gap_is_dirichlet_energy() {
        let (op, g) = setup();
        let zeta = random_compact_field(&g, 2, TestFieldSpec { seed: 4, band: 2, amplitude: 1.0 }).unwrap();
        let f = Integrand::squared_norm(4);
        let z0 = [0.3, -1.0, 2.0, 0.5];
        let r = qc_gap(&f, &op, &NFunction::power(2.0), &z0, &zeta, 3.0).unwrap();
        let az = apply_op_fd(&op, &zeta).unwrap();
        let dir = integrate_phi(&NFunction::power(2.0), &az);
        assert!((r.lhs_gap - dir).abs() < 1e-10 * dir, "{} {}", r.lhs_gap, dir);
        // phi = t^2 shifts to itself.
        assert!((r.nu_hat.unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn zero_field_is_trivial() {
        let (op, g) = setup();
        let zeta = Field::zeros(g, 2);
        let r = qc_gap(&Integrand::squared_norm(4), &op, &NFunction::power(2.0), &[0.0; 4], &zeta, 1.0).unwrap();
        assert!(r.trivial && r.nu_hat.is_none());
        let r = v_equivalence(&NFunction::power(3.0), &op, &[1.0, 0.0, 0.0, 0.0], &zeta).unwrap();
        assert!(r.trivial);
    }

    #[test]
    fn rejects_uncompact_fields() {
        let (op, g) = setup();
        let zeta = Field::constant(g, &[1.0, 0.0]);
        assert!(matches!(
            qc_gap(&Integrand::squared_norm(4), &op, &NFunction::power(2.0), &[0.0; 4], &zeta, 1.0),
            Err(Error::NotCompactlySupported(_))
        ));
    }

    #[test]
    fn v_of_square_matches_identity() {
        let (op, g) = setup();
        let zeta = random_compact_field(&g, 2, TestFieldSpec { seed: 9, band: 2, amplitude: 3.0 }).unwrap();
        let r = v_equivalence(&NFunction::power(2.0), &op, &[0.0; 4], &zeta).unwrap();
        let az = apply_op_fd(&op, &zeta).unwrap();
        let dir = integrate_phi(&NFunction::power(2.0), &az);
        assert!((r.lhs_gap - dir).abs() < 1e-10 * dir);
        assert!((r.nu_hat.unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn cubic_scan_is_two_sided() {
        let (op, g) = setup();
        let opts = EquivalenceScanOptions { fields_per_amplitude: 4, ..Default::default() };
        let s = v_equivalence_scan(&NFunction::power(3.0), &op, &g, &opts).unwrap();
        assert_eq!(s.samples.len(), 8);
        assert!(s.r_min > 0.0 && s.spread() < 1e3, "{s:?}");
    }
}
