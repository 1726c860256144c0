use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{digest, InequalityReport};
use crate::error::{Error, Result};
use crate::fieldlab::testfields::{window, TrigFamily, DEFAULT_COLLAR};
use crate::fieldlab::{apply_op_fd, integrate_phi, jacobian_fd, Field, Grid};
use crate::nfunc::NFunction;
use crate::opsym::DiffOp;
use crate::quad::pairwise_sum;

/// `int psi(|grad u|)` against `int psi(|A u|)`.
pub fn korn_ratio(psi: &NFunction, op: &DiffOp, u: &Field) -> Result<InequalityReport> {
    let au = apply_op_fd(op, u)?;
    let lhs = integrate_phi(psi, &jacobian_fd(u));
    let rhs = integrate_phi(psi, &au);
    if rhs == 0.0 && lhs > 0.0 {
        return Err(Error::DegenerateDenominator(format!("int psi(|A u|) vanishes for {op} while int psi(|grad u|) = {lhs}")));
    }
    Ok(InequalityReport::from_sides(lhs, rhs, digest(&format!("korn_ratio|{psi}|{:?}", op.descriptor()), &[u])))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KornSearchOptions {
    /// Total number of ratio evaluations across all restarts.
    pub budget: usize,
    pub restarts: usize,
    /// Highest trigonometric frequency per axis.
    pub band: usize,
    pub collar: f64,
    /// Sup norm of the starting fields.
    pub amplitude: f64,
    pub seed: u64,
}

impl Default for KornSearchOptions {
    fn default() -> Self {
        Self { budget: 2000, restarts: 4, band: 2, collar: DEFAULT_COLLAR, amplitude: 1.0, seed: 0 }
    }
}

/// Precomputed discrete Jacobians of the family's basis fields.
struct RatioModel<'a> {
    psi: &'a NFunction,
    proj: nalgebra::DMatrix<f64>,
    basis_jac: Vec<Vec<f64>>,
    weights: Vec<f64>,
    width: usize,
}

impl RatioModel<'_> {
    fn sides(&self, c: &[f64]) -> (f64, f64) {
        let (w, p) = (self.width, &self.proj);
        let (lhs, rhs): (Vec<f64>, Vec<f64>) = (0..self.weights.len())
            .into_par_iter()
            .map(|node| {
                let mut jac = vec![0.0; w];
                for (ck, bj) in c.iter().zip(&self.basis_jac) {
                    if *ck != 0.0 {
                        for (slot, b) in jac.iter_mut().zip(&bj[node * w..(node + 1) * w]) {
                            *slot += ck * b;
                        }
                    }
                }
                let jn = jac.iter().map(|x| x * x).sum::<f64>().sqrt();
                let an = (0..p.nrows())
                    .map(|r| {
                        let v: f64 = (0..w).map(|k| p[(r, k)] * jac[k]).sum();
                        v * v
                    })
                    .sum::<f64>()
                    .sqrt();
                let wt = self.weights[node];
                (wt * self.psi.value(jn), wt * self.psi.value(an))
            })
            .unzip();
        (pairwise_sum(&lhs), pairwise_sum(&rhs))
    }

    fn ratio(&self, c: &[f64]) -> f64 {
        let (l, r) = self.sides(c);
        if r > 0.0 {
            l / r
        } else {
            0.0
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Maximizes the Korn ratio over a band-limited, compactly supported field
/// family with random restarts and finite-difference gradient ascent on a
/// sphere of coefficient vectors.
pub fn korn_search(psi: &NFunction, op: &DiffOp, grid: &Grid, opts: &KornSearchOptions) -> Result<InequalityReport> {
    let analysis = op.analyze(1024, crate::opsym::DEFAULT_TOL);
    if !analysis.elliptic {
        let xi = analysis.witnesses.first().map(|w| w.xi.clone()).unwrap_or_default();
        return Err(Error::SingularSymbol { xi });
    }
    if grid.n() != op.n() {
        return Err(Error::DimensionMismatch { expected: op.n(), got: grid.n() });
    }
    let family = TrigFamily::new(grid, op.dim_v(), opts.band, opts.collar)?;
    let k = family.num_coeffs();
    let basis_jac: Vec<Vec<f64>> = (0..k)
        .into_par_iter()
        .map(|i| {
            let mut e = vec![0.0; k];
            e[i] = 1.0;
            jacobian_fd(&family.synthesize(&e)).into_values()
        })
        .collect();
    let model = RatioModel {
        psi,
        proj: op.projection_pi(),
        basis_jac,
        weights: grid.quadrature_weights(),
        width: op.dim_v() * op.n(),
    };
    let restarts = opts.restarts.max(1);
    let per_restart = (opts.budget / restarts).max(2);
    let results: Vec<(f64, Vec<f64>, usize)> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            let restart_seed = (0..=r).map(|_| rng.random::<u64>()).last().unwrap_or_default();
            ascend(&model, &family, restart_seed, opts.amplitude, per_restart)
        })
        .collect();
    let (best_idx, _) = results
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, r)| if r.0 > acc.1 { (i, r.0) } else { acc });
    let (best, coeffs, _) = &results[best_idx];
    let (lhs, rhs) = model.sides(coeffs);
    let best_field = family.synthesize(coeffs);
    let mut report = InequalityReport::from_sides(
        lhs,
        rhs,
        digest(&format!("korn_search|{psi}|{:?}|{opts:?}", op.descriptor()), &[&best_field]),
    );
    report.fitted_constant = *best;
    report.holds = best.is_finite();
    report.constants.insert("evaluations".into(), results.iter().map(|r| r.2).sum::<usize>() as f64);
    report.constants.insert("restarts".into(), restarts as f64);
    for (i, r) in results.iter().enumerate() {
        report.constants.insert(format!("restart_{i}"), r.0);
    }
    report.notes.push("fitted constant is the best ratio found, a lower bound for the optimal constant".into());
    Ok(report)
}

fn ascend(model: &RatioModel<'_>, family: &TrigFamily, seed: u64, amplitude: f64, budget: usize) -> (f64, Vec<f64>, usize) {
    let mut c = family.random_coeffs(seed);
    let sup = family.synthesize(&c).max_abs();
    if sup > 0.0 {
        c.iter_mut().for_each(|x| *x *= amplitude / sup);
    }
    let radius = norm(&c);
    let mut best = model.ratio(&c);
    let mut evals = 1;
    let mut step = 0.5;
    let k = c.len();
    while evals + k + 1 <= budget && step > 1e-10 {
        let delta = 1e-6 * radius;
        let mut grad: Vec<f64> = (0..k)
            .map(|i| {
                let mut cp = c.clone();
                cp[i] += delta;
                (model.ratio(&cp) - best) / delta
            })
            .collect();
        evals += k;
        let radial = grad.iter().zip(&c).map(|(g, x)| g * x).sum::<f64>() / (radius * radius);
        grad.iter_mut().zip(&c).for_each(|(g, x)| *g -= radial * x);
        let gn = norm(&grad);
        if !(gn > 0.0) {
            break;
        }
        loop {
            let mut trial: Vec<f64> = c.iter().zip(&grad).map(|(x, g)| x + step * radius * g / gn).collect();
            let tn = norm(&trial);
            trial.iter_mut().for_each(|x| *x *= radius / tn);
            let r = model.ratio(&trial);
            evals += 1;
            if r > best {
                best = r;
                c = trial;
                step *= 1.5;
                break;
            }
            step *= 0.5;
            if step <= 1e-10 || evals >= budget {
                break;
            }
        }
    }
    (best, c, evals)
}

/// `u(x) = amplitude * g(x_2) * w(x_1)` with `g(s) = floor(2^depth s) mod 2`
/// the square wave on the dyadic level `depth` and `w` the smooth window.
pub fn staircase_field(grid: &Grid, depth: u32, amplitude: f64) -> Result<Field> {
    if grid.n() < 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: grid.n() });
    }
    let scale = 2f64.powi(depth as i32);
    let e0 = grid.extent()[0];
    let e1 = grid.extent()[1];
    Ok(Field::from_fn(grid.clone(), 1, |x, o| {
        let g = (scale * x[1] / e1).floor().rem_euclid(2.0);
        o[0] = amplitude * g * window(&x[..1], &[e0], DEFAULT_COLLAR);
    }))
}
