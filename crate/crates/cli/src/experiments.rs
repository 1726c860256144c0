//! The experiments behind each subcommand.

use anyhow::{bail, Context, Result};
use aqc_core::fieldlab::testfields::{random_compact_field, TestFieldSpec};
use aqc_core::fieldlab::{read_field, Field, Grid};
use aqc_core::ineq::{
    bagby_check, hardy_check, korn_ratio, korn_search, poincare_ratio, staircase_field, HardyOptions, KornSearchOptions,
};
use aqc_core::nfunc::NFunction;
use aqc_core::opsym::{DEFAULT_SPHERE_SAMPLES, DEFAULT_TOL};
use aqc_core::qcx::{build_psi_phi, comparison_scan, v_equivalence_scan, EquivalenceScanOptions, Integrand, IntegrandSpec};
use aqc_core::varmin::{
    coercivity_probe, excess_map, minimize, nonelliptic_demo, DemoOptions, MinimizeOptions, MinimizeResult,
};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{BoundarySpec, Experiment, ExperimentConfig};
use crate::report::{Outcome, Table};

pub fn run(experiment: Experiment, cfg: &ExperimentConfig) -> Result<Outcome> {
    match experiment {
        Experiment::OpCheck => op_check(cfg),
        Experiment::Korn => korn(cfg),
        Experiment::Poincare => poincare(cfg),
        Experiment::Hardy => hardy(cfg),
        Experiment::Bagby => bagby(cfg),
        Experiment::QcScan => qc_scan(cfg),
        Experiment::Minimize => minimize_run(cfg),
        Experiment::NonellipticDemo => demo(cfg),
        Experiment::Excess => excess(cfg),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct OpCheckParams {
    sphere_samples: usize,
    tol: f64,
    /// Expected classification; the check holds when it matches.
    expect_elliptic: bool,
}

impl Default for OpCheckParams {
    fn default() -> Self {
        Self { sphere_samples: DEFAULT_SPHERE_SAMPLES, tol: DEFAULT_TOL, expect_elliptic: true }
    }
}

fn op_check(cfg: &ExperimentConfig) -> Result<Outcome> {
    let p: OpCheckParams = cfg.params()?;
    let op = cfg.operator()?;
    let a = op.analyze(p.sphere_samples, p.tol);
    let mut out = Outcome { holds: a.elliptic == p.expect_elliptic, ..Default::default() };
    out.put("operator", op.descriptor())?;
    out.put("elliptic", a.elliptic)?;
    out.put("min_singular_on_sphere", a.min_singular_on_sphere)?;
    out.put("max_singular_on_sphere", a.max_singular_on_sphere)?;
    out.put("constant_rank", a.constant_rank)?;
    out.put("rank_profile", &a.rank_profile)?;
    out.put("essential_range_dim", op.essential_range().ncols())?;
    out.put("projection_norm", op.projection_norm())?;
    out.put("witnesses", &a.witnesses)?;
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct KornParams {
    /// Functions to sweep; defaults to the configured `nfunction`.
    psi_sweep: Vec<NFunction>,
    search: KornSearchOptions,
    /// Dyadic levels of the staircase fields used for non-elliptic operators.
    staircase_depths: Vec<u32>,
    /// Largest last-to-first staircase ratio still read as bounded.
    staircase_growth_max: f64,
}

impl Default for KornParams {
    fn default() -> Self {
        Self {
            psi_sweep: Vec::new(),
            search: KornSearchOptions::default(),
            staircase_depths: vec![2, 3, 4, 5],
            staircase_growth_max: 1.5,
        }
    }
}

fn korn(cfg: &ExperimentConfig) -> Result<Outcome> {
    let mut p: KornParams = cfg.params()?;
    let op = cfg.operator()?;
    let grid = cfg.grid()?;
    let sweep = if p.psi_sweep.is_empty() { vec![cfg.nfunction_or(NFunction::power(2.0))] } else { p.psi_sweep.clone() };
    let mut out = Outcome::default();
    if op.analyze_default().elliptic {
        p.search.seed = cfg.seed;
        let mut table = Table::new(&["index", "lhs", "rhs", "fitted_constant"]);
        let mut constants = Vec::new();
        out.holds = true;
        for (i, psi) in sweep.iter().enumerate() {
            let r = korn_search(psi, &op, &grid, &p.search)?;
            table.push(vec![i as f64, r.lhs, r.rhs, r.fitted_constant]);
            constants.push(json!({ "psi": psi, "fitted_constant": r.fitted_constant, "holds": r.holds }));
            out.holds &= r.holds;
        }
        out.put("mode", "search")?;
        out.put("sweep", constants)?;
        out.tables.insert("korn_sweep".into(), table);
    } else {
        if grid.n() != 2 {
            bail!("the staircase construction needs a two-dimensional grid");
        }
        let psi = &sweep[0];
        let mut table = Table::new(&["depth", "lhs", "rhs", "ratio"]);
        for &d in &p.staircase_depths {
            let u = staircase_field(&grid, d, 1.0)?;
            let r = korn_ratio(psi, &op, &u)?;
            table.push(vec![d as f64, r.lhs, r.rhs, r.ratio.unwrap_or(f64::NAN)]);
        }
        let ratios: Vec<f64> = table.rows.iter().map(|r| r[3]).collect();
        let growth = match (ratios.first(), ratios.last()) {
            (Some(a), Some(b)) => b / a,
            _ => 1.0,
        };
        out.holds = growth.is_finite() && growth <= p.staircase_growth_max;
        out.put("mode", "staircase")?;
        out.put("psi", psi)?;
        out.put("ratios", &ratios)?;
        out.put("growth", growth)?;
        out.tables.insert("korn_staircase".into(), table);
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FieldFamily {
    fields: usize,
    band: usize,
    amplitude: f64,
}

impl Default for FieldFamily {
    fn default() -> Self {
        Self { fields: 8, band: 2, amplitude: 1.0 }
    }
}

fn sample_fields(grid: &Grid, dim: usize, fam: &FieldFamily, seed: u64) -> Result<Vec<Field>> {
    (0..fam.fields as u64)
        .map(|k| {
            let spec = TestFieldSpec { seed: seed.wrapping_mul(1_000_003).wrapping_add(k), band: fam.band, amplitude: fam.amplitude };
            Ok(random_compact_field(grid, dim, spec)?)
        })
        .collect()
}

fn poincare(cfg: &ExperimentConfig) -> Result<Outcome> {
    let fam: FieldFamily = cfg.params()?;
    let op = cfg.operator()?;
    let grid = cfg.grid()?;
    let phi = cfg.nfunction_or(NFunction::power(2.0));
    let mut table = Table::new(&["field", "lhs", "rhs", "ratio"]);
    let mut worst: f64 = 0.0;
    for (k, u) in sample_fields(&grid, op.dim_v(), &fam, cfg.seed)?.iter().enumerate() {
        let r = poincare_ratio(&phi, &op, u)?;
        let ratio = r.ratio.unwrap_or(0.0);
        worst = worst.max(ratio);
        table.push(vec![k as f64, r.lhs, r.rhs, ratio]);
    }
    let mut out = Outcome { holds: worst.is_finite(), ..Default::default() };
    out.put("phi", &phi)?;
    out.put("fitted_constant", worst)?;
    out.tables.insert("poincare".into(), table);
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PairParams {
    m: f64,
    #[serde(default)]
    z0_norm: f64,
    #[serde(default = "unit")]
    pi_norm: f64,
}

fn unit() -> f64 {
    1.0
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct HardyParams {
    /// Second function; defaults to the configured `nfunction`.
    psi: Option<NFunction>,
    /// Use the constructed pair instead of `nfunction`/`psi`.
    build_pair: Option<PairParams>,
    options: HardyOptions,
}

fn hardy(cfg: &ExperimentConfig) -> Result<Outcome> {
    let p: HardyParams = cfg.params()?;
    let mut out = Outcome::default();
    let (phi, psi) = match &p.build_pair {
        Some(pp) => {
            let pair = build_psi_phi(pp.m, pp.z0_norm, pp.pi_norm)?;
            out.put("pair", &pair.info)?;
            (pair.phi, pair.psi)
        }
        None => {
            let phi = cfg.nfunction.clone().context("hardy needs 'nfunction' or params.build_pair")?;
            let psi = p.psi.clone().unwrap_or_else(|| phi.clone());
            (phi, psi)
        }
    };
    let r = hardy_check(&phi, &psi, &p.options)?;
    out.holds = r.holds;
    out.put_inequality("hardy", r)?;
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct BagbyParams {
    axis: usize,
    family: FieldFamily,
    /// Allowed relative deviation of each constant from their mean.
    stability: f64,
}

impl Default for BagbyParams {
    fn default() -> Self {
        Self { axis: 0, family: FieldFamily { fields: 3, band: 4, amplitude: 1.0 }, stability: 0.2 }
    }
}

fn bagby(cfg: &ExperimentConfig) -> Result<Outcome> {
    let p: BagbyParams = cfg.params()?;
    let op = cfg.operator()?;
    let grid = cfg.grid()?;
    let m = op.multiplier(p.axis)?;
    let mut constants = Vec::new();
    let mut out = Outcome::default();
    for (k, f) in sample_fields(&grid, m.cols(), &p.family, cfg.seed)?.iter().enumerate() {
        let r = bagby_check(&m, f)?;
        if k == 0 {
            let c = r.fitted_constant;
            let mut t = Table::new(&["t", "g_star", "c_rhs"]);
            for row in r.tables.get("profile").into_iter().flatten() {
                t.push(vec![row.param, row.lhs, c * row.rhs]);
            }
            out.tables.insert("bagby_profile".into(), t);
        }
        constants.push(r.fitted_constant);
    }
    let mean = constants.iter().sum::<f64>() / constants.len().max(1) as f64;
    let spread = constants.iter().map(|c| (c / mean - 1.0).abs()).fold(0.0, f64::max);
    out.holds = !constants.is_empty() && constants.iter().all(|c| c.is_finite()) && spread <= p.stability;
    out.put("constants", &constants)?;
    out.put("mean", mean)?;
    out.put("max_relative_deviation", spread)?;
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct QcScanParams {
    scan: EquivalenceScanOptions,
    max_spread: f64,
    comparison_samples: usize,
    comparison_radius: f64,
}

impl Default for QcScanParams {
    fn default() -> Self {
        Self { scan: EquivalenceScanOptions::default(), max_spread: 1e3, comparison_samples: 100_000, comparison_radius: 1e3 }
    }
}

fn qc_scan(cfg: &ExperimentConfig) -> Result<Outcome> {
    let mut p: QcScanParams = cfg.params()?;
    p.scan.seed = cfg.seed;
    let op = cfg.operator()?;
    let grid = cfg.grid()?;
    let phi = cfg.nfunction_or(NFunction::power(2.0));
    let s = v_equivalence_scan(&phi, &op, &grid, &p.scan)?;
    let c = comparison_scan(op.dim_w(), p.comparison_samples, p.comparison_radius, cfg.seed);
    let mut t = Table::new(&["amplitude", "z0_norm", "ratio"]);
    for &(a, m, r) in &s.samples {
        t.push(vec![a, m, r]);
    }
    let spread = s.spread();
    let mut out = Outcome { holds: spread.is_finite() && spread < p.max_spread && c.violations == 0, ..Default::default() };
    out.put("phi", &phi)?;
    out.put("r_min", s.r_min)?;
    out.put("r_max", s.r_max)?;
    out.put("spread", spread)?;
    out.put("comparison", &c)?;
    out.tables.insert("equivalence".into(), t);
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct MinimizeParams {
    integrand: IntegrandSpec,
    boundary: BoundarySpec,
    options: MinimizeOptions,
    /// Scales of a coercivity probe around the boundary data; empty skips it.
    coercivity_scales: Vec<f64>,
}

impl Default for MinimizeParams {
    fn default() -> Self {
        Self {
            integrand: IntegrandSpec::SquaredNorm,
            boundary: BoundarySpec::default(),
            options: MinimizeOptions::default(),
            coercivity_scales: Vec::new(),
        }
    }
}

fn put_run(out: &mut Outcome, r: &MinimizeResult) -> Result<()> {
    let mut t = Table::new(&["iter", "energy", "grad_norm", "step"]);
    for row in &r.trace {
        t.push(vec![row.iter as f64, row.energy, row.grad_norm, row.step]);
    }
    out.tables.insert("trace".into(), t);
    out.put("energy", r.energy())?;
    out.put("grad_norm", r.grad_norm())?;
    out.put("iterations", r.trace.len() - 1)?;
    out.put("converged", r.converged)?;
    out.put("stagnated", r.stagnated)?;
    out.put("at_floor", r.at_floor)?;
    out.put("monotone", r.monotone())?;
    Ok(())
}

fn minimize_run(cfg: &ExperimentConfig) -> Result<Outcome> {
    let mut p: MinimizeParams = cfg.params()?;
    p.options.seed = cfg.seed;
    let op = cfg.operator()?;
    let grid = cfg.grid()?;
    let f = Integrand::from_spec(&p.integrand, op.dim_w())?;
    let b = p.boundary.field(cfg, &grid, op.dim_v())?;
    let r = minimize(&f, &op, &grid, &b, &p.options)?;
    let mut out = Outcome { holds: r.settled() && r.monotone(), ..Default::default() };
    out.put("integrand", f.name())?;
    put_run(&mut out, &r)?;
    if !p.coercivity_scales.is_empty() {
        let c = coercivity_probe(&f, &op, &grid, &b, &p.coercivity_scales, cfg.seed)?;
        let mut t = Table::new(&["lambda", "energy", "i_term", "ii_term"]);
        for row in &c.rows {
            t.push(vec![row.lambda, row.energy, row.i_term, row.ii_term]);
        }
        out.tables.insert("coercivity".into(), t);
        out.holds &= c.diverges && c.split_holds;
        out.put("coercivity", json!({ "fitted_exponent": c.fitted_exponent, "diverges": c.diverges, "split_holds": c.split_holds }))?;
    }
    out.fields.push(("u".into(), r.u));
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct DemoParams {
    integrand: IntegrandSpec,
    boundary: BoundarySpec,
    options: DemoOptions,
    energy_tol: f64,
    irregular_min: f64,
}

impl Default for DemoParams {
    fn default() -> Self {
        Self {
            integrand: IntegrandSpec::SquaredNorm,
            boundary: BoundarySpec::default(),
            options: DemoOptions::default(),
            energy_tol: 1e-10,
            irregular_min: 0.2,
        }
    }
}

fn demo(cfg: &ExperimentConfig) -> Result<Outcome> {
    let mut p: DemoParams = cfg.params()?;
    p.options.minimize.seed = cfg.seed;
    let op = cfg.operator()?;
    let grid = cfg.grid()?;
    let f = Integrand::from_spec(&p.integrand, op.dim_w())?;
    let b = p.boundary.field(cfg, &grid, op.dim_v())?;
    let r = nonelliptic_demo(&op, &f, &grid, &b, &p.options)?;
    let holds = r.converged && r.energy_diff.abs() < p.energy_tol && r.irregular_uv > p.irregular_min;
    let mut out = Outcome { holds, ..Default::default() };
    out.put("demo", &r)?;
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ExcessParams {
    integrand: IntegrandSpec,
    boundary: BoundarySpec,
    options: MinimizeOptions,
    /// Reference function of the excess.
    phi: NFunction,
    m_tilde: f64,
    radii_cells: Vec<f64>,
    epsilon: f64,
    /// Number of grid halvings after the configured grid; a Dirichlet layer
    /// keeps its physical thickness.
    refinements: usize,
    /// Analyze a stored field instead of minimizing.
    field: Option<std::path::PathBuf>,
    /// Upper bound on the irregular fraction on the finest grid.
    max_irregular: Option<f64>,
}

impl Default for ExcessParams {
    fn default() -> Self {
        Self {
            integrand: IntegrandSpec::SquaredNorm,
            boundary: BoundarySpec::default(),
            options: MinimizeOptions::default(),
            phi: NFunction::power(2.0),
            m_tilde: 100.0,
            radii_cells: vec![2.0],
            epsilon: 0.5,
            refinements: 1,
            field: None,
            max_irregular: None,
        }
    }
}

fn excess(cfg: &ExperimentConfig) -> Result<Outcome> {
    let mut p: ExcessParams = cfg.params()?;
    p.options.seed = cfg.seed;
    let mut out = Outcome::default();
    let mut table = Table::new(&["cells", "irregular_fraction", "energy"]);
    let mut fractions = Vec::new();
    if let Some(path) = &p.field {
        let u = read_field(cfg.resolve(path))?;
        let m = excess_map(&u, &p.phi, p.m_tilde, &p.radii_cells, p.epsilon)?;
        table.push(vec![u.grid().shape()[0] as f64, m.irregular_fraction, f64::NAN]);
        fractions.push(m.irregular_fraction);
        out.holds = true;
    } else {
        let op = cfg.operator()?;
        let f = Integrand::from_spec(&p.integrand, op.dim_w())?;
        let mut grid = cfg.grid()?;
        for level in 0..=p.refinements {
            if level > 0 {
                grid = grid.refined(2)?;
            }
            let b = p.boundary.field(cfg, &grid, op.dim_v())?;
            let r = minimize(&f, &op, &grid, &b, &p.options)?;
            let m = excess_map(&r.u, &p.phi, p.m_tilde, &p.radii_cells, p.epsilon)?;
            table.push(vec![grid.shape()[0] as f64, m.irregular_fraction, r.energy()]);
            fractions.push(m.irregular_fraction);
            if level == p.refinements {
                out.fields.push(("u".into(), r.u));
            }
        }
        out.holds = fractions.windows(2).all(|w| w[1] < w[0]);
    }
    if let Some(max) = p.max_irregular {
        out.holds &= fractions.last().is_some_and(|&f| f <= max);
    }
    out.put("irregular_fractions", &fractions)?;
    out.put("epsilon", p.epsilon)?;
    out.put("m_tilde", p.m_tilde)?;
    out.put("radii_cells", &p.radii_cells)?;
    out.tables.insert("excess".into(), table);
    Ok(out)
}
