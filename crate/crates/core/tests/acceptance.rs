//! Acceptance suite: one PASS/FAIL line per criterion, with tolerances and
//! runtime limits pinned below. Exits non-zero if any criterion fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use aqc_core::fieldlab::testfields::{random_compact_field, TestFieldSpec};
use aqc_core::fieldlab::{integrate_phi, rearrangement, Boundary, Field, Grid};
use aqc_core::ineq::{
    bagby_check, hardy_check, korn_ratio, korn_search, loglog_sweep, staircase_field, HardyOptions, KornSearchOptions,
};
use aqc_core::nfunc::{delta2_estimate, nabla2_estimate, Bound, NFunction, DEFAULT_RANGE, DEFAULT_SAMPLES};
use aqc_core::opsym::DiffOp;
use aqc_core::qcx::{build_psi_phi, comparison_scan, v_equivalence_scan, EquivalenceScanOptions, Integrand};
use aqc_core::varmin::{energy, excess_map, minimize, nonelliptic_demo, reduce, DemoOptions, MinimizeOptions};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| lo * (hi / lo).powf(k as f64 / (n - 1) as f64)).collect()
}

fn e<E: std::fmt::Debug>(err: E) -> String {
    format!("{err:?}")
}

const BICONJ_TOL: f64 = 1e-6;
const PAIR_TOL: f64 = 1e-8;
const LLOGL_DELTA2_TOL: f64 = 1e-3;

fn nfunction_calculus() -> Outcome {
    let mut worst: f64 = 0.0;
    for p in [2.0, 3.0] {
        let psi = NFunction::power_normalized(p);
        let bi = psi.numeric_conjugate().map_err(e)?.numeric_conjugate().map_err(e)?;
        for t in log_grid(1e-3, 1e3, 61) {
            let r = rel(bi.value(t), psi.value(t));
            worst = worst.max(r);
            check(r <= BICONJ_TOL, || format!("biconjugate of t^{p}/{p} off by {r:e} at {t}"))?;
        }
    }
    let ent = NFunction::ExpConjugate.numeric_conjugate().map_err(e)?;
    let closed = NFunction::ExpConjugate.conjugate().map_err(e)?;
    let mut pair: f64 = 0.0;
    for t in log_grid(1e-3, 1e3, 100) {
        let want = NFunction::Entropy.value(t);
        pair = pair.max(rel(ent.value(t), want)).max(rel(closed.value(t), want));
    }
    check(pair <= PAIR_TOL, || format!("exponential/entropy pair off by {pair:e}"))?;
    for p in [1.5, 2.0, 3.0, 4.0] {
        let c = delta2_estimate(&NFunction::power(p), DEFAULT_RANGE, 2000).map_err(e)?.constant;
        let want = 2f64.powf(p);
        check(c.value().is_some_and(|v| rel(v, want) <= 1e-14), || format!("delta2(t^{p}) = {c:?}, want {want}"))?;
    }
    let d = delta2_estimate(&NFunction::LLogL, DEFAULT_RANGE, DEFAULT_SAMPLES).map_err(e)?.constant;
    check(d.value().is_some_and(|v| (v - 4.0).abs() <= LLOGL_DELTA2_TOL), || format!("delta2(t log(1+t)) = {d:?}"))?;
    let n = nabla2_estimate(&NFunction::LLogL, DEFAULT_RANGE, 2000).map_err(e)?.constant;
    check(n == Bound::Unbounded, || format!("nabla2(t log(1+t)) = {n:?}, want unbounded"))?;
    Ok(format!("biconjugation err {worst:.1e}, pair err {pair:.1e}, delta2(llogl) {:.5}", d.value().unwrap()))
}

fn min_singular_scan(op: &DiffOp, samples: usize) -> f64 {
    (0..samples)
        .map(|k| {
            let th = std::f64::consts::PI * k as f64 / samples as f64;
            let s = op.symbol(&[th.cos(), th.sin()]).unwrap();
            s.singular_values().min()
        })
        .fold(f64::INFINITY, f64::min)
}

fn symbol_analysis() -> Outcome {
    let mut summary = Vec::new();
    for (name, sigma) in [("grad", Some(1.0)), ("sym_grad", Some(0.5f64.sqrt())), ("dev_sym_grad", None)] {
        let op = DiffOp::preset(name, 2, None).map_err(e)?;
        let a = op.analyze_default();
        check(a.elliptic && a.constant_rank, || format!("{name} not elliptic with constant rank: {a:?}"))?;
        let want = sigma.unwrap_or_else(|| min_singular_scan(&op, 20_000));
        check(rel(a.min_singular_on_sphere, want) <= 1e-6, || {
            format!("{name}: min sigma {} vs {want}", a.min_singular_on_sphere)
        })?;
        summary.push(format!("{name} {:.6}", a.min_singular_on_sphere));
    }
    for name in ["div", "d1"] {
        let op = DiffOp::preset(name, 2, None).map_err(e)?;
        let a = op.analyze_default();
        check(!a.elliptic && !a.witnesses.is_empty(), || format!("{name} should be non-elliptic with a witness"))?;
        for w in &a.witnesses {
            let image = op.symbol(&w.xi).map_err(e)? * nalgebra::DVector::from_column_slice(&w.kernel);
            let kn = w.kernel.iter().map(|x| x * x).sum::<f64>().sqrt();
            check(image.norm() <= 1e-12 && (kn - 1.0).abs() < 1e-12, || format!("{name}: bad witness {w:?}"))?;
        }
    }
    let dim = DiffOp::preset("sym_grad", 2, None).map_err(e)?.essential_range().ncols();
    check(dim == 3, || format!("essential range of sym_grad has dimension {dim}"))?;
    Ok(format!("min sigma: {}; essential range dim {dim}", summary.join(", ")))
}

const KORN_RANGE: (f64, f64) = (1.5, 2.0);
const STAIRCASE_MIN: f64 = 100.0;

fn korn() -> Outcome {
    let g = Grid::unit(2, 64, Boundary::Periodic).map_err(e)?;
    let grad = DiffOp::preset("grad", 2, None).map_err(e)?;
    for (seed, psi) in [(1, NFunction::power(2.0)), (2, NFunction::power(3.0)), (3, NFunction::LLogL)] {
        let u = random_compact_field(&g, 2, TestFieldSpec { seed, band: 3, amplitude: 3.0 }).map_err(e)?;
        let r = korn_ratio(&psi, &grad, &u).map_err(e)?.ratio;
        check(r == Some(1.0), || format!("gradient ratio {r:?} for {psi}"))?;
    }
    let eps = DiffOp::preset("sym_grad", 2, None).map_err(e)?;
    let opts = KornSearchOptions { band: 2, ..Default::default() };
    let c = korn_search(&NFunction::power(2.0), &eps, &g, &opts).map_err(e)?.fitted_constant;
    check(c >= KORN_RANGE.0 && c <= KORN_RANGE.1, || format!("symmetric-gradient constant {c}"))?;
    let fine = Grid::unit(2, 256, Boundary::Periodic).map_err(e)?;
    let d1 = DiffOp::preset("d1", 2, None).map_err(e)?;
    let mut ratios = Vec::new();
    for depth in 4..=7 {
        let u = staircase_field(&fine, depth, 1.0).map_err(e)?;
        ratios.push(korn_ratio(&NFunction::power(2.0), &d1, &u).map_err(e)?.ratio.unwrap_or(0.0));
    }
    check(ratios[0] > STAIRCASE_MIN && ratios.windows(2).all(|w| w[1] > w[0]), || format!("staircase ratios {ratios:?}"))?;
    Ok(format!("symmetric-gradient constant {c:.4}; staircase ratios {:.0?}", ratios))
}

const LOGLOG_SLOPE: f64 = 0.05;

fn llogl_pipeline() -> Outcome {
    let pair = build_psi_phi(1.0, 1.0, 1.0).map_err(e)?;
    let opts = HardyOptions::default();
    let good = hardy_check(&pair.phi, &pair.psi, &opts).map_err(e)?;
    check(good.holds && good.fitted_constant.is_finite(), || format!("constructed pair fails: {}", good.fitted_constant))?;
    let naive = hardy_check(&NFunction::LLogL, &NFunction::LLogL, &opts).map_err(e)?;
    check(!naive.holds, || format!("naive pair passes with {}", naive.fitted_constant))?;
    let g = Grid::unit(2, 64, Boundary::Periodic).map_err(e)?;
    let eps = DiffOp::preset("sym_grad", 2, None).map_err(e)?;
    let amps = log_grid(1.0, 1e3, 7);
    let mut slopes = Vec::new();
    for seed in 0..3 {
        let u = random_compact_field(&g, 2, TestFieldSpec { seed, band: 2, amplitude: 1.0 }).map_err(e)?;
        let r = loglog_sweep(&eps, 0.0, &u, &amps).map_err(e)?;
        let s = r.constants["log_slope"];
        check(r.holds && s <= LOGLOG_SLOPE, || format!("log-slope {s} on seed {seed}"))?;
        slopes.push(s);
    }
    Ok(format!("constructed pair C {:.3}; log-slopes {slopes:.4?}", good.fitted_constant))
}

const SPREAD_MAX: f64 = 1e3;
const INFLATION_MAX: f64 = 2.0;
const COMPARISON_SAMPLES: usize = 100_000;

fn qc_equivalence() -> Outcome {
    let g = Grid::unit(2, 32, Boundary::DirichletLayer { width: 1 }).map_err(e)?;
    let op = DiffOp::preset("grad", 2, Some(2)).map_err(e)?;
    let mut out = Vec::new();
    for phi in [NFunction::power(2.0), NFunction::power(3.0)] {
        let mut spreads = Vec::new();
        for seed in 0..3 {
            let opts = EquivalenceScanOptions { seed, ..Default::default() };
            let s = v_equivalence_scan(&phi, &op, &g, &opts).map_err(e)?;
            check(s.samples.len() == 40 && s.r_min > 0.0 && s.r_max.is_finite(), || format!("{phi}: degenerate scan {s:?}"))?;
            check(s.spread() < SPREAD_MAX, || format!("{phi}: spread {} on seed {seed}", s.spread()))?;
            spreads.push(s.spread());
        }
        let inflation = spreads.iter().cloned().fold(0.0, f64::max) / spreads.iter().cloned().fold(f64::INFINITY, f64::min);
        check(inflation < INFLATION_MAX, || format!("{phi}: spreads {spreads:?}"))?;
        out.push(format!("{phi} spreads {spreads:.2?}"));
    }
    let c = comparison_scan(4, COMPARISON_SAMPLES, 1e3, 11);
    check(c.violations == 0, || format!("{} comparison violations", c.violations))?;
    Ok(format!("{}; comparison min ratio {:.3}", out.join("; "), c.min_ratio))
}

const ORACLE_TOL: f64 = 1e-6;
const GRAD_CHECK_TOL: f64 = 1e-5;
const REDUCTION_TOL: f64 = 1e-12;

fn minimizer() -> Outcome {
    let g = Grid::unit(2, 64, Boundary::DirichletLayer { width: 1 }).map_err(e)?;
    let grad1 = DiffOp::preset("grad", 2, Some(1)).map_err(e)?;
    let b = Field::from_fn(g.clone(), 1, |x, o| o[0] = x[0] * x[0] - x[1] * x[1] + (3.0 * x[0]).sin() * x[1]);
    let r = minimize(&Integrand::squared_norm(2), &grad1, &g, &b, &MinimizeOptions::default()).map_err(e)?;
    let oracle = common::dirichlet_oracle(&g, &b);
    let dev = r.u.values().iter().zip(&oracle).fold(0.0f64, |m, (a, c)| m.max((a - c).abs()));
    check(dev <= ORACLE_TOL, || format!("64^2 quadratic deviates from the linear solve by {dev:e}"))?;
    check(r.monotone(), || "quadratic trace not monotone".into())?;

    let mut shipped = vec![Integrand::squared_norm(4), Integrand::constant(4, 1.5)];
    for p in [1.5, 2.5, 3.0, 4.0] {
        shipped.push(Integrand::power_norm(4, p).map_err(e)?);
    }
    for phi in [NFunction::power(2.0), NFunction::power(3.0), NFunction::LLogL] {
        shipped.push(Integrand::v_function(4, phi));
    }
    let mut worst: f64 = 0.0;
    for f in &shipped {
        let err = f.gradient_check(200, 3.0, 5).map_err(e)?;
        check(err < GRAD_CHECK_TOL, || format!("gradient check of {} fails with {err:e}", f.name()))?;
        worst = worst.max(err);
    }

    let small = Grid::unit(2, 24, Boundary::DirichletLayer { width: 1 }).map_err(e)?;
    let eps = DiffOp::preset("sym_grad", 2, None).map_err(e)?;
    let bv = Field::from_fn(small.clone(), 2, |x, o| {
        o[0] = (2.0 * x[0]).sin() + x[1];
        o[1] = x[0] * x[1];
    });
    for f in &shipped[2..] {
        let run = minimize(f, &eps, &small, &bv, &MinimizeOptions { max_iters: 300, ..Default::default() }).map_err(e)?;
        check(run.monotone(), || format!("trace of {} not monotone", f.name()))?;
    }

    let grad = DiffOp::preset("grad", 2, Some(2)).map_err(e)?;
    let mut red: f64 = 0.0;
    for (i, f) in [Integrand::v_function(4, NFunction::LLogL), Integrand::power_norm(4, 3.0).map_err(e)?].iter().enumerate() {
        let gf = reduce(f, &eps).map_err(e)?;
        for seed in 0..25 {
            let u = random_compact_field(&small, 2, TestFieldSpec { seed: seed + 100 * i as u64, band: 3, amplitude: 2.0 })
                .map_err(e)?;
            let a = energy(&gf, &grad, &u).map_err(e)?;
            let b = energy(f, &eps, &u).map_err(e)?;
            red = red.max(rel(a, b));
        }
    }
    check(red <= REDUCTION_TOL, || format!("reduction identity off by {red:e}"))?;
    Ok(format!("oracle dev {dev:.1e}; worst gradient check {worst:.1e}; reduction {red:.1e}"))
}

const EXCESS_EPSILON: f64 = 0.5;
const EXCESS_M_TILDE: f64 = 100.0;
const DEMO_ENERGY_TOL: f64 = 1e-10;
const DEMO_IRREGULAR_MIN: f64 = 0.2;

fn ellipticity_regularity() -> Outcome {
    let eps = DiffOp::preset("sym_grad", 2, None).map_err(e)?;
    let f = Integrand::v_function(4, NFunction::power(2.0));
    let mut fractions = Vec::new();
    for cells in [32, 64] {
        let g = Grid::unit(2, cells, Boundary::DirichletLayer { width: 1 }).map_err(e)?;
        let b = Field::from_fn(g.clone(), 2, |x, o| {
            o[0] = (3.0 * x[0]).sin() * (2.0 * x[1]).cosh();
            o[1] = x[0] * x[0] * x[1] - (2.0 * x[1]).exp();
        });
        let r = minimize(&f, &eps, &g, &b, &MinimizeOptions::default()).map_err(e)?;
        check(r.settled(), || format!("{cells}^2 symmetric-gradient run did not settle"))?;
        let m = excess_map(&r.u, &NFunction::power(2.0), EXCESS_M_TILDE, &[2.0], EXCESS_EPSILON).map_err(e)?;
        fractions.push(m.irregular_fraction);
    }
    check(fractions[1] < fractions[0], || format!("irregular fraction did not decrease: {fractions:?}"))?;
    let d1 = DiffOp::preset("d1", 2, None).map_err(e)?;
    let sq = Integrand::squared_norm(1);
    let mut demo = Vec::new();
    for cells in [32, 64, 128] {
        let g = Grid::unit(2, cells, Boundary::DirichletLayer { width: 1 }).map_err(e)?;
        let b = Field::from_fn(g.clone(), 1, |x, o| o[0] = (x[0] + 0.5 * x[1]).sin());
        let r = nonelliptic_demo(&d1, &sq, &g, &b, &DemoOptions::default()).map_err(e)?;
        check(r.energy_diff.abs() < DEMO_ENERGY_TOL, || format!("{cells}^2: energy changed by {}", r.energy_diff))?;
        check(r.irregular_uv > DEMO_IRREGULAR_MIN, || format!("{cells}^2: irregular fraction {}", r.irregular_uv))?;
        demo.push(r.irregular_uv);
    }
    Ok(format!("symmetric-gradient irregular fractions {fractions:.3?}; kernel-perturbed {demo:.3?}"))
}

const EQUIMEASURE_TOL: f64 = 1e-12;
const BAGBY_SCALE_TOL: f64 = 1e-13;
const BAGBY_STABILITY: f64 = 0.2;

fn rearrangement_bagby() -> Outcome {
    let g = Grid::unit(2, 128, Boundary::Periodic).map_err(e)?;
    let mut eq: f64 = 0.0;
    for seed in 0..3 {
        let f = random_compact_field(&g, 2, TestFieldSpec { seed, band: 4, amplitude: 2.0 }).map_err(e)?;
        let prof = rearrangement(&f);
        eq = eq.max(rel(prof.total_measure(), g.volume()));
        for phi in [NFunction::power(2.0), NFunction::power(3.0), NFunction::LLogL] {
            eq = eq.max(rel(prof.integrate_phi(&phi), integrate_phi(&phi, &f)));
        }
        let norms = f.pointwise_norms();
        let w = g.quadrature_weights();
        for lambda in [0.1, 0.5, 1.0, 1.5] {
            let direct: f64 = norms.iter().zip(&w).filter(|(v, _)| **v > lambda).map(|(_, w)| w).sum();
            let k = prof.thresholds.partition_point(|&t| t > lambda);
            let from_profile = if k == 0 { 0.0 } else { prof.s_right[k - 1] };
            eq = eq.max((direct - from_profile).abs() / g.volume());
        }
    }
    check(eq <= EQUIMEASURE_TOL, || format!("equimeasurability off by {eq:e}"))?;
    let m = DiffOp::preset("grad", 2, Some(1)).map_err(e)?.multiplier(0).map_err(e)?;
    let mut cs = Vec::new();
    let mut scale: f64 = 0.0;
    for seed in 0..3 {
        let f = random_compact_field(&g, 2, TestFieldSpec { seed: 40 + seed, band: 4, amplitude: 1.0 }).map_err(e)?;
        let c = bagby_check(&m, &f).map_err(e)?.fitted_constant;
        let c4 = bagby_check(&m, &f.scaled(4.0)).map_err(e)?.fitted_constant;
        scale = scale.max(rel(c4, c));
        cs.push(c);
    }
    check(scale <= BAGBY_SCALE_TOL, || format!("Bagby constant changes under scaling by {scale:e}"))?;
    let mean = cs.iter().sum::<f64>() / cs.len() as f64;
    check(cs.iter().all(|c| rel(*c, mean) <= BAGBY_STABILITY), || format!("Bagby constants {cs:?}"))?;
    Ok(format!("equimeasurability err {eq:.1e}; Bagby constants {cs:.4?}, scale err {scale:.1e}"))
}

fn main() -> ExitCode {
    let criteria: [(&str, &str, u64, fn() -> Outcome); 8] = [
        ("C1", "N-function calculus", 10, nfunction_calculus),
        ("C2", "symbol analysis", 5, symbol_analysis),
        ("C3", "Korn", 120, korn),
        ("C4", "L log L pipeline", 60, llogl_pipeline),
        ("C5", "quasiconvexity equivalence", 60, qc_equivalence),
        ("C6", "minimizer", 120, minimizer),
        ("C7", "ellipticity and regularity", 180, ellipticity_regularity),
        ("C8", "rearrangement and Bagby", 60, rearrangement_bagby),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (id, name, limit, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| f == id) {
            continue;
        }
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(msg) if elapsed > Duration::from_secs(limit) => Err(format!("{msg}; exceeded {limit} s")),
            other => other,
        };
        match outcome {
            Ok(msg) => println!("PASS {id} {name}: {msg} [{:.1} s]", elapsed.as_secs_f64()),
            Err(msg) => {
                failed += 1;
                println!("FAIL {id} {name}: {msg} [{:.1} s]", elapsed.as_secs_f64());
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
