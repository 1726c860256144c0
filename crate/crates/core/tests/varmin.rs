mod common;

use aqc_core::fieldlab::testfields::{random_compact_field, TestFieldSpec};
use aqc_core::fieldlab::{Boundary, Field, Grid};
use aqc_core::nfunc::NFunction;
use aqc_core::opsym::DiffOp;
use aqc_core::qcx::Integrand;
use aqc_core::varmin::{energy, excess_map, excess_of, minimize, reduce, MinimizeOptions};

fn max_dev(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

#[test]
fn quadratic_matches_linear_solve() {
    for cells in [8, 64] {
        let g = Grid::unit(2, cells, Boundary::DirichletLayer { width: 1 }).unwrap();
        let op = DiffOp::preset("grad", 2, Some(1)).unwrap();
        let b = Field::from_fn(g.clone(), 1, |x, o| o[0] = x[0] * x[0] - x[1] * x[1] + (3.0 * x[0]).sin());
        let oracle = common::dirichlet_oracle(&g, &b);
        let r = minimize(&Integrand::squared_norm(2), &op, &g, &b, &MinimizeOptions::default()).unwrap();
        let dev = max_dev(r.u.values(), &oracle);
        let tol = if cells == 8 { 1e-8 } else { 1e-6 };
        assert!(dev < tol, "{cells}: deviation {dev}, {:?}", r.trace.last());
        assert!(r.monotone());
    }
}

#[test]
fn quartic_symmetric_minimizer_beats_competitors() {
    let g = Grid::unit(2, 32, Boundary::DirichletLayer { width: 1 }).unwrap();
    let op = DiffOp::preset("sym_grad", 2, None).unwrap();
    let f = Integrand::power_norm(4, 4.0).unwrap();
    let b = Field::from_fn(g.clone(), 2, |x, o| {
        o[0] = 0.5 * x[0] - x[1];
        o[1] = 0.2 + x[0] + 0.3 * x[1];
    });
    let r = minimize(&f, &op, &g, &b, &MinimizeOptions::default()).unwrap();
    assert!(r.monotone());
    let e = energy(&f, &op, &r.u).unwrap();
    for seed in 0..100 {
        let amp = [1e-3, 1e-2, 1e-1, 1.0][seed as usize % 4];
        let d = random_compact_field(&g, 2, TestFieldSpec { seed, band: 3, amplitude: amp }).unwrap();
        let ec = energy(&f, &op, &r.u.axpy(1.0, &d).unwrap()).unwrap();
        assert!(ec >= e - 1e-12 * e, "competitor {seed}: {ec} < {e}");
    }
}

#[test]
fn excess_of_reduced_problem_agrees() {
    let g = Grid::unit(2, 24, Boundary::Periodic).unwrap();
    let grad = DiffOp::preset("grad", 2, Some(2)).unwrap();
    let u = random_compact_field(&g, 2, TestFieldSpec { seed: 7, band: 2, amplitude: 1.0 }).unwrap();
    let phi = NFunction::power(2.0);
    let a = excess_map(&u, &phi, 5.0, &[2.0, 3.0], 0.1).unwrap();
    let au = aqc_core::fieldlab::apply_op_fd(&grad, &u).unwrap();
    let b = excess_of(&au, &phi, 5.0, &[2.0, 3.0], 0.1).unwrap();
    assert_eq!(a, b);
    let f = Integrand::squared_norm(4);
    let gf = reduce(&f, &grad).unwrap();
    assert_eq!(energy(&gf, &grad, &u).unwrap(), energy(&f, &grad, &u).unwrap());
}
