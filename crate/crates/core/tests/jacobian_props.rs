mod common;

use common::{ball_min, p, random_poly, rng};
use nalgebra::{DMatrix, DVector};
use sipp::conic::InteriorPoint;
use sipp::io::corpus;
use sipp::jacobian::{augment, jacobian_matrix, minor_equations};
use sipp::local::kkt_newton;
use sipp::moment::{solve_hierarchy, HierarchyOptions, PolynomialProgram};
use sipp::poly::{Polynomial, SemialgebraicSet, VariableSpace};

fn ball(n: usize) -> SemialgebraicSet {
    let sp = VariableSpace::x(n);
    let mut g = Polynomial::constant(1.0);
    for v in sp.vars() {
        g = &g - &Polynomial::var(v).pow(2);
    }
    SemialgebraicSet::new(sp, vec![], vec![g]).unwrap()
}

#[test]
fn jacobian_matrix_examples() {
    let sp = VariableSpace::x(3);
    let prog = PolynomialProgram::new(p("x1"), SemialgebraicSet::full(sp)).unwrap();
    let cols = jacobian_matrix(&prog);
    assert_eq!(cols.len(), 1);
    assert_eq!(cols[0], vec![Polynomial::constant(1.0), Polynomial::zero(), Polynomial::zero()]);

    let sp = VariableSpace::u(2);
    let disc = SemialgebraicSet::new(sp, vec![], vec![p("1 - u1^2 - u2^2")]).unwrap();
    let prog = PolynomialProgram::new(p("u1^2 + u2^2"), disc).unwrap();
    let cols = jacobian_matrix(&prog);
    assert_eq!(cols, vec![vec![p("2 u1"), p("2 u2")], vec![p("-2 u1"), p("-2 u2")]]);
}

#[test]
fn minors_examples() {
    let m = minor_equations(&[vec![p("x1"), p("x2^2")], vec![p("x1 x2"), p("x3")]]);
    assert_eq!(m, vec![p("x1 x3 - x1 x2^3")]);
    // a zero column kills every minor
    let m = minor_equations(&[vec![p("x1"), p("x2")], vec![Polynomial::zero(), Polynomial::zero()]]);
    assert!(m.is_empty());
}

#[test]
fn unconstrained_and_circle() {
    let sp = VariableSpace::x(2);
    let prog = PolynomialProgram::new(p("x1^4 + x2^2 - 2 x1"), SemialgebraicSet::full(sp.clone())).unwrap();
    let aug = augment(&prog, 2000).unwrap();
    // the gradient entries, each at unit largest coefficient
    let mut got = aug.phi.clone();
    got.sort_by_key(|q| q.to_string());
    let mut want = vec![p("x1^3 - 0.5"), p("x2")];
    want.sort_by_key(|q| q.to_string());
    assert_eq!(got.len(), 2);
    for (a, b) in got.iter().zip(&want) {
        assert!(a.max_coeff_diff(b) < 1e-14 || a.max_coeff_diff(&b.scale(-1.0)) < 1e-14, "{a} vs {b}");
    }

    let circle = SemialgebraicSet::new(VariableSpace::u(2), vec![p("u1^2 + u2^2 - 1")], vec![]).unwrap();
    let prog = PolynomialProgram::new(p("u1"), circle).unwrap();
    let aug = augment(&prog, 2000).unwrap();
    assert_eq!(aug.phi.len(), 1);
    assert!(aug.phi[0].max_coeff_diff(&p("u2")) < 1e-14 || aug.phi[0].max_coeff_diff(&p("-u2")) < 1e-14);
    let h = solve_hierarchy(&aug.problem().unwrap(), &HierarchyOptions::default(), &InteriorPoint::default()).unwrap();
    assert!(h.is_certified());
    assert!((h.lower_bound + 1.0).abs() < 1e-6);
    assert_eq!(h.minimizers.len(), 1);
    assert!((h.minimizers[0][0] + 1.0).abs() < 1e-5 && h.minimizers[0][1].abs() < 1e-5);
}

/// Inner problem of the quartic with the unbounded index set: the augmented
/// relaxation returns the critical value `x2^2 - x1` at the origin, which lies
/// above the infimum `-x1` once `x1 > 0`.
#[test]
fn unattained_inner_minimum_gives_the_critical_value() {
    let prob = corpus::load("nc-quartic-raw").unwrap().problem;
    for x in [[1.0, 1.0], [0.5, 2.0], [2.0, 0.5]] {
        let g = prob.coupling_at(&x).unwrap();
        let base = PolynomialProgram::new(g, prob.u_set.clone()).unwrap();
        let aug = augment(&base, 2000).unwrap();
        let h = solve_hierarchy(&aug.problem().unwrap(), &HierarchyOptions::default(), &InteriorPoint::default()).unwrap();
        assert!(h.is_certified(), "x = {x:?}");
        let crit = x[1] * x[1] - x[0];
        assert!((h.lower_bound - crit).abs() < 1e-5, "x = {x:?}: {} vs {crit}", h.lower_bound);
        assert!(h.lower_bound > -x[0]);
        assert!(h.minimizers.iter().all(|u| u.iter().all(|v| v.abs() < 1e-4)), "{:?}", h.minimizers);
    }
}

#[test]
fn augmented_value_matches_the_oracle_on_compact_instances() {
    let ipm = InteriorPoint::default();
    let mut bad = Vec::new();
    for seed in 0..10u64 {
        let n = 1 + (seed as usize % 3);
        let mut r = rng(100 + seed);
        let set = ball(n);
        let f = random_poly(&mut r, &set.space.vars(), 3);
        let oracle = ball_min(&f, &set);
        let prog = PolynomialProgram::new(f.clone(), set).unwrap();
        let aug = augment(&prog, 2000).unwrap();
        let h = solve_hierarchy(&aug.problem().unwrap(), &HierarchyOptions::default(), &ipm).unwrap();
        if !h.is_certified() || (h.lower_bound - oracle).abs() > 1e-4 {
            bad.push(format!("seed {seed} n={n}: {:?} {} vs oracle {oracle} for {f}", h.status, h.lower_bound));
        }
    }
    assert!(bad.is_empty(), "{}", bad.join("\n"));
}

/// Least squares residual of `grad f` against the active constraint gradients.
fn stationarity(prog: &PolynomialProgram, z: &[f64], active: &[usize]) -> f64 {
    let sp = &prog.set.space;
    let grad = |q: &Polynomial| -> DVector<f64> {
        DVector::from_iterator(sp.dim, q.gradient(sp).iter().map(|d| d.eval_at(sp, z).unwrap()))
    };
    let gf = grad(&prog.objective);
    if active.is_empty() {
        return gf.amax();
    }
    let cols: Vec<DVector<f64>> = active.iter().map(|&i| grad(&prog.set.inequalities[i])).collect();
    let a = DMatrix::from_columns(&cols);
    let lam = a.clone().svd(true, true).solve(&gf, 1e-14).unwrap();
    (gf - a * lam).amax()
}

#[test]
fn phi_vanishes_at_kkt_points() {
    let mut found = 0;
    for seed in 0..10u64 {
        let mut r = rng(200 + seed);
        let sp = VariableSpace::x(2);
        let set = SemialgebraicSet::new(sp.clone(), vec![], vec![p("1 - x1^2 - x2^2"), p("x1 + 0.3")]).unwrap();
        let f = random_poly(&mut r, &sp.vars(), 3);
        let prog = PolynomialProgram::new(f, set).unwrap();
        let aug = augment(&prog, 2000).unwrap();
        let scale = aug.phi.iter().fold(0.0f64, |a, q| a.max(q.max_abs_coeff()));
        for i in 0..7 {
            for j in 0..7 {
                let z0 = [-1.0 + i as f64 / 3.0, -1.0 + j as f64 / 3.0];
                for active in [vec![], vec![0], vec![1], vec![0, 1]] {
                    let Some(z) = kkt_newton(&prog, &z0, &active).unwrap() else { continue };
                    let on = active.iter().all(|&a| prog.set.inequalities[a].eval_at(&sp, &z).unwrap().abs() < 1e-9);
                    if !on || prog.set.violation(&z).unwrap() > 1e-9 || stationarity(&prog, &z, &active) >= 1e-6 {
                        continue;
                    }
                    found += 1;
                    for (q, pv) in aug.phi.iter().zip(&aug.provenance) {
                        let v = q.eval_at(&sp, &z).unwrap();
                        assert!(v.abs() <= 1e-6 * (1.0 + scale), "seed {seed}: phi {pv:?} = {v} at {z:?}");
                    }
                }
            }
        }
    }
    assert!(found >= 10, "only {found} KKT points found");
}
