mod common;

use common::{p, random_poly, rng};
use proptest::prelude::*;
use rand::Rng;
use sipp::homogenize::{dehomogenize_point, homogenize_coupling, homogenize_index_set, homogenize_poly, lift_point, positivity_transfer_check, U0};
use sipp::io::{corpus, run_pipeline, PipelineOptions};
use sipp::poly::{Assignment, Polynomial, SemialgebraicSet, VariableSpace};

#[test]
fn homogenization_examples() {
    assert_eq!(homogenize_coupling(&p("x1 u1 + u2 + x2")).unwrap(), p("x1 u1 + u2 + x2 u0"));
    assert_eq!(homogenize_poly(&Polynomial::constant(5.0), 0).unwrap(), Polynomial::constant(5.0));
    let g = homogenize_coupling(&p("x1 (u1^2 - 1) + (x2 - u1 u2)^2")).unwrap();
    assert_eq!(g, p("x1 (u1^2 - u0^2) u0^2 + (x2 u0^2 - u1 u2)^2"));
    assert!(homogenize_poly(&p("u1^3"), 2).is_err());
}

#[test]
fn index_set_examples() {
    // the whole plane becomes the sphere
    let t = homogenize_index_set(&SemialgebraicSet::full(VariableSpace::u(2))).unwrap();
    assert_eq!(t.equalities, vec![p("u0^2 + u1^2 + u2^2 - 1")]);
    assert!(t.inequalities.is_empty());
    // the curve that is not closed at infinity
    let u = SemialgebraicSet::new(VariableSpace::u(2), vec![p("u1^2 (u1 - u2) - 1")], vec![]).unwrap();
    let t = homogenize_index_set(&u).unwrap();
    assert!(t.equalities.contains(&p("u1^2 (u1 - u2) - u0^3")));
    assert!(t.inequalities.contains(&p("u0")));
    assert!(t.contains(&[0.0, 0.0, 1.0], 1e-12).unwrap());
    let g = homogenize_coupling(&p("x1 (u1 - u2 + 1)")).unwrap();
    assert_eq!(g, p("x1 (u1 - u2 + u0)"));
    let sp = VariableSpace::u_homogeneous(2);
    for x in [1.0, 1.5, 2.0] {
        let v = g.substitute(&Assignment::of(&VariableSpace::x(1), &[x]).unwrap()).eval_at(&sp, &[0.0, 0.0, 1.0]).unwrap();
        assert_eq!(v, -x);
    }
}

#[test]
fn positivity_transfer_examples() {
    let plane = SemialgebraicSet::full(VariableSpace::u(2));
    let mut r = rng(9);
    let samples: Vec<Vec<f64>> = (0..1000).map(|_| vec![r.random_range(-10.0..10.0), r.random_range(-10.0..10.0)]).collect();
    assert!(positivity_transfer_check(&p("u1 - u2 + 1"), &plane, &samples).unwrap());
    assert!(positivity_transfer_check(&Polynomial::constant(-1.0), &plane, &samples).unwrap());
    let cubic = SemialgebraicSet::new(VariableSpace::u(2), vec![], vec![p("u1^3 + u2^3 - 3 u1 u2")]).unwrap();
    let mut inside = Vec::new();
    while inside.len() < 1000 {
        let s = vec![r.random_range(-10.0..10.0), r.random_range(-10.0..10.0)];
        if cubic.contains(&s, 0.0).unwrap() {
            inside.push(s);
        }
    }
    assert!(positivity_transfer_check(&p("u1 + u2 + 1"), &cubic, &inside).unwrap());
    assert!(positivity_transfer_check(&p("u1^3 + u2^3 - 3 u1 u2"), &cubic, &inside).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn homogeneous_and_dehomogenizes(seed in any::<u64>(), pdim in 1usize..=3, deg in 0usize..=4) {
        let mut r = rng(seed);
        let q = random_poly(&mut r, &VariableSpace::u(pdim).vars(), deg);
        let d = deg as u32;
        let qt = homogenize_poly(&q, d).unwrap();
        let sp = VariableSpace::u_homogeneous(pdim);
        prop_assert!(qt.terms().all(|(m, _)| m.degree() == d));
        let ut: Vec<f64> = (0..=pdim).map(|_| r.random_range(-1.0..1.0)).collect();
        let lam: f64 = r.random_range(0.1..3.0);
        let scaled: Vec<f64> = ut.iter().map(|v| lam * v).collect();
        let (a, b) = (qt.eval_at(&sp, &scaled).unwrap(), lam.powi(d as i32) * qt.eval_at(&sp, &ut).unwrap());
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs())), "{a} vs {b}");
        // u0 = 1 recovers q coefficient by coefficient
        let mut one = Assignment::new();
        one.set(U0, 1.0);
        prop_assert_eq!(qt.substitute(&one), q);
    }

    #[test]
    fn lift_and_back(u in prop::collection::vec(-50.0f64..50.0, 1..4)) {
        let t = lift_point(&u);
        prop_assert!((t.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-12);
        let back = dehomogenize_point(&t).unwrap();
        for (a, b) in u.iter().zip(&back) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }
    }
}

fn f_star(id: &str, homogenize: bool, eps: Option<f64>) -> f64 {
    let mut parsed = corpus::load(id).unwrap();
    if let Some(e) = eps {
        parsed.options.eps = e;
    }
    let out = run_pipeline(&parsed, &PipelineOptions { homogenize: Some(homogenize), ..Default::default() }).unwrap();
    assert_eq!(out.exchange.status, sipp::exchange::ExchangeStatus::Certified, "{id} homogenize={homogenize}");
    out.exchange.f_star.unwrap()
}

/// Homogenizing never lowers the optimum. Accepted points are only
/// eps-feasible, and `g~` is `g` scaled by `u0^d <= 1`, so both runs use an
/// eps well below the comparison tolerance.
#[test]
fn homogenized_optimum_is_not_below_the_raw_one() {
    for id in ["a2", "a7"] {
        let (raw, hom) = (f_star(id, false, Some(1e-6)), f_star(id, true, Some(1e-6)));
        assert!(hom >= raw - 1e-6, "{id}: {hom} < {raw}");
    }
}

/// Index sets closed at infinity: the homogenized problem has the same optimum.
#[test]
fn closed_at_infinity_keeps_the_optimum() {
    assert!((f_star("nc-quartic", true, None) + 2f64.sqrt()).abs() <= 1e-3);
    assert!((f_star("nc-cubic", true, None) - 2.0).abs() <= 1e-3);
}
