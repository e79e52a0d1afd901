//! One PASS/FAIL line per acceptance criterion. Exits nonzero if any fails.

mod common;

use std::time::{Duration, Instant};

use common::{ball_min, grid_min, polish_min, random_poly, rng};
use rand::Rng;
use sipp::conic::{sdpa, ConicBackend, ConicProgram, InteriorPoint};
use sipp::exchange::{master_program, solve_inner, ExchangeOptions, ExchangeStatus};
use sipp::extract::{check_flat_truncation, extract_minimizers, ExtractOptions, RankProfile};
use sipp::io::{corpus, generate_random_instance, run_pipeline, IndexSetKind, PipelineOptions, PipelineOutcome, RandomInstanceSpec};
use sipp::jacobian::augment;
use sipp::moment::{
    build_moment_sdp, localizing_matrix, riesz_apply, solve_hierarchy, solve_relaxation, HierarchyOptions, MomentIndex,
    PolynomialProgram, RelaxationOptions, TruncatedMomentSequence,
};
use sipp::pmi::{pmi_to_sipp, PolynomialMatrix};
use sipp::poly::{Monomial, Polynomial, SemialgebraicSet, VariableSpace};

struct Sheet {
    failed: usize,
}

impl Sheet {
    fn line(&mut self, ok: bool, name: &str, detail: String) {
        if !ok {
            self.failed += 1;
        }
        println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    }
}

fn run(id: &str) -> (PipelineOutcome, Duration) {
    let t = Instant::now();
    let out = run_pipeline(&corpus::load(id).unwrap(), &PipelineOptions::default()).unwrap();
    (out, t.elapsed())
}

/// Distance from `want` to the closest reported minimizer, max norm.
fn x_err(out: &PipelineOutcome, want: &[f64]) -> f64 {
    out.exchange
        .x_star
        .iter()
        .map(|x| x.iter().zip(want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
        .fold(f64::INFINITY, f64::min)
}

fn f_err(out: &PipelineOutcome, want: f64) -> f64 {
    out.exchange.f_star.map_or(f64::INFINITY, |f| (f - want).abs())
}

fn ball(n: usize) -> SemialgebraicSet {
    let sp = VariableSpace::x(n);
    let mut g = Polynomial::constant(1.0);
    for v in sp.vars() {
        g = &g - &Polynomial::var(v).pow(2);
    }
    SemialgebraicSet::new(sp, vec![], vec![g]).unwrap()
}

fn table(s: &mut Sheet) {
    let mut total = Duration::ZERO;
    for id in corpus::TABLE {
        let parsed = corpus::load(id).unwrap();
        let rf = parsed.reference.clone().unwrap();
        let eps = parsed.options.eps;
        let (out, dt) = run(id);
        total += dt;
        let ex = &out.exchange;
        let df = f_err(&out, rf.f_star.unwrap());
        let dx = x_err(&out, &rf.x_star);
        let obj2 = ex.obj2.unwrap_or(f64::NEG_INFINITY);
        let ok = ex.status == ExchangeStatus::Certified && obj2 >= -1e-4 && df <= 1e-3 && dx <= 5e-3 && ex.iterations <= 6;
        s.line(
            ok,
            &format!("table {id}"),
            format!(
                "{:?}, f* {:?} (|df| {df:.1e} <= 1e-3), |dx| {dx:.1e} <= 5e-3, Obj_2 {obj2:.2e} >= -1e-4 (eps {eps:.0e}), {} iterations <= 6, {:.1} s",
                ex.status,
                ex.f_star,
                ex.iterations,
                dt.as_secs_f64()
            ),
        );
    }
    s.line(total.as_secs() < 300, "table total time", format!("{:.1} s < 300 s", total.as_secs_f64()));
}

fn pmi(s: &mut Sheet) {
    let (out, dt) = run("pmi3");
    let dx = x_err(&out, &[-1.2853, -1.2763]);
    s.line(
        out.exchange.status == ExchangeStatus::Certified && dx <= 5e-3 && dt.as_secs() <= 120,
        "pmi 3x3",
        format!("{:?}, x* {:?}, |dx| {dx:.1e} <= 5e-3, {:.1} s <= 120 s", out.exchange.status, out.exchange.x_star, dt.as_secs_f64()),
    );
    let (out, dt) = run("pmi4");
    let df = f_err(&out, 1.5771);
    let dx = x_err(&out, &[0.5093, -1.0678]);
    s.line(
        out.exchange.status == ExchangeStatus::Certified && df <= 1e-3 && dx <= 5e-3 && dt.as_secs() <= 120,
        "pmi 4x4",
        format!(
            "{:?}, f* {:?} (|df| {df:.1e} <= 1e-3), |dx| {dx:.1e} <= 5e-3, {:.1} s <= 120 s",
            out.exchange.status,
            out.exchange.f_star,
            dt.as_secs_f64()
        ),
    );
}

fn homogenization(s: &mut Sheet) {
    let r2 = 2f64.sqrt();
    let (out, _) = run("nc-quartic");
    let df = f_err(&out, -r2);
    let dx = x_err(&out, &[0.0, r2]);
    s.line(
        out.exchange.status == ExchangeStatus::Certified && df <= 1e-3 && dx <= 1e-3,
        "homogenized quartic",
        format!("{:?}, f* {:?} (|df| {df:.1e} <= 1e-3), |dx| {dx:.1e} <= 1e-3", out.exchange.status, out.exchange.f_star),
    );
    let (out, _) = run("nc-quartic-raw");
    s.line(
        out.exchange.status == ExchangeStatus::InnerUnattainedSuspected,
        "raw quartic flagged",
        format!("{:?}", out.exchange.status),
    );
    let (out, _) = run("nc-cubic");
    let dx = x_err(&out, &[1.0, 1.0]);
    s.line(
        out.exchange.status == ExchangeStatus::Certified && dx <= 5e-3,
        "homogenized cubic",
        format!("{:?}, x* {:?}, |dx| {dx:.1e} <= 5e-3", out.exchange.status, out.exchange.x_star),
    );
    let (out, _) = run("nc-not-closed");
    s.line(
        out.exchange.status == ExchangeStatus::MasterInfeasible,
        "not closed at infinity",
        format!("{:?}", out.exchange.status),
    );
}

fn properties(s: &mut Sheet) {
    let start = Instant::now();
    let ipm = InteriorPoint::default();

    // localizing identity
    let mut r = rng(11);
    let mut worst: f64 = 0.0;
    for trial in 0..50 {
        let n = 1 + trial % 3;
        let vars = VariableSpace::x(n).vars();
        let k = 3;
        let len = MomentIndex::get(n, 2 * k).len();
        let y = TruncatedMomentSequence::new(vars.clone(), k, (0..len).map(|_| r.random_range(-1.0..=1.0)).collect()).unwrap();
        let dp = trial % 3;
        let pp = random_poly(&mut r, &vars, dp);
        let l = localizing_matrix(&y, &pp, (2 * k - dp) / 2).unwrap();
        let m = l.nrows();
        let qv: Vec<f64> = (0..m).map(|_| r.random_range(-1.0..=1.0)).collect();
        let q = Polynomial::from_terms((0..m).map(|i| (Monomial::from_exponents(&vars, y.index().exponent(i)), qv[i])));
        let quad: f64 = (0..m).map(|i| (0..m).map(|j| qv[i] * l[(i, j)] * qv[j]).sum::<f64>()).sum();
        let direct = riesz_apply(&y, &(&pp * &(&q * &q))).unwrap();
        worst = worst.max((quad - direct).abs() / (1.0 + direct.abs()));
    }
    s.line(worst <= 1e-9, "localizing identity", format!("50 triples, worst relative error {worst:.1e} <= 1e-9"));

    // monotone hierarchy below a grid oracle
    let mut r = rng(2024);
    let mut bad = Vec::new();
    for inst in 0..10 {
        let n = 1 + inst % 3;
        let set = ball(n);
        let f = random_poly(&mut r, &set.space.vars(), if n == 3 { 2 } else { 4 });
        let steps = [0, 2001, 201, 41][n];
        let oracle = polish_min(&f, &set, grid_min(&f, &set, -1.0, 1.0, steps, 0.0), 2.0 / steps as f64);
        let prog = PolynomialProgram::new(f, set).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for k in prog.min_order()..=prog.min_order() + 2 {
            let lb = solve_relaxation(&prog, k, &RelaxationOptions::default(), &ipm).unwrap().lower_bound;
            if prev > lb + 1e-6 || lb > oracle + 1e-6 {
                bad.push(format!("instance {inst} order {k}: {prev} -> {lb}, oracle {oracle}"));
            }
            prev = lb;
        }
    }
    s.line(bad.is_empty(), "hierarchy monotone below oracle", format!("10 instances, violations {:?}", bad));

    // extraction round trip
    let mut bad = Vec::new();
    for case in 0..40u64 {
        let n = 1 + (case as usize % 3);
        let atoms = 1 + (case as usize / 3) % 4;
        let mut g = rng(500 + case);
        let mut pts: Vec<Vec<f64>> = Vec::new();
        while pts.len() < atoms {
            let z: Vec<f64> = (0..n).map(|_| g.random_range(-1.0..=1.0)).collect();
            if pts.iter().all(|q| q.iter().zip(&z).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) >= 0.3) {
                pts.push(z);
            }
        }
        let w: Vec<f64> = (0..atoms).map(|_| g.random_range(0.2..1.0)).collect();
        let k = if n == 1 { atoms + 1 } else { 3 };
        let y = TruncatedMomentSequence::from_atoms(VariableSpace::x(n).vars(), k, &pts, &w);
        let Some(t) = check_flat_truncation(&RankProfile::compute(&y, 1e-6), 1, 1) else {
            bad.push(format!("case {case}: not flat"));
            continue;
        };
        let got = extract_minimizers(&y, t, &ExtractOptions::default()).unwrap().points;
        let found = got.len() == atoms
            && pts.iter().all(|p| got.iter().any(|q| p.iter().zip(q).all(|(a, b)| (a - b).abs() <= 1e-6)));
        if !found {
            bad.push(format!("case {case}: {pts:?} vs {got:?}"));
        }
    }
    s.line(bad.is_empty(), "extraction round trip", format!("40 measures with up to 4 atoms, failures {bad:?}"));

    // Jacobian augmentation against an oracle
    let mut worst: f64 = 0.0;
    let mut uncertified = 0;
    for seed in 0..10u64 {
        let n = 1 + (seed as usize % 3);
        let mut r = rng(100 + seed);
        let set = ball(n);
        let f = random_poly(&mut r, &set.space.vars(), 3);
        let oracle = ball_min(&f, &set);
        let aug = augment(&PolynomialProgram::new(f, set).unwrap(), 2000).unwrap();
        let h = solve_hierarchy(&aug.problem().unwrap(), &HierarchyOptions::default(), &ipm).unwrap();
        if !h.is_certified() {
            uncertified += 1;
        }
        worst = worst.max((h.lower_bound - oracle).abs());
    }
    s.line(
        uncertified == 0 && worst <= 1e-4,
        "augmented value equals oracle",
        format!("10 instances, {uncertified} uncertified, worst gap {worst:.1e} <= 1e-4"),
    );

    // inner matrix solve is the smallest eigenvalue
    let x_set = SemialgebraicSet::new(VariableSpace::x(2), vec![], vec!["4 - x1^2 - x2^2".parse().unwrap()]).unwrap();
    let opts = ExchangeOptions::default();
    let mut worst: f64 = 0.0;
    let mut r = rng(4);
    for k in 0..20u64 {
        let mut g = rng(100 + k);
        let vars = VariableSpace::x(2).vars();
        let mut rows = vec![vec![Polynomial::zero(); 3]; 3];
        for i in 0..3 {
            for j in i..3 {
                let q = random_poly(&mut g, &vars, 2);
                rows[i][j] = q.clone();
                rows[j][i] = q;
            }
        }
        let mat = PolynomialMatrix::from_rows(rows).unwrap();
        let prob = pmi_to_sipp(&"x1".parse().unwrap(), &mat, x_set.clone()).unwrap();
        let x = vec![r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)];
        let lmin = mat.eval(&VariableSpace::x(2), &x).unwrap().symmetric_eigenvalues().min();
        let inner = solve_inner(&prob, &x, &opts, &ipm).unwrap();
        worst = worst.max(if inner.certified { (inner.value - lmin).abs() } else { f64::INFINITY });
    }
    s.line(worst <= 1e-6, "inner matrix solve equals min eigenvalue", format!("20 matrices, worst {worst:.1e} <= 1e-6"));

    let dt = start.elapsed();
    s.line(dt.as_secs() < 120, "property checks time", format!("{:.1} s < 120 s", dt.as_secs_f64()));
}

fn relaxations() -> Vec<(String, ConicProgram)> {
    let ropts = RelaxationOptions::default();
    let mut out = Vec::new();
    for (id, pts) in [("a2", vec![vec![0.5]]), ("a4", vec![vec![1.0, 0.0]]), ("a7", vec![vec![0.5]])] {
        let prog = master_program(&corpus::load(id).unwrap().problem, &pts).unwrap().unwrap();
        let k = prog.min_order().max(2);
        out.push((format!("{id} master k={k}"), build_moment_sdp(&prog, k, &ropts).unwrap().conic));
    }
    let sp = VariableSpace::x(2);
    let circle = SemialgebraicSet::new(sp.clone(), vec!["x1^2 + x2^2 - 1".parse().unwrap()], vec![]).unwrap();
    let prog = PolynomialProgram::new("x1^4 x2^2 + x1^2 x2^4 - 3 x1^2 x2^2 + x1".parse().unwrap(), circle).unwrap();
    out.push(("motzkin on circle k=3".into(), build_moment_sdp(&prog, 3, &ropts).unwrap().conic));
    let lens = SemialgebraicSet::new(sp, vec![], vec!["1 - x1^2 - x2^2".parse().unwrap(), "x1 - x2^2".parse().unwrap()]).unwrap();
    let prog = PolynomialProgram::new("x1 x2 + x2^3 - x1^2".parse().unwrap(), lens).unwrap();
    out.push(("cubic on lens k=2".into(), build_moment_sdp(&prog, 2, &ropts).unwrap().conic));
    out
}

fn sdpa_cross_check(s: &mut Sheet) {
    let ipm = InteriorPoint::default();
    let dir = tempfile::tempdir().unwrap();
    let mut diffs = Vec::new();
    let mut worst: f64 = 0.0;
    for (name, prog) in relaxations() {
        let path = dir.path().join("p.dat-s");
        sdpa::write_sdpa(&prog, &path).unwrap();
        let back = sdpa::read_sdpa(&path).unwrap();
        let a = ipm.solve(&prog).unwrap().objective;
        let b = ipm.solve(&back).map_or(f64::NAN, |r| r.objective);
        let d = (a - b).abs();
        worst = worst.max(if d.is_nan() { f64::INFINITY } else { d });
        diffs.push(format!("{name} {d:.1e}"));
    }
    s.line(worst <= 1e-6, "SDPA export round trip", format!("{} <= 1e-6", diffs.join(", ")));
}

fn generated(s: &mut Sheet) {
    let mut rows = Vec::new();
    let mut ok = true;
    for seed in 0..4 {
        let spec = RandomInstanceSpec { n: 5, p: 3, d1: 3, d2: 2, index_set: IndexSetKind::Ball, seed };
        let inst = generate_random_instance(&spec).unwrap();
        let ex = sipp::exchange::exchange_loop(&inst.problem, &ExchangeOptions::default(), &InteriorPoint::default()).unwrap();
        let obj2 = ex.obj2.unwrap_or(f64::NEG_INFINITY);
        ok &= ex.status == ExchangeStatus::Certified && obj2 >= -1e-4;
        rows.push(format!("seed {seed} {:?} Obj_2 {obj2:.1e}", ex.status));
    }
    s.line(ok, "generated n=5 p=3 instances certify", format!("{} (Obj_2 >= -1e-4)", rows.join(", ")));
}

fn main() {
    let mut s = Sheet { failed: 0 };
    table(&mut s);
    pmi(&mut s);
    homogenization(&mut s);
    properties(&mut s);
    sdpa_cross_check(&mut s);
    generated(&mut s);
    println!("acceptance: {} failed", s.failed);
    if s.failed > 0 {
        std::process::exit(1);
    }
}
