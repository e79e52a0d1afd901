mod common;

use common::p;
use sipp::conic::{sdpa, ConicBackend, ConicProgram, ConicStatus, InteriorPoint, IpmOptions};
use sipp::exchange::master_program;
use sipp::io::corpus;
use sipp::moment::{build_moment_sdp, PolynomialProgram, RelaxationOptions};
use sipp::poly::{SemialgebraicSet, VariableSpace};

/// A handful of assembled relaxations of different shapes.
fn programs() -> Vec<(String, ConicProgram)> {
    let mut out = Vec::new();
    let ropts = RelaxationOptions::default();
    // the low order masters of a1 and a3 have no interior (tau -> 0 in the embedding)
    for (id, pts) in [("a2", vec![vec![0.5]]), ("a4", vec![vec![1.0, 0.0]])] {
        let prob = corpus::load(id).unwrap().problem;
        let prog = master_program(&prob, &pts).unwrap().unwrap();
        let k = prog.min_order().max(2);
        out.push((format!("{id}_master_k{k}"), build_moment_sdp(&prog, k, &ropts).unwrap().conic));
    }
    let sp = VariableSpace::x(2);
    let circle = SemialgebraicSet::new(sp.clone(), vec![p("x1^2 + x2^2 - 1")], vec![]).unwrap();
    let prog = PolynomialProgram::new(p("x1^4 x2^2 + x1^2 x2^4 - 3 x1^2 x2^2 + x1"), circle).unwrap();
    out.push(("motzkin_circle_k3".into(), build_moment_sdp(&prog, 3, &ropts).unwrap().conic));
    let disc = SemialgebraicSet::new(sp, vec![], vec![p("1 - x1^2 - x2^2"), p("x1 - x2^2")]).unwrap();
    let prog = PolynomialProgram::new(p("x1 x2 + x2^3 - x1^2"), disc).unwrap();
    out.push(("cubic_lens_k2".into(), build_moment_sdp(&prog, 2, &ropts).unwrap().conic));
    out
}

/// Iterates of the embedding are infeasible until the end, and weak duality
/// is a statement about feasible pairs. An iterate counts as feasible once
/// both residuals meet the backend tolerance.
#[test]
fn weak_duality_on_feasible_iterates_and_at_the_end() {
    let opts = IpmOptions { keep_trace: true, ..IpmOptions::default() };
    let ipm = InteriorPoint::new(opts.clone());
    let mut bad = Vec::new();
    for (name, prog) in programs() {
        let sol = ipm.solve(&prog).unwrap();
        assert_eq!(sol.status, ConicStatus::Optimal, "{name}");
        for it in &sol.trace {
            if it.primal_residual <= opts.tol && it.dual_residual <= opts.tol && it.primal_objective < it.dual_objective - 1e-6 {
                bad.push(format!("{name} iterate {}: {} < {}", it.iter, it.primal_objective, it.dual_objective));
            }
        }
        if sol.objective < sol.dual_objective - 1e-6 {
            bad.push(format!("{name} final: {} < {}", sol.objective, sol.dual_objective));
        }
    }
    assert!(bad.is_empty(), "{}", bad.join("\n"));
}

#[test]
fn complementarity_per_block_at_optimum() {
    let ipm = InteriorPoint::default();
    for (name, prog) in programs() {
        let sol = ipm.solve(&prog).unwrap();
        for (b, block) in prog.blocks.iter().enumerate() {
            let s = block.eval(&sol.y);
            let xs = sol.dual_blocks[b].dot(&s);
            assert!(xs.abs() <= 1e-6 * (1.0 + sol.objective.abs()), "{name} block {b}: <X, S> = {xs}");
        }
    }
}

#[test]
fn repeated_solves_are_bitwise_identical() {
    let ipm = InteriorPoint::default();
    for (name, prog) in programs() {
        let a = ipm.solve(&prog).unwrap();
        let b = ipm.solve(&prog).unwrap();
        assert_eq!(a.status, b.status, "{name}");
        assert_eq!(a.objective.to_bits(), b.objective.to_bits(), "{name}");
        assert_eq!(a.dual_objective.to_bits(), b.dual_objective.to_bits(), "{name}");
        assert_eq!(a.iterations, b.iterations, "{name}");
    }
}

#[test]
fn scaling_the_objective_keeps_the_minimizer() {
    let ipm = InteriorPoint::default();
    let mut bad = Vec::new();
    for (name, prog) in programs() {
        let a = ipm.solve(&prog).unwrap();
        let mut scaled = prog.clone();
        scaled.objective.iter_mut().for_each(|c| *c *= 10.0);
        let b = ipm.solve(&scaled).unwrap();
        assert!((b.objective - 10.0 * a.objective).abs() <= 1e-6 * (1.0 + b.objective.abs()), "{name}");
        let diff = a.y.iter().zip(&b.y).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
        if diff > 1e-6 {
            bad.push(format!("{name}: y moved by {diff:.3e}"));
        }
    }
    assert!(bad.is_empty(), "{}", bad.join("\n"));
}

#[test]
fn sdpa_round_trip_reproduces_the_objective() {
    let ipm = InteriorPoint::default();
    let dir = tempfile::tempdir().unwrap();
    for (name, prog) in programs() {
        let path = dir.path().join(format!("{name}.dat-s"));
        sdpa::write_sdpa(&prog, &path).unwrap();
        let back = sdpa::read_sdpa(&path).unwrap();
        let a = ipm.solve(&prog).unwrap();
        let b = ipm.solve(&back).unwrap();
        assert_eq!(b.status, ConicStatus::Optimal, "{name}");
        assert!((a.objective - b.objective).abs() <= 1e-6, "{name}: {} vs {}", a.objective, b.objective);
    }
}
