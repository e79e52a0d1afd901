//! Local projections and Newton refinement of points against a
//! semialgebraic set.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::moment::PolynomialProgram;
use crate::poly::{Assignment, Polynomial, SemialgebraicSet};

/// Pull `z` onto `h = 0` by Gauss-Newton with the pseudo-inverse.
pub fn project_equalities(set: &SemialgebraicSet, z: &mut [f64]) -> Result<bool> {
    if set.equalities.is_empty() {
        return Ok(true);
    }
    let sp = &set.space;
    let grads: Vec<Vec<Polynomial>> = set.equalities.iter().map(|h| h.gradient(sp)).collect();
    for _ in 0..60 {
        let a = Assignment::of(sp, z)?;
        let r: Vec<f64> = set.equalities.iter().map(|h| h.eval(&a)).collect::<Result<_>>()?;
        let rn = r.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if rn < 1e-12 {
            return Ok(true);
        }
        let mut jac = DMatrix::zeros(r.len(), sp.dim);
        for (i, g) in grads.iter().enumerate() {
            for (j, d) in g.iter().enumerate() {
                jac[(i, j)] = d.eval(&a)?;
            }
        }
        let Ok(step) = jac.svd(true, true).solve(&DVector::from_vec(r), 1e-12) else {
            return Ok(false);
        };
        for (zi, s) in z.iter_mut().zip(step.iter()) {
            *zi -= s;
        }
        if !z.iter().all(|v| v.is_finite()) {
            return Ok(false);
        }
    }
    let a = Assignment::of(sp, z)?;
    Ok(set.equalities.iter().all(|h| h.eval(&a).is_ok_and(|v| v.abs() < 1e-9)))
}

/// Move an extracted index point exactly onto the constraints that are
/// active or slightly violated there, so cuts are taken inside `U`.
pub fn polish_point(set: &SemialgebraicSet, z: &[f64]) -> Result<Vec<f64>> {
    let a = Assignment::of(&set.space, z)?;
    let mut active = set.equalities.clone();
    for g in &set.inequalities {
        if g.eval(&a)? < 1e-7 * (1.0 + g.max_abs_coeff()) {
            active.push(g.clone());
        }
    }
    if active.is_empty() {
        return Ok(z.to_vec());
    }
    let act = SemialgebraicSet::new(set.space.clone(), active, vec![])?;
    let mut w = z.to_vec();
    let moved = project_equalities(&act, &mut w)?
        && w.iter().zip(z).all(|(a, b)| (a - b).abs() <= 1e-5 * (1.0 + b.abs()))
        && set.contains(&w, 1e-12)?;
    Ok(if moved { w } else { z.to_vec() })
}

/// Project `z` onto the constraints it violates, growing the active set
/// until the point is feasible or the rounds run out. No limit on the move.
pub fn restore_feasibility(set: &SemialgebraicSet, z: &[f64], rounds: usize) -> Result<Option<Vec<f64>>> {
    let mut w = z.to_vec();
    let mut active: Vec<usize> = Vec::new();
    for _ in 0..rounds {
        if set.contains(&w, 1e-12)? {
            return Ok(Some(w));
        }
        let a = Assignment::of(&set.space, &w)?;
        for (i, g) in set.inequalities.iter().enumerate() {
            if !active.contains(&i) && g.eval(&a)? < 0.0 {
                active.push(i);
            }
        }
        let mut eqs = set.equalities.clone();
        eqs.extend(active.iter().map(|&i| set.inequalities[i].clone()));
        let act = SemialgebraicSet::new(set.space.clone(), eqs, vec![])?;
        if !project_equalities(&act, &mut w)? {
            return Ok(None);
        }
    }
    Ok(set.contains(&w, 1e-12)?.then_some(w))
}

/// Newton's method on the KKT system of `min f` with the equalities and the
/// inequalities `active` held as equalities, started at `z`.
pub fn kkt_newton(prog: &PolynomialProgram, z: &[f64], active: &[usize]) -> Result<Option<Vec<f64>>> {
    let sp = &prog.set.space;
    let n = sp.dim;
    let mut act = prog.set.equalities.clone();
    act.extend(active.iter().map(|&i| prog.set.inequalities[i].clone()));
    let m = act.len();
    let gf = prog.objective.gradient(sp);
    let hf: Vec<Vec<Polynomial>> = gf.iter().map(|d| d.gradient(sp)).collect();
    let gc: Vec<Vec<Polynomial>> = act.iter().map(|g| g.gradient(sp)).collect();
    let hc: Vec<Vec<Vec<Polynomial>>> = gc.iter().map(|gr| gr.iter().map(|d| d.gradient(sp)).collect()).collect();
    let eval_mat = |polys: &[Vec<Polynomial>], a: &Assignment| -> Result<DMatrix<f64>> {
        let mut mt = DMatrix::zeros(polys.len(), n);
        for (i, row) in polys.iter().enumerate() {
            for (j, p) in row.iter().enumerate() {
                mt[(i, j)] = p.eval(a)?;
            }
        }
        Ok(mt)
    };
    let eval_vec = |polys: &[Polynomial], a: &Assignment| -> Result<DVector<f64>> {
        Ok(DVector::from_vec(polys.iter().map(|p| p.eval(a)).collect::<Result<Vec<_>>>()?))
    };
    let mut x = DVector::from_column_slice(z);
    let a = Assignment::of(sp, z)?;
    let mut lam = if m == 0 {
        DVector::zeros(0)
    } else {
        let Ok(l) = eval_mat(&gc, &a)?.transpose().svd(true, true).solve(&eval_vec(&gf, &a)?, 1e-12) else {
            return Ok(None);
        };
        l
    };
    for _ in 0..30 {
        let a = Assignment::of(sp, x.as_slice())?;
        let jac = eval_mat(&gc, &a)?;
        let mut hess = eval_mat(&hf, &a)?;
        for (i, h) in hc.iter().enumerate() {
            hess -= eval_mat(h, &a)? * lam[i];
        }
        let r1 = eval_vec(&gf, &a)? - jac.transpose() * &lam;
        let r2 = eval_vec(&act, &a)?;
        if r1.amax() < 1e-12 && (m == 0 || r2.amax() < 1e-12) {
            break;
        }
        let mut kkt = DMatrix::zeros(n + m, n + m);
        kkt.view_mut((0, 0), (n, n)).copy_from(&hess);
        kkt.view_mut((0, n), (n, m)).copy_from(&(-jac.transpose()));
        kkt.view_mut((n, 0), (m, n)).copy_from(&jac);
        let mut rhs = DVector::zeros(n + m);
        rhs.rows_mut(0, n).copy_from(&(-r1));
        rhs.rows_mut(n, m).copy_from(&(-r2));
        let Ok(step) = kkt.svd(true, true).solve(&rhs, 1e-14) else {
            return Ok(None);
        };
        x += step.rows(0, n);
        lam += step.rows(n, m);
        if !x.iter().all(|v| v.is_finite()) {
            return Ok(None);
        }
    }
    Ok(Some(x.as_slice().to_vec()))
}

/// Local minimizers near `z` over small active sets drawn from the
/// inequalities closest to active there.
pub fn local_candidates(prog: &PolynomialProgram, z: &[f64]) -> Result<Vec<Vec<f64>>> {
    let n = prog.set.space.dim;
    let a = Assignment::of(&prog.set.space, z)?;
    let mut near: Vec<(f64, usize)> = Vec::new();
    for (i, g) in prog.set.inequalities.iter().enumerate() {
        let v = g.eval(&a)? / (1.0 + g.max_abs_coeff());
        if v <= 1e-2 {
            near.push((v, i));
        }
    }
    near.sort_by(|p, q| p.0.total_cmp(&q.0));
    near.truncate(n + 4);
    let free = n.saturating_sub(prog.set.equalities.len());
    let mut subsets: Vec<Vec<usize>> = vec![Vec::new()];
    for &(_, i) in &near {
        let grown: Vec<Vec<usize>> = subsets
            .iter()
            .filter(|s| s.len() < free)
            .map(|s| s.iter().copied().chain([i]).collect())
            .collect();
        subsets.extend(grown);
    }
    let mut out = Vec::new();
    for s in subsets {
        if let Some(w) = kkt_newton(prog, z, &s)? {
            out.push(w);
        }
    }
    Ok(out)
}
