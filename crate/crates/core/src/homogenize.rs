//! Homogenization of the index variables: `q~(u0, u) = u0^d q(u / u0)`.
//! Replaces a noncompact index set by a subset of the unit sphere in one
//! more dimension.

use crate::error::{Error, Result};
use crate::exchange::SippProblem;
use crate::poly::{Assignment, Block, Monomial, Polynomial, SemialgebraicSet, Var, VariableSpace};

/// The homogenizing variable.
pub const U0: Var = Var::u(0);

/// Multiply each term by `u0^(d - u-degree)`. The x-variables are treated
/// as coefficients.
pub fn homogenize_poly(q: &Polynomial, d: u32) -> Result<Polynomial> {
    if q.vars().contains(&U0) {
        return Err(Error::Problem("polynomial already uses u0".into()));
    }
    let du = q.degree_in(Block::U).max(0) as u32;
    if d < du {
        return Err(Error::Problem(format!("target degree {d} is below the u-degree {du}")));
    }
    Ok(Polynomial::from_terms(q.terms().map(|(m, c)| {
        let extra = d - m.degree_in(Block::U);
        (m.mul(&Monomial::var(U0).pow(extra)), c)
    })))
}

/// `u0^d_g g(x, u/u0)` with `d_g` the largest u-degree over the terms.
pub fn homogenize_coupling(g: &Polynomial) -> Result<Polynomial> {
    homogenize_poly(g, g.degree_in(Block::U).max(0) as u32)
}

/// The index set `{h~_j (same sense as h_j), |u~|^2 = 1, u0 >= 0}`. When `U`
/// is the whole space only the sphere is kept.
pub fn homogenize_index_set(u: &SemialgebraicSet) -> Result<SemialgebraicSet> {
    if u.space.block != Block::U || u.space.first_label != 1 {
        return Err(Error::SpaceMismatch("homogenization expects the index space u1..up".into()));
    }
    let hom = |p: &Polynomial| homogenize_poly(p, p.degree().max(0) as u32);
    let space = VariableSpace::u_homogeneous(u.space.dim);
    let mut eqs = u.equalities.iter().map(hom).collect::<Result<Vec<_>>>()?;
    let mut ineqs = u.inequalities.iter().map(hom).collect::<Result<Vec<_>>>()?;
    let mut sphere = Polynomial::constant(-1.0);
    for v in space.vars() {
        sphere = &sphere + &(&Polynomial::var(v) * &Polynomial::var(v));
    }
    if !u.is_unconstrained() {
        ineqs.push(Polynomial::var(U0));
    }
    eqs.push(sphere);
    SemialgebraicSet::new(space, eqs, ineqs)
}

/// The problem over `(x, u~)`, with a compact index set.
pub fn homogenize_problem(p: &SippProblem) -> Result<SippProblem> {
    let mut out = p.clone();
    out.coupling = homogenize_coupling(&p.coupling)?;
    out.u_set = homogenize_index_set(&p.u_set)?;
    out.u_compact = true;
    out.homogenized = true;
    out.validate()?;
    Ok(out)
}

/// `(1, u) / sqrt(1 + |u|^2)`, the image of an index point on the sphere.
pub fn lift_point(u: &[f64]) -> Vec<f64> {
    let s = (1.0 + u.iter().map(|v| v * v).sum::<f64>()).sqrt();
    std::iter::once(1.0 / s).chain(u.iter().map(|v| v / s)).collect()
}

/// Inverse of [`lift_point`] for `u0 > 0`.
pub fn dehomogenize_point(ut: &[f64]) -> Option<Vec<f64>> {
    (ut[0] > 0.0).then(|| ut[1..].iter().map(|v| v / ut[0]).collect())
}

/// Sign agreement of `q(u)` and `q~(lift(u))` over sample points of `U`.
/// A validation utility: the two differ by the positive factor
/// `(1 + |u|^2)^(-d/2)`.
pub fn positivity_transfer_check(q: &Polynomial, u: &SemialgebraicSet, samples: &[Vec<f64>]) -> Result<bool> {
    let d = q.degree_in(Block::U).max(0) as u32;
    let qt = homogenize_poly(q, d)?;
    let tspace = VariableSpace::u_homogeneous(u.space.dim);
    for s in samples {
        let a = q.eval(&Assignment::of(&u.space, s)?)?;
        let b = qt.eval(&Assignment::of(&tspace, &lift_point(s))?)?;
        let scale = (1.0 + s.iter().map(|v| v * v).sum::<f64>()).powf(d as f64 / 2.0);
        if (a > 0.0) != (b > 0.0) && (a - b * scale).abs() > 1e-9 * (1.0 + a.abs()) {
            return Ok(false);
        }
    }
    Ok(true)
}
