//! Jacobian augmentation: adds polynomial equalities that every minimizer
//! (satisfying a constraint qualification or being a critical point) obeys,
//! so that the moment hierarchy for the augmented program converges finitely.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::moment::PolynomialProgram;
use crate::poly::{Polynomial, SemialgebraicSet};

/// Default cap on the number of added equalities.
pub const DEFAULT_CAP: usize = 2000;

/// Columns `[grad f, grad h_1.., grad g_1..]`, each a vector of `n` partials.
pub fn jacobian_matrix(prog: &PolynomialProgram) -> Vec<Vec<Polynomial>> {
    let sp = &prog.set.space;
    std::iter::once(&prog.objective)
        .chain(&prog.set.equalities)
        .chain(&prog.set.inequalities)
        .map(|p| p.gradient(sp))
        .collect()
}

fn det(m: &[Vec<Polynomial>]) -> Polynomial {
    let k = m.len();
    match k {
        0 => Polynomial::constant(1.0),
        1 => m[0][0].clone(),
        2 => &(&m[0][0] * &m[1][1]) - &(&m[0][1] * &m[1][0]),
        _ => {
            let mut acc = Polynomial::zero();
            for c in 0..k {
                if m[0][c].is_zero() {
                    continue;
                }
                let minor: Vec<Vec<Polynomial>> = m[1..]
                    .iter()
                    .map(|row| row.iter().enumerate().filter(|&(j, _)| j != c).map(|(_, p)| p.clone()).collect())
                    .collect();
                let term = &m[0][c] * &det(&minor);
                acc = if c % 2 == 0 { &acc + &term } else { &acc - &term };
            }
            acc
        }
    }
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// All maximal minors of an `n x c` matrix given by columns, without zero or
/// repeated entries. Empty when `n < c`.
pub fn minor_equations(columns: &[Vec<Polynomial>]) -> Vec<Polynomial> {
    let c = columns.len();
    let Some(n) = columns.first().map(|v| v.len()) else {
        return Vec::new();
    };
    if n < c {
        return Vec::new();
    }
    subsets(n, c)
        .into_iter()
        .map(|rows| {
            let m: Vec<Vec<Polynomial>> =
                rows.iter().map(|&r| columns.iter().map(|col| col[r].clone()).collect()).collect();
            det(&m)
        })
        .filter(|p| !p.is_zero())
        .fold(Vec::new(), |mut acc: Vec<Polynomial>, p| {
            if !acc.contains(&p) {
                acc.push(p);
            }
            acc
        })
}

/// Sign-normalized, unit-scaled form used for deduplication.
fn canonical(p: &Polynomial) -> Polynomial {
    let q = p.normalized();
    let lead = q.terms().next().map_or(1.0, |(_, c)| c);
    if lead < 0.0 {
        q.scale(-1.0)
    } else {
        q
    }
}

fn key(p: &Polynomial) -> String {
    p.terms().map(|(m, c)| format!("{m}:{:.12e};", c)).collect()
}

/// Where an added equality came from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Provenance {
    /// The subset `J` of inequality indices.
    pub subset: Vec<usize>,
    /// Row indices of the minor of `B^J`.
    pub rows: Vec<usize>,
}

/// A program together with its Jacobian equalities `phi`.
#[derive(Clone, Debug)]
pub struct JacobianAugmentation {
    pub base: PolynomialProgram,
    pub phi: Vec<Polynomial>,
    pub provenance: Vec<Provenance>,
}

impl JacobianAugmentation {
    /// The augmented program: the base constraints plus `phi = 0`.
    pub fn problem(&self) -> Result<PolynomialProgram> {
        let mut eqs = self.base.set.equalities.clone();
        eqs.extend(self.phi.iter().cloned());
        let set = SemialgebraicSet::new(self.base.set.space.clone(), eqs, self.base.set.inequalities.clone())?;
        PolynomialProgram::new(self.base.objective.clone(), set)
    }
}

/// Add `eta * prod_{j not in J} g_j = 0` for every `J` with `|J| <= n - m1`,
/// where `eta` ranges over the maximal minors of `[grad f, grad h, grad g_J]`.
/// Each equality is scaled to unit largest coefficient; duplicates are dropped.
pub fn augment(prog: &PolynomialProgram, cap: usize) -> Result<JacobianAugmentation> {
    let n = prog.set.space.dim;
    let m1 = prog.set.equalities.len();
    let m2 = prog.set.inequalities.len();
    let cols = jacobian_matrix(prog);
    let mut phi = Vec::new();
    let mut provenance = Vec::new();
    let mut seen = HashSet::new();
    for size in 0..=n.saturating_sub(m1).min(m2) {
        for j in subsets(m2, size) {
            let mut b: Vec<Vec<Polynomial>> = cols[..1 + m1].to_vec();
            b.extend(j.iter().map(|&i| cols[1 + m1 + i].clone()));
            let c = b.len();
            if n < c {
                continue;
            }
            let mut prod = Polynomial::constant(1.0);
            for i in (0..m2).filter(|i| !j.contains(i)) {
                prod = &prod * &prog.set.inequalities[i];
            }
            for rows in subsets(n, c) {
                let m: Vec<Vec<Polynomial>> =
                    rows.iter().map(|&r| b.iter().map(|col| col[r].clone()).collect()).collect();
                let eta = det(&m);
                if eta.is_zero() {
                    continue;
                }
                let p = canonical(&(&eta * &prod));
                if p.is_zero() || !seen.insert(key(&p)) {
                    continue;
                }
                phi.push(p);
                provenance.push(Provenance { subset: j.clone(), rows });
                if phi.len() > cap {
                    return Err(Error::Problem(format!(
                        "the Jacobian augmentation exceeds {cap} equalities"
                    )));
                }
            }
        }
    }
    Ok(JacobianAugmentation { base: prog.clone(), phi, provenance })
}
