//! Polynomial matrix inequalities `G(x) >= 0` as semi-infinite constraints
//! `u^T G(x) u >= 0` over the unit sphere.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::exchange::SippProblem;
use crate::poly::{Assignment, Polynomial, SemialgebraicSet, Var, VariableSpace};

/// Largest size accepted by [`char_poly`].
pub const MAX_CHAR_POLY_SIZE: usize = 6;

/// Symmetric matrix of polynomials in `x`, stored as its upper triangle.
#[derive(Clone, Debug, PartialEq)]
pub struct PolynomialMatrix {
    size: usize,
    upper: Vec<Polynomial>,
}

impl PolynomialMatrix {
    /// From full rows; fails unless `G_ij = G_ji`.
    pub fn from_rows(rows: Vec<Vec<Polynomial>>) -> Result<Self> {
        let m = rows.len();
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::Problem("the matrix must be square".into()));
        }
        let mut upper = Vec::with_capacity(m * (m + 1) / 2);
        for i in 0..m {
            for j in i..m {
                if rows[i][j].max_coeff_diff(&rows[j][i]) > 0.0 {
                    return Err(Error::Problem(format!("entries ({}, {}) and ({}, {}) differ", i + 1, j + 1, j + 1, i + 1)));
                }
                upper.push(rows[i][j].clone());
            }
        }
        Ok(PolynomialMatrix { size: m, upper })
    }

    pub fn diagonal(d: Vec<Polynomial>) -> Self {
        let m = d.len();
        let rows = (0..m)
            .map(|i| (0..m).map(|j| if i == j { d[i].clone() } else { Polynomial::zero() }).collect())
            .collect();
        Self::from_rows(rows).expect("diagonal matrices are symmetric")
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, i: usize, j: usize) -> &Polynomial {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        &self.upper[a * self.size - a * (a + 1) / 2 + b]
    }

    pub fn rows(&self) -> Vec<Vec<Polynomial>> {
        (0..self.size).map(|i| (0..self.size).map(|j| self.get(i, j).clone()).collect()).collect()
    }

    /// Entrywise evaluation.
    pub fn eval(&self, space: &VariableSpace, x: &[f64]) -> Result<DMatrix<f64>> {
        let a = Assignment::of(space, x)?;
        let mut out = DMatrix::zeros(self.size, self.size);
        for i in 0..self.size {
            for j in i..self.size {
                let v = self.get(i, j).eval(&a)?;
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        Ok(out)
    }

    pub fn min_eigenvalue(&self, space: &VariableSpace, x: &[f64]) -> Result<f64> {
        Ok(self.eval(space, x)?.symmetric_eigenvalues().min())
    }
}

/// `u^T G(x) u` in the variables `u1..um`.
pub fn quadratic_form(g: &PolynomialMatrix) -> Polynomial {
    let mut out = Polynomial::zero();
    for i in 0..g.size() {
        for j in i..g.size() {
            let c = if i == j { 1.0 } else { 2.0 };
            let uu = &Polynomial::var(Var::u(i as u32 + 1)) * &Polynomial::var(Var::u(j as u32 + 1));
            out = &out + &(&(g.get(i, j) * &uu).scale(c));
        }
    }
    out
}

/// The unit sphere `|u|^2 - 1 = 0` in `R^m`.
pub fn unit_sphere(m: usize) -> SemialgebraicSet {
    let mut h = Polynomial::constant(-1.0);
    for i in 1..=m {
        let v = Polynomial::var(Var::u(i as u32));
        h = &h + &(&v * &v);
    }
    SemialgebraicSet::new(VariableSpace::u(m), vec![h], vec![]).expect("sphere is over u")
}

/// `min f(x)` over `x_set` with `G(x) >= 0`.
pub fn pmi_to_sipp(f: &Polynomial, g: &PolynomialMatrix, x_set: SemialgebraicSet) -> Result<SippProblem> {
    for i in 0..g.size() {
        for j in i..g.size() {
            if !g.get(i, j).uses_only(&x_set.space) {
                return Err(Error::SpaceMismatch(format!("entry ({}, {}) uses variables outside x", i + 1, j + 1)));
            }
        }
    }
    SippProblem::new(f.clone(), quadratic_form(g), x_set, unit_sphere(g.size()))
}

fn det(m: &[Vec<Polynomial>]) -> Polynomial {
    match m.len() {
        0 => Polynomial::constant(1.0),
        1 => m[0][0].clone(),
        k => {
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

/// `g_1..g_m` with `det(tI - G) = t^m - g_1 t^(m-1) + g_2 t^(m-2) - ...`,
/// i.e. `g_k` is the sum of the principal `k x k` minors.
pub fn char_poly(g: &PolynomialMatrix) -> Result<Vec<Polynomial>> {
    let m = g.size();
    if m > MAX_CHAR_POLY_SIZE {
        return Err(Error::Dimension { expected: MAX_CHAR_POLY_SIZE, got: m });
    }
    let mut out = vec![Polynomial::zero(); m];
    for mask in 1u32..(1 << m) {
        let idx: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
        let sub: Vec<Vec<Polynomial>> =
            idx.iter().map(|&i| idx.iter().map(|&j| g.get(i, j).clone()).collect()).collect();
        let k = idx.len();
        out[k - 1] = &out[k - 1] + &det(&sub);
    }
    Ok(out)
}

/// CSV of `x1, x2, g_1(x), .., g_m(x), feasible` on a regular grid.
pub fn feasibility_grid_csv(
    coeffs: &[Polynomial],
    space: &VariableSpace,
    x_range: (f64, f64),
    y_range: (f64, f64),
    steps: usize,
) -> Result<String> {
    if space.dim != 2 {
        return Err(Error::Dimension { expected: 2, got: space.dim });
    }
    let steps = steps.max(2);
    let mut out = String::from("x1,x2");
    for i in 1..=coeffs.len() {
        let _ = write!(out, ",g{i}");
    }
    out.push_str(",feasible\n");
    for a in 0..steps {
        let x1 = x_range.0 + (x_range.1 - x_range.0) * a as f64 / (steps - 1) as f64;
        for b in 0..steps {
            let x2 = y_range.0 + (y_range.1 - y_range.0) * b as f64 / (steps - 1) as f64;
            let vals: Vec<f64> = coeffs.iter().map(|c| c.eval_at(space, &[x1, x2])).collect::<Result<_>>()?;
            let _ = write!(out, "{x1},{x2}");
            for v in &vals {
                let _ = write!(out, ",{v}");
            }
            let _ = writeln!(out, ",{}", u8::from(vals.iter().all(|&v| v >= -1e-9)));
        }
    }
    Ok(out)
}
