//! Sparse real polynomials over two variable blocks: the decision variables
//! `x1..xn` and the index variables `u1..up` (or `u0..up` after
//! homogenization).

pub mod parse;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use parse::parse_polynomial;

/// Coefficients with magnitude below this are dropped after every operation.
pub const COEFF_EPS: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Block {
    X,
    U,
}

impl Block {
    pub fn prefix(self) -> char {
        match self {
            Block::X => 'x',
            Block::U => 'u',
        }
    }
}

/// A named coordinate such as `x2` or `u0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var {
    pub block: Block,
    pub label: u32,
}

impl Var {
    pub const fn x(label: u32) -> Self {
        Var { block: Block::X, label }
    }
    pub const fn u(label: u32) -> Self {
        Var { block: Block::U, label }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.block.prefix(), self.label)
    }
}

/// An ordered list of coordinates of one block.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VariableSpace {
    pub block: Block,
    pub first_label: u32,
    pub dim: usize,
}

impl VariableSpace {
    pub fn new(block: Block, first_label: u32, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::SpaceMismatch("a variable space needs dimension >= 1".into()));
        }
        Ok(VariableSpace { block, first_label, dim })
    }

    /// `x1..xn`.
    pub fn x(n: usize) -> Self {
        VariableSpace { block: Block::X, first_label: 1, dim: n.max(1) }
    }

    /// `u1..up`.
    pub fn u(p: usize) -> Self {
        VariableSpace { block: Block::U, first_label: 1, dim: p.max(1) }
    }

    /// `u0..up`, the space after homogenization.
    pub fn u_homogeneous(p: usize) -> Self {
        VariableSpace { block: Block::U, first_label: 0, dim: p + 1 }
    }

    pub fn name(&self) -> String {
        format!("{}{}..{}", self.block.prefix(), self.first_label, self.first_label as usize + self.dim - 1)
    }

    pub fn vars(&self) -> Vec<Var> {
        (0..self.dim)
            .map(|i| Var { block: self.block, label: self.first_label + i as u32 })
            .collect()
    }

    pub fn var(&self, i: usize) -> Var {
        Var { block: self.block, label: self.first_label + i as u32 }
    }

    pub fn contains(&self, v: Var) -> bool {
        v.block == self.block
            && v.label >= self.first_label
            && ((v.label - self.first_label) as usize) < self.dim
    }

    /// Position of `v` inside the space.
    pub fn position(&self, v: Var) -> Option<usize> {
        self.contains(v).then(|| (v.label - self.first_label) as usize)
    }
}

/// A power product, stored as sorted `(var, exponent)` pairs with positive exponents.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Monomial(Vec<(Var, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(v: Var) -> Self {
        Monomial(vec![(v, 1)])
    }

    pub fn from_pairs<I: IntoIterator<Item = (Var, u32)>>(pairs: I) -> Self {
        let mut map: BTreeMap<Var, u32> = BTreeMap::new();
        for (v, e) in pairs {
            if e > 0 {
                *map.entry(v).or_insert(0) += e;
            }
        }
        Monomial(map.into_iter().collect())
    }

    /// Build from a dense exponent vector over `vars`.
    pub fn from_exponents(vars: &[Var], exps: &[u8]) -> Self {
        Self::from_pairs(vars.iter().copied().zip(exps.iter().map(|&e| e as u32)))
    }

    pub fn pairs(&self) -> &[(Var, u32)] {
        &self.0
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&(_, e)| e).sum()
    }

    pub fn degree_in(&self, block: Block) -> u32 {
        self.0.iter().filter(|(v, _)| v.block == block).map(|&(_, e)| e).sum()
    }

    pub fn exponent(&self, v: Var) -> u32 {
        self.0.iter().find(|(w, _)| *w == v).map_or(0, |&(_, e)| e)
    }

    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        self.0.iter().map(|&(v, _)| v)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].0.cmp(&other.0[j].0) {
                Ordering::Less => {
                    out.push(self.0[i]);
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(other.0[j]);
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((self.0[i].0, self.0[i].1 + other.0[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Monomial(out)
    }

    pub fn pow(&self, k: u32) -> Monomial {
        if k == 0 {
            return Monomial::one();
        }
        Monomial(self.0.iter().map(|&(v, e)| (v, e * k)).collect())
    }

    /// Split into the part in `block` and the rest.
    pub fn split(&self, block: Block) -> (Monomial, Monomial) {
        let (a, b): (Vec<_>, Vec<_>) = self.0.iter().partition(|(v, _)| v.block == block);
        (Monomial(a), Monomial(b))
    }

    /// Dense exponents over `vars`; `None` if the monomial uses a variable not in `vars`.
    pub fn exponents(&self, vars: &[Var]) -> Option<Vec<u8>> {
        let mut out = vec![0u8; vars.len()];
        for &(v, e) in &self.0 {
            let i = vars.iter().position(|&w| w == v)?;
            out[i] = u8::try_from(e).ok()?;
        }
        Some(out)
    }

    fn eval_with(&self, vals: &HashMap<Var, f64>) -> Result<f64> {
        let mut acc = 1.0;
        for &(v, e) in &self.0 {
            let x = *vals.get(&v).ok_or(Error::MissingCoordinate(v))?;
            acc *= x.powi(e as i32);
        }
        Ok(acc)
    }
}

/// Graded lexicographic: total degree first, then larger exponents on earlier
/// variables first (`1, x1, x2, x1^2, x1 x2, x2^2, ...`). The x-block comes
/// before the u-block and labels increase within a block.
impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        match self.degree().cmp(&other.degree()) {
            Ordering::Equal => {}
            o => return o,
        }
        let (mut i, mut j) = (0, 0);
        loop {
            match (self.0.get(i), other.0.get(j)) {
                (None, None) => return Ordering::Equal,
                // same degree: the side that ran out cannot be ahead
                (None, Some(_)) => return Ordering::Greater,
                (Some(_), None) => return Ordering::Less,
                (Some(&(va, ea)), Some(&(vb, eb))) => {
                    if va != vb {
                        // the earlier variable carries a positive exponent on this side only
                        return if va < vb { Ordering::Less } else { Ordering::Greater };
                    }
                    if ea != eb {
                        return eb.cmp(&ea);
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for &(v, e) in &self.0 {
            if !first {
                write!(f, " ")?;
            }
            first = false;
            if e == 1 {
                write!(f, "{v}")?;
            } else {
                write!(f, "{v}^{e}")?;
            }
        }
        Ok(())
    }
}

/// All monomials in `space` of degree at most `d`, in graded lexicographic order.
/// The length is `C(n + d, d)`.
pub fn monomial_basis(space: &VariableSpace, d: usize) -> Vec<Monomial> {
    let vars = space.vars();
    exponent_basis(vars.len(), d)
        .iter()
        .map(|e| Monomial::from_exponents(&vars, e))
        .collect()
}

/// Dense exponent vectors of degree at most `d` in `n` variables, graded lex.
pub fn exponent_basis(n: usize, d: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::with_capacity(binomial(n + d, d));
    for deg in 0..=d {
        let mut cur = vec![0u8; n];
        push_degree(&mut out, &mut cur, 0, deg);
    }
    out
}

fn push_degree(out: &mut Vec<Vec<u8>>, cur: &mut Vec<u8>, pos: usize, rem: usize) {
    let n = cur.len();
    if n == 0 {
        if rem == 0 {
            out.push(Vec::new());
        }
        return;
    }
    if pos == n - 1 {
        cur[pos] = rem as u8;
        out.push(cur.clone());
        cur[pos] = 0;
        return;
    }
    for e in (0..=rem).rev() {
        cur[pos] = e as u8;
        push_degree(out, cur, pos + 1, rem - e);
    }
    cur[pos] = 0;
}

pub fn binomial(n: usize, k: usize) -> usize {
    let k = k.min(n.saturating_sub(k));
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r as usize
}

/// A map from coordinates to values, used for evaluation and substitution.
#[derive(Clone, Debug, Default)]
pub struct Assignment(HashMap<Var, f64>);

impl Assignment {
    pub fn new() -> Self {
        Assignment(HashMap::new())
    }

    /// Assign `values` to the coordinates of `space`.
    pub fn with(mut self, space: &VariableSpace, values: &[f64]) -> Result<Self> {
        if values.len() != space.dim {
            return Err(Error::Dimension { expected: space.dim, got: values.len() });
        }
        for (v, &x) in space.vars().into_iter().zip(values) {
            self.0.insert(v, x);
        }
        Ok(self)
    }

    pub fn of(space: &VariableSpace, values: &[f64]) -> Result<Self> {
        Self::new().with(space, values)
    }

    pub fn set(&mut self, v: Var, x: f64) {
        self.0.insert(v, x);
    }

    pub fn get(&self, v: Var) -> Option<f64> {
        self.0.get(&v).copied()
    }
}

/// A real polynomial with sparse coefficients keyed by graded-lex monomials.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Polynomial {
    terms: BTreeMap<Monomial, f64>,
}

impl Polynomial {
    pub fn zero() -> Self {
        Polynomial::default()
    }

    pub fn constant(c: f64) -> Self {
        Self::term(Monomial::one(), c)
    }

    pub fn var(v: Var) -> Self {
        Self::term(Monomial::var(v), 1.0)
    }

    pub fn term(m: Monomial, c: f64) -> Self {
        let mut p = Polynomial::zero();
        p.add_term(m, c);
        p
    }

    pub fn from_terms<I: IntoIterator<Item = (Monomial, f64)>>(terms: I) -> Self {
        let mut p = Polynomial::zero();
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    /// Accumulate `c * m` into the polynomial.
    pub fn add_term(&mut self, m: Monomial, c: f64) {
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                if c.abs() >= COEFF_EPS {
                    v.insert(c);
                }
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().abs() < COEFF_EPS {
                    o.remove();
                }
            }
        }
    }

    fn prune(mut self) -> Self {
        self.terms.retain(|_, c| c.abs() >= COEFF_EPS);
        self
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, f64)> {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, m: &Monomial) -> f64 {
        self.terms.get(m).copied().unwrap_or(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; `-1` for the zero polynomial.
    pub fn degree(&self) -> i32 {
        self.terms.keys().map(|m| m.degree() as i32).max().unwrap_or(-1)
    }

    /// Largest degree of any term restricted to `block`; `-1` for the zero polynomial.
    pub fn degree_in(&self, block: Block) -> i32 {
        self.terms.keys().map(|m| m.degree_in(block) as i32).max().unwrap_or(-1)
    }

    /// `ceil(deg / 2)`, with 0 for constants and the zero polynomial.
    pub fn half_degree(&self) -> usize {
        (self.degree().max(0) as usize).div_ceil(2)
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.terms.keys().flat_map(|m| m.vars()).collect()
    }

    pub fn uses_only(&self, space: &VariableSpace) -> bool {
        self.vars().into_iter().all(|v| space.contains(v))
    }

    pub fn uses_only_blocks(&self, spaces: &[&VariableSpace]) -> bool {
        self.vars().into_iter().all(|v| spaces.iter().any(|s| s.contains(v)))
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |a, c| a.max(c.abs()))
    }

    /// Scaled to unit largest coefficient magnitude; the zero polynomial is unchanged.
    pub fn normalized(&self) -> Self {
        let s = self.max_abs_coeff();
        if s == 0.0 {
            self.clone()
        } else {
            self.scale(1.0 / s)
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        Polynomial { terms: self.terms.iter().map(|(m, &v)| (m.clone(), v * c)).collect() }.prune()
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Polynomial::constant(1.0);
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    pub fn eval(&self, point: &Assignment) -> Result<f64> {
        let mut acc = 0.0;
        for (m, &c) in &self.terms {
            acc += c * m.eval_with(&point.0)?;
        }
        Ok(acc)
    }

    /// Evaluate a polynomial in the coordinates of `space` only.
    pub fn eval_at(&self, space: &VariableSpace, values: &[f64]) -> Result<f64> {
        self.eval(&Assignment::of(space, values)?)
    }

    /// Replace the assigned coordinates by their values, keeping the others symbolic.
    pub fn substitute(&self, point: &Assignment) -> Self {
        let mut out = Polynomial::zero();
        for (m, &c) in &self.terms {
            let mut coef = c;
            let mut rest = Vec::new();
            for &(v, e) in m.pairs() {
                match point.get(v) {
                    Some(x) => coef *= x.powi(e as i32),
                    None => rest.push((v, e)),
                }
            }
            out.add_term(Monomial(rest), coef);
        }
        out.prune()
    }

    /// Replace each variable `v` by the polynomial `map(v)` (or keep it when `None`).
    pub fn compose<F: Fn(Var) -> Option<Polynomial>>(&self, map: F) -> Self {
        let mut cache: HashMap<Var, Option<Polynomial>> = HashMap::new();
        let mut out = Polynomial::zero();
        for (m, &c) in &self.terms {
            let mut t = Polynomial::constant(c);
            for &(v, e) in m.pairs() {
                let img = cache.entry(v).or_insert_with(|| map(v)).clone();
                let base = img.unwrap_or_else(|| Polynomial::var(v));
                t = &t * &base.pow(e);
            }
            out = &out + &t;
        }
        out
    }

    pub fn partial(&self, v: Var) -> Self {
        let mut out = Polynomial::zero();
        for (m, &c) in &self.terms {
            let e = m.exponent(v);
            if e == 0 {
                continue;
            }
            let pairs = m.pairs().iter().map(|&(w, f)| if w == v { (w, f - 1) } else { (w, f) });
            out.add_term(Monomial::from_pairs(pairs), c * e as f64);
        }
        out.prune()
    }

    /// Partial derivatives with respect to every coordinate of `space`.
    pub fn gradient(&self, space: &VariableSpace) -> Vec<Polynomial> {
        space.vars().into_iter().map(|v| self.partial(v)).collect()
    }

    /// Dense exponent form over `vars`.
    pub fn dense_terms(&self, vars: &[Var]) -> Result<Vec<(Vec<u8>, f64)>> {
        self.terms
            .iter()
            .map(|(m, &c)| {
                m.exponents(vars).map(|e| (e, c)).ok_or_else(|| {
                    Error::SpaceMismatch(format!("monomial {m} uses a variable outside the relaxation space"))
                })
            })
            .collect()
    }

    /// Largest coefficient difference against `other`.
    pub fn max_coeff_diff(&self, other: &Polynomial) -> f64 {
        (self - other).max_abs_coeff()
    }
}

impl<'a> Add<&'a Polynomial> for &'a Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (m, &c) in &rhs.terms {
            *out.terms.entry(m.clone()).or_insert(0.0) += c;
        }
        out.prune()
    }
}

impl<'a> Sub<&'a Polynomial> for &'a Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (m, &c) in &rhs.terms {
            *out.terms.entry(m.clone()).or_insert(0.0) -= c;
        }
        out.prune()
    }
}

impl<'a> Mul<&'a Polynomial> for &'a Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        let mut terms: BTreeMap<Monomial, f64> = BTreeMap::new();
        for (a, &ca) in &self.terms {
            for (b, &cb) in &rhs.terms {
                *terms.entry(a.mul(b)).or_insert(0.0) += ca * cb;
            }
        }
        Polynomial { terms }.prune()
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<Polynomial> for Polynomial {
            type Output = Polynomial;
            fn $m(self, rhs: Polynomial) -> Polynomial {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

/// Shortest round-trip decimal, switching to exponent form for very small or large magnitudes.
pub(crate) fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && !(1e-5..1e16).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

/// Canonical text form: signed terms in graded lex order, every coefficient
/// printed, e.g. `-0.25 + 1 x1^2 u2`. Parsing the output returns the same
/// polynomial.
impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (m, &c)) in self.terms.iter().enumerate() {
            let body = if k == 0 {
                fmt_f64(c)
            } else {
                write!(f, " {} ", if c < 0.0 { '-' } else { '+' })?;
                fmt_f64(c.abs())
            };
            write!(f, "{body}")?;
            if !m.is_one() {
                write!(f, " {m}")?;
            }
        }
        Ok(())
    }
}

impl std::str::FromStr for Polynomial {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        parse_polynomial(s)
    }
}

/// `{ z in space : h_j(z) = 0, g_i(z) >= 0 }`.
#[derive(Clone, Debug, PartialEq)]
pub struct SemialgebraicSet {
    pub space: VariableSpace,
    pub equalities: Vec<Polynomial>,
    pub inequalities: Vec<Polynomial>,
}

impl SemialgebraicSet {
    pub fn new(space: VariableSpace, equalities: Vec<Polynomial>, inequalities: Vec<Polynomial>) -> Result<Self> {
        for p in equalities.iter().chain(&inequalities) {
            if !p.uses_only(&space) {
                return Err(Error::SpaceMismatch(format!(
                    "constraint `{p}` uses variables outside {}",
                    space.name()
                )));
            }
        }
        Ok(SemialgebraicSet { space, equalities, inequalities })
    }

    /// The whole space.
    pub fn full(space: VariableSpace) -> Self {
        SemialgebraicSet { space, equalities: Vec::new(), inequalities: Vec::new() }
    }

    pub fn is_unconstrained(&self) -> bool {
        self.equalities.is_empty() && self.inequalities.is_empty()
    }

    /// Largest constraint violation at `point`: `max(|h_j|, -g_i, 0)`.
    pub fn violation(&self, point: &[f64]) -> Result<f64> {
        let a = Assignment::of(&self.space, point)?;
        let mut worst: f64 = 0.0;
        for h in &self.equalities {
            worst = worst.max(h.eval(&a)?.abs());
        }
        for g in &self.inequalities {
            worst = worst.max(-g.eval(&a)?);
        }
        Ok(worst)
    }

    pub fn contains(&self, point: &[f64], tol: f64) -> Result<bool> {
        Ok(self.violation(point)? <= tol)
    }

    /// `max(1, d_g, d_h)` over the constraints.
    pub fn half_degree(&self) -> usize {
        self.equalities
            .iter()
            .chain(&self.inequalities)
            .map(|p| p.half_degree())
            .max()
            .unwrap_or(1)
            .max(1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Polynomial {
        s.parse().unwrap()
    }

    #[test]
    fn graded_lex_order_two_vars() {
        let basis = monomial_basis(&VariableSpace::x(2), 2);
        let names: Vec<String> = basis.iter().map(|m| m.to_string()).collect();
        assert_eq!(names, ["", "x1", "x2", "x1^2", "x1 x2", "x2^2"]);
    }

    #[test]
    fn basis_length_is_binomial() {
        for n in 1..5 {
            for d in 0..5 {
                assert_eq!(monomial_basis(&VariableSpace::x(n), d).len(), binomial(n + d, d));
            }
        }
    }

    #[test]
    fn basis_sorted_matches_ord() {
        let b = monomial_basis(&VariableSpace::u(3), 3);
        for w in b.windows(2) {
            assert!(w[0] < w[1], "{} !< {}", w[0], w[1]);
        }
    }

    #[test]
    fn x_block_precedes_u_block() {
        assert!(Monomial::var(Var::x(2)) < Monomial::var(Var::u(0)));
    }

    #[test]
    fn zero_has_degree_minus_one() {
        assert_eq!(Polynomial::zero().degree(), -1);
        assert_eq!((&p("x1 + 1") - &p("1 + x1")).degree(), -1);
    }

    #[test]
    fn arithmetic_and_eval() {
        let a = p("x1^2 - 2 x1 u1 + 3");
        let b = p("x1 - u1");
        let pt = Assignment::new().with(&VariableSpace::x(1), &[1.5]).unwrap().with(&VariableSpace::u(1), &[-0.5]).unwrap();
        let ab = &a * &b;
        let expect = a.eval(&pt).unwrap() * b.eval(&pt).unwrap();
        assert!((ab.eval(&pt).unwrap() - expect).abs() < 1e-12);
        assert_eq!(ab.degree(), 3);
        assert_eq!(ab.degree_in(Block::U), 2);
    }

    #[test]
    fn gradient_of_quadratic() {
        let f = p("x1^2 x2 + 3 x2");
        let g = f.gradient(&VariableSpace::x(2));
        assert_eq!(g[0], p("2 x1 x2"));
        assert_eq!(g[1], p("x1^2 + 3"));
    }

    #[test]
    fn missing_coordinate_is_error() {
        let f = p("x1 + u1");
        let r = f.eval(&Assignment::of(&VariableSpace::x(1), &[1.0]).unwrap());
        assert!(matches!(r, Err(Error::MissingCoordinate(v)) if v == Var::u(1)));
    }

    #[test]
    fn substitution() {
        let g = p("x1 u1^2 + x2 u1 - 1");
        let s = g.substitute(&Assignment::of(&VariableSpace::x(2), &[2.0, -1.0]).unwrap());
        assert_eq!(s, p("2 u1^2 - u1 - 1"));
    }

    #[test]
    fn render_example() {
        let f = p("u2 x1^2 - 0.25");
        assert_eq!(f.to_string(), "-0.25 + 1 x1^2 u2");
    }

    #[test]
    fn set_rejects_foreign_variables() {
        let r = SemialgebraicSet::new(VariableSpace::x(2), vec![], vec![p("1 - u1")]);
        assert!(matches!(r, Err(Error::SpaceMismatch(_))));
    }
}
