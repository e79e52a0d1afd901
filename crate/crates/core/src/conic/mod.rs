//! Linear conic programs over products of PSD cones, in the affine form
//!
//! ```text
//! minimize    c^T y
//! subject to  F_b(y) = A_b0 + sum_i y_i A_bi  is PSD for every block b,
//!             E y = e,
//! ```
//!
//! with free `y`. Solved by an embedded primal-dual interior point method.

mod ipm;
pub mod sdpa;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use ipm::{InteriorPoint, IpmOptions, IterateRecord};

/// One entry of a symmetric matrix, stored once with `row <= col`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymEntry {
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

/// A sparse symmetric matrix given by its upper triangle.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseSym {
    pub entries: Vec<SymEntry>,
}

impl SparseSym {
    pub fn new() -> Self {
        SparseSym::default()
    }

    /// Add `value` at `(i, j)`; the symmetric partner is implied.
    pub fn push(&mut self, i: usize, j: usize, value: f64) {
        let (row, col) = if i <= j { (i, j) } else { (j, i) };
        self.entries.push(SymEntry { row, col, value });
    }

    /// Merge duplicates and drop zeros, sorting by position.
    pub fn compress(&mut self) {
        self.entries.sort_by_key(|e| (e.row, e.col));
        let mut out: Vec<SymEntry> = Vec::with_capacity(self.entries.len());
        for e in self.entries.drain(..) {
            match out.last_mut() {
                Some(l) if l.row == e.row && l.col == e.col => l.value += e.value,
                _ => out.push(e),
            }
        }
        out.retain(|e| e.value != 0.0);
        self.entries = out;
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn add_to(&self, m: &mut DMatrix<f64>, scale: f64) {
        for e in &self.entries {
            m[(e.row, e.col)] += scale * e.value;
            if e.row != e.col {
                m[(e.col, e.row)] += scale * e.value;
            }
        }
    }

    pub fn to_dense(&self, n: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(n, n);
        self.add_to(&mut m, 1.0);
        m
    }

    /// `<self, m>` for symmetric `m`.
    pub fn dot(&self, m: &DMatrix<f64>) -> f64 {
        self.entries
            .iter()
            .map(|e| {
                if e.row == e.col {
                    e.value * m[(e.row, e.col)]
                } else {
                    e.value * (m[(e.row, e.col)] + m[(e.col, e.row)])
                }
            })
            .sum()
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| if e.row == e.col { e.value * e.value } else { 2.0 * e.value * e.value })
            .sum()
    }
}

/// A PSD constraint `A_0 + sum_i y_i A_i >= 0` of a fixed size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsdBlock {
    pub size: usize,
    pub constant: SparseSym,
    /// `(variable index, coefficient matrix)`, at most one entry per variable.
    pub coefficients: Vec<(usize, SparseSym)>,
}

impl PsdBlock {
    pub fn new(size: usize) -> Self {
        PsdBlock { size, constant: SparseSym::new(), coefficients: Vec::new() }
    }

    /// Dense value of the affine map at `y`.
    pub fn eval(&self, y: &[f64]) -> DMatrix<f64> {
        let mut m = self.constant.to_dense(self.size);
        for (i, a) in &self.coefficients {
            a.add_to(&mut m, y[*i]);
        }
        m
    }
}

/// A linear equality `sum_i a_i y_i = rhs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearEquality {
    pub coefficients: Vec<(usize, f64)>,
    pub rhs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConicProgram {
    pub num_vars: usize,
    pub objective: Vec<f64>,
    pub blocks: Vec<PsdBlock>,
    pub equalities: Vec<LinearEquality>,
}

impl ConicProgram {
    pub fn new(num_vars: usize) -> Self {
        ConicProgram { num_vars, objective: vec![0.0; num_vars], blocks: Vec::new(), equalities: Vec::new() }
    }

    /// Check sizes and index ranges.
    pub fn validate(&self) -> Result<()> {
        if self.objective.len() != self.num_vars {
            return Err(Error::Conic(format!(
                "objective has length {} but the program has {} variables",
                self.objective.len(),
                self.num_vars
            )));
        }
        for (b, blk) in self.blocks.iter().enumerate() {
            if blk.size == 0 {
                return Err(Error::Conic(format!("block {b} has size 0")));
            }
            let mats = std::iter::once(&blk.constant).chain(blk.coefficients.iter().map(|(_, a)| a));
            for m in mats {
                for e in &m.entries {
                    if e.row > e.col || e.col >= blk.size {
                        return Err(Error::Conic(format!("block {b}: entry ({}, {}) out of range", e.row, e.col)));
                    }
                    if !e.value.is_finite() {
                        return Err(Error::Conic(format!("block {b}: non-finite entry")));
                    }
                }
            }
            for (i, _) in &blk.coefficients {
                if *i >= self.num_vars {
                    return Err(Error::Conic(format!("block {b}: variable index {i} out of range")));
                }
            }
        }
        for (k, eq) in self.equalities.iter().enumerate() {
            if eq.coefficients.iter().any(|&(i, _)| i >= self.num_vars) {
                return Err(Error::Conic(format!("equality {k}: variable index out of range")));
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, y: &[f64]) -> f64 {
        self.objective.iter().zip(y).map(|(c, v)| c * v).sum()
    }

    /// Largest equality residual at `y`.
    pub fn equality_residual(&self, y: &[f64]) -> f64 {
        self.equalities
            .iter()
            .map(|eq| (eq.coefficients.iter().map(|&(i, a)| a * y[i]).sum::<f64>() - eq.rhs).abs())
            .fold(0.0, f64::max)
    }

    /// Smallest eigenvalue over all blocks at `y`.
    pub fn min_block_eigenvalue(&self, y: &[f64]) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.eval(y).symmetric_eigenvalues().min())
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConicStatus {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIter,
    NumericalError,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    /// Relative residual of the affine PSD constraints (moment side).
    pub primal: f64,
    /// Relative residual of the dual equality constraints.
    pub dual: f64,
    /// Relative duality gap.
    pub gap: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        self.primal.max(self.dual).max(self.gap)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConicSolution {
    pub status: ConicStatus,
    /// The affine-form variables.
    pub y: Vec<f64>,
    /// `c^T y`.
    pub objective: f64,
    /// Value of the dual (sum-of-squares side) objective.
    pub dual_objective: f64,
    /// One dual matrix per PSD block.
    #[serde(skip)]
    pub dual_blocks: Vec<DMatrix<f64>>,
    pub residuals: Residuals,
    pub iterations: usize,
    #[serde(skip)]
    pub trace: Vec<IterateRecord>,
}

/// A solver for [`ConicProgram`]s.
pub trait ConicBackend: Sync {
    fn solve(&self, program: &ConicProgram) -> Result<ConicSolution>;
}
