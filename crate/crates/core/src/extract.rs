//! Numerical rank, flat truncation, and extraction of atoms from a flat
//! moment matrix.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moment::{moment_matrix, TruncatedMomentSequence};

/// Number of singular values above `tol_ratio * max(sigma_1, 1e-12)`.
pub fn numerical_rank(m: &DMatrix<f64>, tol_ratio: f64) -> usize {
    let sv = singular_values_sym(m);
    rank_of(&sv, tol_ratio)
}

fn rank_of(sv: &[f64], tol_ratio: f64) -> usize {
    let top = sv.first().copied().unwrap_or(0.0).max(1e-12);
    sv.iter().filter(|&&s| s > tol_ratio * top).count()
}

/// Singular values of a symmetric matrix, descending.
fn singular_values_sym(m: &DMatrix<f64>) -> Vec<f64> {
    let mut sv: Vec<f64> = m.symmetric_eigenvalues().iter().map(|v| v.abs()).collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Ranks and singular values of `M_t(y)` for `t = 0..=k`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RankProfile {
    pub tol_ratio: f64,
    pub ranks: Vec<usize>,
    pub singular_values: Vec<Vec<f64>>,
}

impl RankProfile {
    pub fn compute(y: &TruncatedMomentSequence, tol_ratio: f64) -> Self {
        let mk = moment_matrix(y, y.order).expect("order k is always valid");
        let mut ranks = Vec::new();
        let mut svs = Vec::new();
        for t in 0..=y.order {
            let s = y.index().len_upto(t);
            let sv = singular_values_sym(&mk.view((0, 0), (s, s)).into_owned());
            ranks.push(rank_of(&sv, tol_ratio));
            svs.push(sv);
        }
        RankProfile { tol_ratio, ranks, singular_values: svs }
    }
}

/// Smallest `t` in `[t_min, k]` with `rank M_{t-d} = rank M_t`.
pub fn check_flat_truncation(profile: &RankProfile, d: usize, t_min: usize) -> Option<usize> {
    let k = profile.ranks.len().checked_sub(1)?;
    (t_min.max(d)..=k).find(|&t| profile.ranks[t - d] == profile.ranks[t])
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExtractOptions {
    pub rank_tol: f64,
    /// Threshold of the column echelon pivots.
    pub pivot_tol: f64,
    pub seed: u64,
    /// Relative constraint tolerance for accepting atoms.
    pub feasibility_tol: f64,
    /// Atoms with smaller recovered weight are dropped.
    pub min_weight: f64,
    /// Largest relative move allowed when projecting an infeasible atom onto the set.
    pub snap_tol: f64,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        ExtractOptions { rank_tol: 1e-6, pivot_tol: 1e-8, seed: 0x5eed, feasibility_tol: 1e-5, min_weight: 1e-8, snap_tol: 1e-3 }
    }
}

/// Finitely atomic measure `sum_j w_j delta(v_j)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AtomSet {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub rank: usize,
}

/// Recover the atoms of a flat moment matrix `M_t(y)`.
///
/// Factor `M_t = V V^T` from the leading eigenpairs, reduce `V` to column
/// echelon form to find a monomial basis, read off the multiplication
/// matrices, and diagonalize a random combination of them with a real Schur
/// decomposition. Weights are fit by least squares on the moments of degree
/// at most `t`.
pub fn extract_minimizers(y: &TruncatedMomentSequence, t: usize, opts: &ExtractOptions) -> Result<AtomSet> {
    if t > y.order {
        return Err(Error::Extraction(format!("order {t} exceeds k = {}", y.order)));
    }
    let n = y.vars.len();
    let index = y.index();
    let mt = moment_matrix(y, t)?;
    let s = mt.nrows();
    let eig = SymmetricEigen::new(mt.clone());
    let lmax = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-12);
    let mut keep: Vec<usize> = (0..s).filter(|&i| eig.eigenvalues[i] > opts.rank_tol * lmax).collect();
    keep.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let r = keep.len();
    if r == 0 {
        return Err(Error::Extraction("moment matrix is numerically zero".into()));
    }
    let mut v = DMatrix::zeros(s, r);
    for (c, &i) in keep.iter().enumerate() {
        let sc = eig.eigenvalues[i].sqrt();
        for row in 0..s {
            v[(row, c)] = eig.eigenvectors[(row, i)] * sc;
        }
    }

    // column echelon form of V, i.e. row echelon form of V^T scanned by monomial
    let mut u = v.transpose();
    let mut pivots: Vec<usize> = Vec::with_capacity(r);
    let mut prow = 0;
    for col in 0..s {
        if prow == r {
            break;
        }
        let (best, val) = (prow..r).fold((prow, 0.0f64), |acc, i| {
            if u[(i, col)].abs() > acc.1 {
                (i, u[(i, col)].abs())
            } else {
                acc
            }
        });
        if val <= opts.pivot_tol {
            for i in prow..r {
                u[(i, col)] = 0.0;
            }
            continue;
        }
        u.swap_rows(prow, best);
        let piv = u[(prow, col)];
        for c in 0..s {
            u[(prow, c)] /= piv;
        }
        for i in 0..r {
            if i != prow {
                let f = u[(i, col)];
                if f != 0.0 {
                    for c in 0..s {
                        u[(i, c)] -= f * u[(prow, c)];
                    }
                }
            }
        }
        pivots.push(col);
        prow += 1;
    }
    if pivots.len() < r {
        return Err(Error::Extraction(format!("column echelon found {} pivots for rank {r}", pivots.len())));
    }
    let u = u.transpose(); // s x r, rows at pivots form the identity

    // multiplication matrices: row j of N_i is the row of U for x_i * b_j
    let mut mult = Vec::with_capacity(n);
    let mut buf = vec![0u8; n];
    for i in 0..n {
        let mut ni = DMatrix::zeros(r, r);
        for (j, &b) in pivots.iter().enumerate() {
            buf.copy_from_slice(index.exponent(b));
            buf[i] += 1;
            let pos = index.position(&buf).filter(|&p| p < s).ok_or_else(|| {
                Error::Extraction("a shifted basis monomial falls outside the flat block".into())
            })?;
            for c in 0..r {
                ni[(j, c)] = u[(pos, c)];
            }
        }
        mult.push(ni);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let lam: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 0.1).collect();
    let total: f64 = lam.iter().sum();
    let mut comb = DMatrix::zeros(r, r);
    for (ni, l) in mult.iter().zip(&lam) {
        comb += ni * (l / total);
    }
    let schur = nalgebra::linalg::Schur::try_new(comb.clone(), f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Extraction("Schur decomposition did not converge".into()))?;
    let (q, tmat) = schur.unpack();
    let scale = comb.amax().max(1.0);
    for j in 0..r.saturating_sub(1) {
        if tmat[(j + 1, j)].abs() > 1e-6 * scale {
            return Err(Error::Extraction("complex eigenvalues in the multiplication matrices".into()));
        }
    }
    let mut points = Vec::with_capacity(r);
    for j in 0..r {
        let qj = q.column(j);
        points.push(mult.iter().map(|ni| (qj.transpose() * ni * qj)[(0, 0)]).collect::<Vec<f64>>());
    }

    // weights from the moments of degree at most t
    let rows = index.len_upto(t);
    let mut a = DMatrix::zeros(rows, r);
    let mut b = DVector::zeros(rows);
    for i in 0..rows {
        let e = index.exponent(i);
        for (j, p) in points.iter().enumerate() {
            a[(i, j)] = p.iter().zip(e).map(|(x, &k)| x.powi(k as i32)).product();
        }
        b[i] = y.values[i];
    }
    let w = a
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| Error::Extraction(format!("weight fit failed: {e}")))?;
    let mut out_p = Vec::new();
    let mut out_w = Vec::new();
    for (p, wj) in points.into_iter().zip(w.iter()) {
        if *wj >= opts.min_weight {
            out_p.push(p);
            out_w.push(*wj);
        }
    }
    if out_p.is_empty() {
        return Err(Error::Extraction("no atom with positive weight".into()));
    }
    Ok(AtomSet { points: out_p, weights: out_w, rank: r })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::VariableSpace;

    #[test]
    fn rank_counts_relative() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1e-3, 1e-9]));
        assert_eq!(numerical_rank(&m, 1e-6), 2);
        assert_eq!(numerical_rank(&DMatrix::zeros(3, 3), 1e-6), 0);
    }

    #[test]
    fn recovers_three_atoms() {
        let vars = VariableSpace::x(2).vars();
        let pts = vec![vec![1.0, 0.0], vec![-0.5, 0.7], vec![0.2, -1.3]];
        let ws = [0.2, 0.5, 0.3];
        let y = TruncatedMomentSequence::from_atoms(vars, 3, &pts, &ws);
        let prof = RankProfile::compute(&y, 1e-6);
        assert_eq!(prof.ranks, vec![1, 3, 3, 3]);
        let t = check_flat_truncation(&prof, 1, 1).unwrap();
        assert_eq!(t, 2);
        let a = extract_minimizers(&y, t, &ExtractOptions::default()).unwrap();
        assert_eq!(a.points.len(), 3);
        for (p, w) in pts.iter().zip(ws) {
            let j = a
                .points
                .iter()
                .position(|q| q.iter().zip(p).all(|(x, y)| (x - y).abs() < 1e-8))
                .expect("atom recovered");
            assert!((a.weights[j] - w).abs() < 1e-8);
        }
    }
}
