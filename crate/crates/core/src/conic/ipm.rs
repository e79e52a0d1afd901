//! Primal-dual interior point method on the homogeneous self-dual embedding,
//! HKM search direction with a Mehrotra predictor-corrector.
//!
//! The affine program is first reduced: linear equalities are eliminated by
//! Gauss-Jordan with complete pivoting, constant blocks are checked directly,
//! blocks and variables are scaled. What remains is the standard pair
//!
//! ```text
//! (P) min <C, X>  s.t. <A_j, X> = b_j, X >= 0
//! (D) max b^T w   s.t. sum_j w_j A_j + S = C, S >= 0
//! ```
//!
//! with `S = F(y)` on the moment side and `w` the free reduced variables.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use super::{ConicBackend, ConicProgram, ConicSolution, ConicStatus, Residuals, SymEntry};
use crate::error::Result;
use crate::par;

/// Tunables of the interior point method.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IpmOptions {
    /// Relative tolerance on residuals and gap.
    pub tol: f64,
    pub max_iter: usize,
    /// Fraction of the step to the boundary.
    pub step_fraction: f64,
    /// Tolerance of normalized infeasibility certificates.
    pub infeas_tol: f64,
    /// Assemble the Schur complement on the rayon pool (ignored without the `parallel` feature).
    pub parallel: bool,
    /// Keep one record per iteration in the solution.
    pub keep_trace: bool,
}

impl Default for IpmOptions {
    fn default() -> Self {
        IpmOptions {
            tol: 1e-8,
            max_iter: 200,
            step_fraction: 0.98,
            infeas_tol: 1e-8,
            parallel: true,
            keep_trace: false,
        }
    }
}

impl IpmOptions {
    /// Defaults, with the tolerance taken from `SIPP_SDP_TOL` when set.
    pub fn from_env() -> Self {
        let mut o = IpmOptions::default();
        if let Some(t) = std::env::var("SIPP_SDP_TOL").ok().and_then(|s| s.parse::<f64>().ok()) {
            if t > 0.0 {
                o.tol = t;
            }
        }
        o
    }
}

/// Per-iteration diagnostics, in the units of the original program.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterateRecord {
    pub iter: usize,
    /// Moment-side objective `c^T y` of the current iterate.
    pub primal_objective: f64,
    /// Dual (sum-of-squares side) objective of the current iterate.
    pub dual_objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub mu: f64,
    pub tau: f64,
    pub kappa: f64,
    pub step: f64,
}

/// The embedded interior point solver.
#[derive(Clone, Debug, Default)]
pub struct InteriorPoint {
    pub options: IpmOptions,
}

impl InteriorPoint {
    pub fn new(options: IpmOptions) -> Self {
        InteriorPoint { options }
    }
}

impl ConicBackend for InteriorPoint {
    fn solve(&self, program: &ConicProgram) -> Result<ConicSolution> {
        program.validate()?;
        Ok(solve_program(program, &self.options))
    }
}

/// `y = y0 + N z`, from eliminating `E y = e`.
struct Elimination {
    y0: Vec<f64>,
    /// Original index of each reduced variable.
    free: Vec<usize>,
    /// For each original variable: `None` if free, otherwise `Some(row)` into `basic_rows`.
    basic_of: Vec<Option<usize>>,
    /// `y_i = y0_i + sum (j, n) n * z_j` for basic variables.
    basic_rows: Vec<Vec<(usize, f64)>>,
}

enum Reduce {
    Ok(Elimination),
    Inconsistent,
}

fn eliminate(p: &ConicProgram) -> Reduce {
    let nv = p.num_vars;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    for eq in &p.equalities {
        let mut r = vec![0.0; nv];
        for &(i, a) in &eq.coefficients {
            r[i] += a;
        }
        let s = r.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if s == 0.0 {
            if eq.rhs.abs() > 1e-12 {
                return Reduce::Inconsistent;
            }
            continue;
        }
        r.iter_mut().for_each(|v| *v /= s);
        rows.push(r);
        rhs.push(eq.rhs / s);
    }
    let neq = rows.len();
    let mut is_pivot_col = vec![false; nv];
    let mut pivots: Vec<usize> = Vec::new();
    let mut rank = 0;
    while rank < neq {
        let mut best = (0.0, 0, 0);
        for (i, row) in rows.iter().enumerate().skip(rank) {
            for (j, &v) in row.iter().enumerate() {
                if !is_pivot_col[j] && v.abs() > best.0 {
                    best = (v.abs(), i, j);
                }
            }
        }
        if best.0 < 1e-10 {
            break;
        }
        let (_, pi, pj) = best;
        rows.swap(rank, pi);
        rhs.swap(rank, pi);
        let inv = 1.0 / rows[rank][pj];
        rows[rank].iter_mut().for_each(|v| *v *= inv);
        rhs[rank] *= inv;
        rows[rank][pj] = 1.0;
        let prow = rows[rank].clone();
        let prhs = rhs[rank];
        let nz: Vec<usize> = (0..nv).filter(|&j| prow[j] != 0.0).collect();
        for i in 0..neq {
            if i == rank {
                continue;
            }
            let f = rows[i][pj];
            if f == 0.0 {
                continue;
            }
            for &j in &nz {
                rows[i][j] -= f * prow[j];
            }
            rows[i][pj] = 0.0;
            rhs[i] -= f * prhs;
        }
        is_pivot_col[pj] = true;
        pivots.push(pj);
        rank += 1;
    }
    if rhs[rank..].iter().any(|r| r.abs() > 1e-8) {
        return Reduce::Inconsistent;
    }
    let free: Vec<usize> = (0..nv).filter(|&j| !is_pivot_col[j]).collect();
    let mut free_pos = vec![usize::MAX; nv];
    for (k, &j) in free.iter().enumerate() {
        free_pos[j] = k;
    }
    let mut y0 = vec![0.0; nv];
    let mut basic_of = vec![None; nv];
    let mut basic_rows = Vec::with_capacity(rank);
    for (r, &pj) in pivots.iter().enumerate() {
        y0[pj] = rhs[r];
        basic_of[pj] = Some(r);
        let coefs: Vec<(usize, f64)> = free
            .iter()
            .filter(|&&j| rows[r][j].abs() > 1e-15)
            .map(|&j| (free_pos[j], -rows[r][j]))
            .collect();
        basic_rows.push(coefs);
    }
    Reduce::Ok(Elimination { y0, free, basic_of, basic_rows })
}

/// The scaled standard-form data.
struct StdForm {
    sizes: Vec<usize>,
    /// Original block index of each kept block.
    block_ids: Vec<usize>,
    /// Block scale factors `beta_b`.
    beta: Vec<f64>,
    c: Vec<DMatrix<f64>>,
    /// `a[b][j]`: upper-triangle entries of `A_j` in block `b`.
    a: Vec<Vec<Vec<SymEntry>>>,
    b: DVector<f64>,
    /// Reduced-variable index of each standard-form variable.
    active: Vec<usize>,
    /// `z_j = s_j * w_j` before objective scaling.
    var_scale: Vec<f64>,
    c_norm: f64,
    b_norm: f64,
    m: usize,
}

fn sdot(entries: &[SymEntry], m: &DMatrix<f64>) -> f64 {
    let mut s = 0.0;
    for e in entries {
        if e.row == e.col {
            s += e.value * m[(e.row, e.col)];
        } else {
            s += e.value * (m[(e.row, e.col)] + m[(e.col, e.row)]);
        }
    }
    s
}

fn sadd(entries: &[SymEntry], m: &mut DMatrix<f64>, scale: f64) {
    for e in entries {
        m[(e.row, e.col)] += scale * e.value;
        if e.row != e.col {
            m[(e.col, e.row)] += scale * e.value;
        }
    }
}

fn merge_entries(mut v: Vec<SymEntry>, drop_below: f64) -> Vec<SymEntry> {
    v.sort_by_key(|e| (e.row, e.col));
    let mut out: Vec<SymEntry> = Vec::with_capacity(v.len());
    for e in v {
        match out.last_mut() {
            Some(l) if l.row == e.row && l.col == e.col => l.value += e.value,
            _ => out.push(e),
        }
    }
    out.retain(|e| e.value.abs() > drop_below);
    out
}

enum Prepared {
    Std(StdForm),
    /// No free variables remain; the point `y0` is feasible or not.
    Fixed { feasible: bool },
    Infeasible,
    Unbounded,
}

fn prepare(p: &ConicProgram, el: &Elimination) -> Prepared {
    let m_full = el.free.len();
    let nblocks = p.blocks.len();
    // reduced constant and coefficient matrices per block
    let mut f0: Vec<Vec<SymEntry>> = Vec::with_capacity(nblocks);
    let mut fj: Vec<Vec<Vec<SymEntry>>> = Vec::with_capacity(nblocks);
    for blk in &p.blocks {
        let mut c = blk.constant.entries.clone();
        let mut acc: Vec<Vec<SymEntry>> = vec![Vec::new(); m_full];
        let mut scale: f64 = blk.constant.entries.iter().fold(0.0, |a, e| a.max(e.value.abs()));
        for (i, a) in &blk.coefficients {
            scale = a.entries.iter().fold(scale, |s, e| s.max(e.value.abs()));
            match el.basic_of[*i] {
                None => {
                    let j = el.free.iter().position(|f| f == i).unwrap();
                    acc[j].extend_from_slice(&a.entries);
                }
                Some(r) => {
                    let y0 = el.y0[*i];
                    if y0 != 0.0 {
                        c.extend(a.entries.iter().map(|e| SymEntry { value: e.value * y0, ..*e }));
                    }
                    for &(j, n) in &el.basic_rows[r] {
                        acc[j].extend(a.entries.iter().map(|e| SymEntry { value: e.value * n, ..*e }));
                    }
                }
            }
        }
        let drop = 1e-13 * scale.max(1e-300);
        f0.push(merge_entries(c, drop));
        fj.push(acc.into_iter().map(|v| merge_entries(v, drop)).collect());
    }
    // reduced objective
    let mut cr = vec![0.0; m_full];
    for (j, &i) in el.free.iter().enumerate() {
        cr[j] += p.objective[i];
    }
    for (orig, b) in el.basic_of.iter().enumerate() {
        if let Some(r) = b {
            let ci = p.objective[orig];
            if ci != 0.0 {
                for &(j, n) in &el.basic_rows[*r] {
                    cr[j] += ci * n;
                }
            }
        }
    }
    // constant blocks are checks, not constraints
    let mut keep = Vec::new();
    for b in 0..nblocks {
        if fj[b].iter().all(|v| v.is_empty()) {
            let mut m = DMatrix::zeros(p.blocks[b].size, p.blocks[b].size);
            sadd(&f0[b], &mut m, 1.0);
            let lmin = m.symmetric_eigenvalues().min();
            let scale = m.amax().max(1.0);
            if lmin < -1e-9 * scale {
                return Prepared::Infeasible;
            }
        } else {
            keep.push(b);
        }
    }
    // variables that appear in no block
    let cmax = cr.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
    let mut active = Vec::new();
    for j in 0..m_full {
        let used = keep.iter().any(|&b| !fj[b][j].is_empty());
        if used {
            active.push(j);
        } else if cr[j].abs() > 1e-12 * cmax.max(1.0) {
            return Prepared::Unbounded;
        }
    }
    if active.is_empty() {
        let feasible = keep.is_empty();
        return Prepared::Fixed { feasible };
    }
    let m = active.len();
    // block scaling: largest coefficient matrix gets unit Frobenius norm
    let mut beta = Vec::with_capacity(keep.len());
    for &b in &keep {
        let mx = active.iter().map(|&j| fj[b][j].iter().map(|e| frob_entry(e)).sum::<f64>()).fold(0.0, f64::max);
        beta.push(1.0 / mx.sqrt());
    }
    // variable scaling
    let mut var_scale = Vec::with_capacity(m);
    for &j in &active {
        let mut s = 0.0;
        for (k, &b) in keep.iter().enumerate() {
            s += beta[k] * beta[k] * fj[b][j].iter().map(|e| frob_entry(e)).sum::<f64>();
        }
        var_scale.push(1.0 / s.sqrt());
    }
    let sizes: Vec<usize> = keep.iter().map(|&b| p.blocks[b].size).collect();
    let mut c = Vec::with_capacity(keep.len());
    let mut a = Vec::with_capacity(keep.len());
    for (k, &b) in keep.iter().enumerate() {
        let mut cm = DMatrix::zeros(sizes[k], sizes[k]);
        sadd(&f0[b], &mut cm, beta[k]);
        c.push(cm);
        let ab: Vec<Vec<SymEntry>> = active
            .iter()
            .enumerate()
            .map(|(jj, &j)| {
                let s = -beta[k] * var_scale[jj];
                fj[b][j].iter().map(|e| SymEntry { value: e.value * s, ..*e }).collect()
            })
            .collect();
        a.push(ab);
    }
    let b_vec = DVector::from_iterator(m, active.iter().enumerate().map(|(jj, &j)| -cr[j] * var_scale[jj]));
    let c_norm = c.iter().map(|m| m.norm_squared()).sum::<f64>().sqrt().max(1.0);
    let b_norm = b_vec.amax().max(1.0);
    for cm in &mut c {
        *cm /= c_norm;
    }
    let b_vec = b_vec / b_norm;
    Prepared::Std(StdForm {
        sizes,
        block_ids: keep,
        beta,
        c,
        a,
        b: b_vec,
        active,
        var_scale,
        c_norm,
        b_norm,
        m,
    })
}

fn frob_entry(e: &SymEntry) -> f64 {
    if e.row == e.col {
        e.value * e.value
    } else {
        2.0 * e.value * e.value
    }
}

type Blocks = Vec<DMatrix<f64>>;

fn bdot(a: &Blocks, b: &Blocks) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

fn bnorm(a: &Blocks) -> f64 {
    a.iter().map(|m| m.norm_squared()).sum::<f64>().sqrt()
}

fn sym(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

impl StdForm {
    fn a_op(&self, x: &Blocks) -> DVector<f64> {
        let mut out = DVector::zeros(self.m);
        for (b, xb) in x.iter().enumerate() {
            for j in 0..self.m {
                out[j] += sdot(&self.a[b][j], xb);
            }
        }
        out
    }

    fn at_op(&self, w: &DVector<f64>) -> Blocks {
        let mut out: Blocks = self.sizes.iter().map(|&n| DMatrix::zeros(n, n)).collect();
        for (b, ob) in out.iter_mut().enumerate() {
            for j in 0..self.m {
                if w[j] != 0.0 {
                    sadd(&self.a[b][j], ob, w[j]);
                }
            }
        }
        out
    }

    /// Column `j` of `H_ij = tr(A_i X A_j S^{-1})`.
    fn schur_column(&self, j: usize, x: &Blocks, sinv: &Blocks) -> Vec<f64> {
        let mut col = vec![0.0; self.m];
        for (b, n) in self.sizes.iter().copied().enumerate() {
            let ent = &self.a[b][j];
            if ent.is_empty() {
                continue;
            }
            let g = x_a_sinv(ent, n, &x[b], &sinv[b]);
            for (i, c) in col.iter_mut().enumerate() {
                let ai = &self.a[b][i];
                if !ai.is_empty() {
                    *c += sdot(ai, &g);
                }
            }
        }
        col
    }

    fn schur(&self, x: &Blocks, sinv: &Blocks, parallel: bool) -> DMatrix<f64> {
        let cols = if parallel {
            par::map_range(self.m, |j| self.schur_column(j, x, sinv))
        } else {
            par::seq::map_range(self.m, |j| self.schur_column(j, x, sinv))
        };
        let mut h = DMatrix::zeros(self.m, self.m);
        for (j, c) in cols.into_iter().enumerate() {
            for (i, v) in c.into_iter().enumerate() {
                h[(i, j)] = v;
            }
        }
        sym(&h)
    }
}

/// `X A S^{-1}` for sparse symmetric `A`.
fn x_a_sinv(ent: &[SymEntry], n: usize, x: &DMatrix<f64>, sinv: &DMatrix<f64>) -> DMatrix<f64> {
    let mut rows: Vec<usize> = ent.iter().flat_map(|e| [e.row, e.col]).collect();
    rows.sort_unstable();
    rows.dedup();
    let mut pos = vec![usize::MAX; n];
    for (k, &r) in rows.iter().enumerate() {
        pos[r] = k;
    }
    // t = (A S^{-1}) restricted to the rows touched by A
    let mut t = DMatrix::zeros(rows.len(), n);
    for e in ent {
        let (p, q, v) = (e.row, e.col, e.value);
        for c in 0..n {
            t[(pos[p], c)] += v * sinv[(q, c)];
        }
        if p != q {
            for c in 0..n {
                t[(pos[q], c)] += v * sinv[(p, c)];
            }
        }
    }
    let xr = x.select_columns(rows.iter());
    xr * t
}

/// Largest `alpha` with `M + alpha * D` PSD, given `M` positive definite.
fn max_step(m: &DMatrix<f64>, d: &DMatrix<f64>) -> f64 {
    let Some(ch) = Cholesky::new(m.clone()) else {
        return 0.0;
    };
    let l = ch.l();
    let Some(t) = l.solve_lower_triangular(d) else {
        return 0.0;
    };
    let Some(t2) = l.solve_lower_triangular(&t.transpose()) else {
        return 0.0;
    };
    let lmin = sym(&t2).symmetric_eigenvalues().min();
    if lmin >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lmin
    }
}

struct Direction {
    dx: Blocks,
    ds: Blocks,
    dw: DVector<f64>,
    dtau: f64,
    dkappa: f64,
}

struct Iterate {
    x: Blocks,
    s: Blocks,
    w: DVector<f64>,
    tau: f64,
    kappa: f64,
}

struct Outcome {
    status: ConicStatus,
    it: Iterate,
    residuals: Residuals,
    iterations: usize,
    trace: Vec<IterateRecord>,
}

fn factor_h(h: &DMatrix<f64>) -> Option<Cholesky<f64, Dyn>> {
    if let Some(c) = Cholesky::new(h.clone()) {
        return Some(c);
    }
    let d = (h.trace() / h.nrows() as f64).abs().max(1e-300);
    let mut delta = 1e-14 * d;
    for _ in 0..8 {
        let mut hr = h.clone();
        for i in 0..h.nrows() {
            hr[(i, i)] += delta;
        }
        if let Some(c) = Cholesky::new(hr) {
            return Some(c);
        }
        delta *= 100.0;
    }
    None
}

fn hsde(sf: &StdForm, opts: &IpmOptions, y_of: &dyn Fn(&Iterate) -> (f64, f64)) -> Outcome {
    let nu: f64 = sf.sizes.iter().sum::<usize>() as f64;
    let mut it = Iterate {
        x: sf.sizes.iter().map(|&n| DMatrix::identity(n, n)).collect(),
        s: sf.sizes.iter().map(|&n| DMatrix::identity(n, n)).collect(),
        w: DVector::zeros(sf.m),
        tau: 1.0,
        kappa: 1.0,
    };
    let bn = sf.b.norm();
    let cn = bnorm(&sf.c);
    let mut trace = Vec::new();
    let mut best: Option<(f64, Iterate, Residuals)> = None;
    let mut last_step = 1.0;
    let mut small_steps = 0;
    for iter in 0..=opts.max_iter {
        let ax = sf.a_op(&it.x);
        let atw = sf.at_op(&it.w);
        let rp = &sf.b * it.tau - &ax;
        let rd: Blocks = (0..sf.sizes.len()).map(|b| &sf.c[b] * it.tau - &atw[b] - &it.s[b]).collect();
        let pobj = bdot(&sf.c, &it.x);
        let dobj = sf.b.dot(&it.w);
        let g = dobj - pobj - it.kappa;
        let mu = (bdot(&it.x, &it.s) + it.tau * it.kappa) / (nu + 1.0);

        let pres = rp.norm() / it.tau / (1.0 + bn);
        let dres = bnorm(&rd) / it.tau / (1.0 + cn);
        let (po, dob) = (pobj / it.tau, dobj / it.tau);
        // the scaled gap can be small while the bounds in original units are far apart
        let (mo, so) = y_of(&it);
        let gap = ((po - dob).abs() / (1.0 + po.abs() + dob.abs())).max((mo - so).abs() / (1.0 + mo.abs() + so.abs()));
        // moment side feasibility is the slack definition, sos side the linear equalities
        let res = Residuals { primal: dres, dual: pres, gap };
        if opts.keep_trace {
            trace.push(IterateRecord {
                iter,
                primal_objective: mo,
                dual_objective: so,
                primal_residual: dres,
                dual_residual: pres,
                mu,
                tau: it.tau,
                kappa: it.kappa,
                step: last_step,
            });
        }
        let merit = res.max();
        if merit <= opts.tol {
            return Outcome { status: ConicStatus::Optimal, it, residuals: res, iterations: iter, trace };
        }
        // infeasibility certificates
        if pobj < 0.0 && ax.norm() <= opts.infeas_tol * (-pobj) * (1.0 + bn) && it.tau < it.kappa {
            return Outcome { status: ConicStatus::Infeasible, it, residuals: res, iterations: iter, trace };
        }
        if dobj > 0.0 {
            let r: Blocks = (0..sf.sizes.len()).map(|b| &atw[b] + &it.s[b]).collect();
            if bnorm(&r) <= opts.infeas_tol * dobj * (1.0 + cn) && it.tau < it.kappa {
                return Outcome { status: ConicStatus::Unbounded, it, residuals: res, iterations: iter, trace };
            }
        }
        if best.as_ref().is_none_or(|(m, _, _)| merit < *m) {
            let snap = Iterate { x: it.x.clone(), s: it.s.clone(), w: it.w.clone(), tau: it.tau, kappa: it.kappa };
            best = Some((merit, snap, res.clone()));
        }
        if iter == opts.max_iter || small_steps >= 3 {
            let status = if iter == opts.max_iter { ConicStatus::MaxIter } else { ConicStatus::NumericalError };
            let (_, bit, bres) = best.unwrap();
            return Outcome { status, it: bit, residuals: bres, iterations: iter, trace };
        }

        let mut sinv: Blocks = Vec::with_capacity(it.s.len());
        for sb in &it.s {
            match Cholesky::new(sb.clone()) {
                Some(c) => sinv.push(sym(&c.inverse())),
                None => {
                    let (_, bit, bres) = best.unwrap();
                    return Outcome { status: ConicStatus::NumericalError, it: bit, residuals: bres, iterations: iter, trace };
                }
            }
        }
        let h = sf.schur(&it.x, &sinv, opts.parallel);
        let xcs: Blocks = (0..sf.sizes.len()).map(|b| &it.x[b] * &sf.c[b] * &sinv[b]).collect();
        let v = sf.a_op(&xcs);
        let zeta = bdot(&sf.c, &xcs.iter().map(|m| m.transpose()).collect());
        let Some(hc) = factor_h(&h) else {
            let (_, bit, bres) = best.unwrap();
            return Outcome { status: ConicStatus::NumericalError, it: bit, residuals: bres, iterations: iter, trace };
        };
        let q = hc.solve(&(&v + &sf.b));
        let bmv = &sf.b - &v;
        let bmv_q = bmv.dot(&q);

        let xrds: Blocks = (0..sf.sizes.len()).map(|b| &it.x[b] * &rd[b] * &sinv[b]).collect();
        let solve = |eta: f64, k: &Blocks, rtk: f64| -> Direction {
            let kp: Blocks = (0..k.len()).map(|b| &k[b] - &xrds[b] * eta).collect();
            let r1 = &rp * eta - sf.a_op(&kp);
            let r2 = -eta * g + bdot(&sf.c, &kp.iter().map(|m| m.transpose()).collect()) + rtk / it.tau;
            let p = hc.solve(&r1);
            let dtau = (r2 - bmv.dot(&p)) / (bmv_q + zeta + it.kappa / it.tau);
            let dw = &p + &q * dtau;
            let atdw = sf.at_op(&dw);
            let ds: Blocks = (0..k.len()).map(|b| &rd[b] * eta - &atdw[b] + &sf.c[b] * dtau).collect();
            let dx: Blocks = (0..k.len()).map(|b| sym(&(&k[b] - &it.x[b] * &ds[b] * &sinv[b]))).collect();
            let dkappa = (rtk - it.kappa * dtau) / it.tau;
            Direction { dx, ds, dw, dtau, dkappa }
        };
        let step_len = |d: &Direction| -> f64 {
            let mut a = f64::INFINITY;
            for b in 0..sf.sizes.len() {
                a = a.min(max_step(&it.x[b], &d.dx[b]));
                a = a.min(max_step(&it.s[b], &d.ds[b]));
            }
            if d.dtau < 0.0 {
                a = a.min(-it.tau / d.dtau);
            }
            if d.dkappa < 0.0 {
                a = a.min(-it.kappa / d.dkappa);
            }
            a
        };

        // predictor
        let k_aff: Blocks = it.x.iter().map(|m| -m).collect();
        let da = solve(1.0, &k_aff, -it.tau * it.kappa);
        let aa = step_len(&da).min(1.0);
        let mut xs = 0.0;
        for b in 0..sf.sizes.len() {
            let xn = &it.x[b] + &da.dx[b] * aa;
            let sn = &it.s[b] + &da.ds[b] * aa;
            xs += xn.dot(&sn);
        }
        let mu_aff = (xs + (it.tau + aa * da.dtau) * (it.kappa + aa * da.dkappa)) / (nu + 1.0);
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        // corrector
        let k_cor: Blocks = (0..sf.sizes.len())
            .map(|b| &sinv[b] * (sigma * mu) - &it.x[b] - &da.dx[b] * &da.ds[b] * &sinv[b])
            .collect();
        let rtk = sigma * mu - it.tau * it.kappa - da.dtau * da.dkappa;
        let d = solve(1.0 - sigma, &k_cor, rtk);
        let amax = step_len(&d);
        let alpha = (opts.step_fraction * amax).min(1.0);
        if !alpha.is_finite() || alpha < 1e-10 {
            small_steps += 1;
        } else {
            small_steps = 0;
        }
        last_step = alpha;
        for b in 0..sf.sizes.len() {
            it.x[b] = sym(&(&it.x[b] + &d.dx[b] * alpha));
            it.s[b] = sym(&(&it.s[b] + &d.ds[b] * alpha));
        }
        it.w += &d.dw * alpha;
        it.tau += alpha * d.dtau;
        it.kappa += alpha * d.dkappa;
    }
    unreachable!()
}

pub(crate) fn solve_program(p: &ConicProgram, opts: &IpmOptions) -> ConicSolution {
    let fail = |status: ConicStatus, y: Vec<f64>| ConicSolution {
        status,
        objective: p.objective_value(&y),
        dual_objective: f64::NAN,
        y,
        dual_blocks: p.blocks.iter().map(|b| DMatrix::zeros(b.size, b.size)).collect(),
        residuals: Residuals::default(),
        iterations: 0,
        trace: Vec::new(),
    };
    let el = match eliminate(p) {
        Reduce::Ok(el) => el,
        Reduce::Inconsistent => return fail(ConicStatus::Infeasible, vec![0.0; p.num_vars]),
    };
    let sf = match prepare(p, &el) {
        Prepared::Std(sf) => sf,
        Prepared::Infeasible => return fail(ConicStatus::Infeasible, el.y0.clone()),
        Prepared::Unbounded => return fail(ConicStatus::Unbounded, el.y0.clone()),
        Prepared::Fixed { feasible } => {
            let y = el.y0.clone();
            let ok = feasible || p.min_block_eigenvalue(&y) >= -1e-9;
            let mut s = fail(if ok { ConicStatus::Optimal } else { ConicStatus::Infeasible }, y);
            s.dual_objective = s.objective;
            return s;
        }
    };
    let c_y0 = p.objective_value(&el.y0);
    // y from the scaled dual iterate
    let y_of_w = |w: &DVector<f64>, tau: f64| -> Vec<f64> {
        let mut z = vec![0.0; el.free.len()];
        for (jj, &j) in sf.active.iter().enumerate() {
            z[j] = sf.var_scale[jj] * w[jj] * sf.c_norm / tau;
        }
        let mut y = el.y0.clone();
        for (j, &i) in el.free.iter().enumerate() {
            y[i] = z[j];
        }
        for (i, b) in el.basic_of.iter().enumerate() {
            if let Some(r) = b {
                for &(j, n) in &el.basic_rows[*r] {
                    y[i] += n * z[j];
                }
            }
        }
        y
    };
    let sos_of = |x: &Blocks, tau: f64| -> f64 { c_y0 - bdot(&sf.c, x) * sf.c_norm * sf.b_norm / tau };
    let objs = |it: &Iterate| -> (f64, f64) {
        let y = y_of_w(&it.w, it.tau);
        (p.objective_value(&y), sos_of(&it.x, it.tau))
    };
    let out = hsde(&sf, opts, &objs);
    let it = &out.it;
    let y = match out.status {
        // certificates are rays, not points
        ConicStatus::Infeasible | ConicStatus::Unbounded => el.y0.clone(),
        _ => y_of_w(&it.w, it.tau),
    };
    let mut dual_blocks: Vec<DMatrix<f64>> = p.blocks.iter().map(|b| DMatrix::zeros(b.size, b.size)).collect();
    for (k, &b) in sf.block_ids.iter().enumerate() {
        dual_blocks[b] = &it.x[k] * (sf.beta[k] * sf.b_norm / it.tau);
    }
    ConicSolution {
        status: out.status,
        objective: p.objective_value(&y),
        dual_objective: sos_of(&it.x, it.tau),
        y,
        dual_blocks,
        residuals: out.residuals,
        iterations: out.iterations,
        trace: out.trace,
    }
}

#[cfg(test)]
mod tests {
    use super::super::{LinearEquality, PsdBlock, SparseSym};
    use super::*;

    /// min y0 + y1 s.t. [[y0, 1], [1, y1]] >= 0: optimum 2 at (1, 1).
    fn two_by_two() -> ConicProgram {
        let mut p = ConicProgram::new(2);
        p.objective = vec![1.0, 1.0];
        let mut b = PsdBlock::new(2);
        b.constant.push(0, 1, 1.0);
        let mut a0 = SparseSym::new();
        a0.push(0, 0, 1.0);
        let mut a1 = SparseSym::new();
        a1.push(1, 1, 1.0);
        b.coefficients = vec![(0, a0), (1, a1)];
        p.blocks.push(b);
        p
    }

    #[test]
    fn small_sdp() {
        let s = InteriorPoint::default().solve(&two_by_two()).unwrap();
        assert_eq!(s.status, ConicStatus::Optimal);
        assert!((s.objective - 2.0).abs() < 1e-7, "{}", s.objective);
        assert!((s.dual_objective - 2.0).abs() < 1e-7);
        assert!((s.y[0] - 1.0).abs() < 1e-6 && (s.y[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn equality_elimination() {
        let mut p = two_by_two();
        p.equalities.push(LinearEquality { coefficients: vec![(0, 1.0)], rhs: 4.0 });
        let s = InteriorPoint::default().solve(&p).unwrap();
        assert_eq!(s.status, ConicStatus::Optimal);
        assert!((s.y[1] - 0.25).abs() < 1e-6);
        assert!((s.objective - 4.25).abs() < 1e-6);
    }

    #[test]
    fn infeasible_program() {
        // y0 <= -1 and y0 >= 0 via 1x1 blocks
        let mut p = ConicProgram::new(1);
        p.objective = vec![1.0];
        let mut b1 = PsdBlock::new(1);
        b1.constant.push(0, 0, -1.0);
        let mut a = SparseSym::new();
        a.push(0, 0, -1.0);
        b1.coefficients.push((0, a));
        let mut b2 = PsdBlock::new(1);
        let mut a2 = SparseSym::new();
        a2.push(0, 0, 1.0);
        b2.coefficients.push((0, a2));
        p.blocks = vec![b1, b2];
        let s = InteriorPoint::default().solve(&p).unwrap();
        assert_eq!(s.status, ConicStatus::Infeasible);
    }

    #[test]
    fn unbounded_program() {
        // min y0 s.t. y0 <= 0 only
        let mut p = ConicProgram::new(1);
        p.objective = vec![1.0];
        let mut b = PsdBlock::new(1);
        let mut a = SparseSym::new();
        a.push(0, 0, -1.0);
        b.coefficients.push((0, a));
        p.blocks.push(b);
        let s = InteriorPoint::default().solve(&p).unwrap();
        assert_eq!(s.status, ConicStatus::Unbounded);
    }

    #[test]
    fn inconsistent_equalities() {
        let mut p = two_by_two();
        p.equalities.push(LinearEquality { coefficients: vec![(0, 1.0)], rhs: 1.0 });
        p.equalities.push(LinearEquality { coefficients: vec![(0, 2.0)], rhs: 3.0 });
        let s = InteriorPoint::default().solve(&p).unwrap();
        assert_eq!(s.status, ConicStatus::Infeasible);
    }
}
