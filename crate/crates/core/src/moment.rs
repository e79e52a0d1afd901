//! Truncated moment sequences, moment and localizing matrices, and the
//! moment relaxations of a polynomial program.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::conic::{ConicBackend, ConicProgram, ConicStatus, LinearEquality, PsdBlock, SparseSym};
use crate::error::{Error, Result};
use crate::extract::{check_flat_truncation, extract_minimizers, ExtractOptions, RankProfile};
use crate::local::restore_feasibility;
use crate::poly::{binomial, exponent_basis, Assignment, Polynomial, SemialgebraicSet, Var};

/// Graded-lex list of exponent vectors in `n` variables up to a degree, with reverse lookup.
#[derive(Debug)]
pub struct MomentIndex {
    pub nvars: usize,
    pub max_degree: usize,
    exps: Vec<Vec<u8>>,
    lookup: HashMap<Vec<u8>, usize>,
}

static INDEX_CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<MomentIndex>>>> = OnceLock::new();

impl MomentIndex {
    /// Shared index for `(n, max_degree)`.
    pub fn get(nvars: usize, max_degree: usize) -> Arc<MomentIndex> {
        let cache = INDEX_CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().unwrap();
        guard
            .entry((nvars, max_degree))
            .or_insert_with(|| {
                let exps = exponent_basis(nvars, max_degree);
                let lookup = exps.iter().enumerate().map(|(i, e)| (e.clone(), i)).collect();
                Arc::new(MomentIndex { nvars, max_degree, exps, lookup })
            })
            .clone()
    }

    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }

    /// Number of monomials of degree at most `t`; they form a prefix of the index.
    pub fn len_upto(&self, t: usize) -> usize {
        binomial(self.nvars + t, t)
    }

    pub fn exponent(&self, i: usize) -> &[u8] {
        &self.exps[i]
    }

    pub fn position(&self, e: &[u8]) -> Option<usize> {
        self.lookup.get(e).copied()
    }

    /// Position of `e_a + e_b + extra`.
    fn sum_position(&self, a: usize, b: usize, extra: &[u8], buf: &mut Vec<u8>) -> Option<usize> {
        buf.clear();
        buf.extend(self.exps[a].iter().zip(&self.exps[b]).zip(extra).map(|((x, y), z)| x + y + z));
        self.position(buf)
    }
}

/// `y = (y_alpha)` for `|alpha| <= 2k`, in graded-lex order.
#[derive(Clone, Debug)]
pub struct TruncatedMomentSequence {
    pub vars: Vec<Var>,
    pub order: usize,
    index: Arc<MomentIndex>,
    pub values: Vec<f64>,
}

impl TruncatedMomentSequence {
    pub fn new(vars: Vec<Var>, order: usize, values: Vec<f64>) -> Result<Self> {
        let index = MomentIndex::get(vars.len(), 2 * order);
        if values.len() != index.len() {
            return Err(Error::Dimension { expected: index.len(), got: values.len() });
        }
        Ok(TruncatedMomentSequence { vars, order, index, values })
    }

    /// Moments of `sum_j w_j delta(points_j)`.
    pub fn from_atoms(vars: Vec<Var>, order: usize, points: &[Vec<f64>], weights: &[f64]) -> Self {
        let index = MomentIndex::get(vars.len(), 2 * order);
        let values = (0..index.len())
            .map(|i| {
                let e = index.exponent(i);
                points
                    .iter()
                    .zip(weights)
                    .map(|(p, w)| w * p.iter().zip(e).map(|(x, &k)| x.powi(k as i32)).product::<f64>())
                    .sum()
            })
            .collect();
        TruncatedMomentSequence { vars, order, index, values }
    }

    pub fn index(&self) -> &MomentIndex {
        &self.index
    }

    pub fn value(&self, e: &[u8]) -> Option<f64> {
        self.index.position(e).map(|i| self.values[i])
    }

    /// First-order moments `(y_{e_1}, ..., y_{e_n})`.
    pub fn first_moments(&self) -> Vec<f64> {
        (1..=self.vars.len()).map(|i| self.values[i]).collect()
    }
}

/// The Riesz functional `L_y(q) = sum_alpha q_alpha y_alpha`.
pub fn riesz_apply(y: &TruncatedMomentSequence, q: &Polynomial) -> Result<f64> {
    let mut acc = 0.0;
    for (e, c) in q.dense_terms(&y.vars)? {
        let v = y.value(&e).ok_or_else(|| {
            Error::Order(format!("degree {} exceeds the sequence order 2k = {}", q.degree(), 2 * y.order))
        })?;
        acc += c * v;
    }
    Ok(acc)
}

/// `M_t(y)`, of size `C(n + t, t)`.
pub fn moment_matrix(y: &TruncatedMomentSequence, t: usize) -> Result<DMatrix<f64>> {
    localizing_matrix(y, &Polynomial::constant(1.0), t)
}

/// `L_p^{(t)}(y)` with entries `sum_gamma p_gamma y_{alpha + beta + gamma}`
/// over `|alpha|, |beta| <= t`. Requires `2t + deg p <= 2k`.
pub fn localizing_matrix(y: &TruncatedMomentSequence, p: &Polynomial, t: usize) -> Result<DMatrix<f64>> {
    let deg = p.degree().max(0) as usize;
    if 2 * t + deg > 2 * y.order {
        return Err(Error::Order(format!(
            "localizing order {t} with a degree-{deg} polynomial needs moments beyond 2k = {}",
            2 * y.order
        )));
    }
    let terms = p.dense_terms(&y.vars)?;
    let s = y.index.len_upto(t);
    let mut m = DMatrix::zeros(s, s);
    let mut buf = Vec::new();
    for a in 0..s {
        for b in a..s {
            let mut v = 0.0;
            for (g, c) in &terms {
                let i = y.index.sum_position(a, b, g, &mut buf).expect("degree checked above");
                v += c * y.values[i];
            }
            m[(a, b)] = v;
            m[(b, a)] = v;
        }
    }
    Ok(m)
}

/// `min f(z)` over a basic semialgebraic set.
#[derive(Clone, Debug)]
pub struct PolynomialProgram {
    pub objective: Polynomial,
    pub set: SemialgebraicSet,
}

impl PolynomialProgram {
    pub fn new(objective: Polynomial, set: SemialgebraicSet) -> Result<Self> {
        if !objective.uses_only(&set.space) {
            return Err(Error::SpaceMismatch(format!(
                "objective uses variables outside {}",
                set.space.name()
            )));
        }
        Ok(PolynomialProgram { objective, set })
    }

    /// `d = max(1, d_g, d_h)`.
    pub fn constraint_half_degree(&self) -> usize {
        self.set.half_degree()
    }

    /// Smallest valid relaxation order `max(d_f, d)`.
    pub fn min_order(&self) -> usize {
        self.objective.half_degree().max(self.constraint_half_degree())
    }

    pub fn vars(&self) -> Vec<Var> {
        self.set.space.vars()
    }
}

/// Options of a single relaxation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RelaxationOptions {
    /// Add the redundant constraint `radius_sq - |z|^2 >= 0`.
    pub ball_radius_sq: Option<f64>,
    /// Accept non-optimal backend exits whose residuals are below this.
    pub accept_residual: f64,
}

impl Default for RelaxationOptions {
    fn default() -> Self {
        RelaxationOptions { ball_radius_sq: None, accept_residual: 1e-6 }
    }
}

/// A moment relaxation as a conic program in the variables `y_alpha`.
#[derive(Clone, Debug)]
pub struct MomentSdp {
    pub conic: ConicProgram,
    pub vars: Vec<Var>,
    pub order: usize,
}

fn localizing_block(terms: &[(Vec<u8>, f64)], index: &MomentIndex, t: usize, nvars_y: usize) -> PsdBlock {
    let s = index.len_upto(t);
    let mut per_var: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); nvars_y];
    let mut buf = Vec::new();
    for a in 0..s {
        for b in a..s {
            for (g, c) in terms {
                let i = index.sum_position(a, b, g, &mut buf).expect("degree within 2k");
                per_var[i].push((a, b, *c));
            }
        }
    }
    let mut blk = PsdBlock::new(s);
    for (i, ents) in per_var.into_iter().enumerate() {
        if ents.is_empty() {
            continue;
        }
        let mut m = SparseSym::new();
        for (a, b, c) in ents {
            m.push(a, b, c);
        }
        m.compress();
        if !m.is_empty() {
            blk.coefficients.push((i, m));
        }
    }
    blk
}

/// Build the order-`k` moment relaxation
/// `min <f, y>` s.t. `y_0 = 1`, `L_h(y) = 0`, `L_g(y) >= 0`, `M_k(y) >= 0`.
pub fn build_moment_sdp(prog: &PolynomialProgram, k: usize, opts: &RelaxationOptions) -> Result<MomentSdp> {
    let kmin = prog.min_order();
    if k < kmin {
        return Err(Error::Order(format!("order {k} is below max(d_f, d) = {kmin}")));
    }
    let vars = prog.vars();
    let n = vars.len();
    let index = MomentIndex::get(n, 2 * k);
    let nv = index.len();
    let mut conic = ConicProgram::new(nv);
    for (e, c) in prog.objective.dense_terms(&vars)? {
        conic.objective[index.position(&e).unwrap()] += c;
    }
    conic.equalities.push(LinearEquality { coefficients: vec![(0, 1.0)], rhs: 1.0 });

    conic.blocks.push(localizing_block(&[(vec![0; n], 1.0)], &index, k, nv));
    let mut ineqs: Vec<Polynomial> = prog.set.inequalities.iter().map(|g| g.normalized()).collect();
    if let Some(r) = opts.ball_radius_sq {
        let mut ball = Polynomial::constant(r);
        for &v in &vars {
            ball = &ball - &(&Polynomial::var(v) * &Polynomial::var(v));
        }
        ineqs.push(ball.normalized());
    }
    for g in &ineqs {
        let t = k - g.half_degree();
        conic.blocks.push(localizing_block(&g.dense_terms(&vars)?, &index, t, nv));
    }
    // L_h(y) = 0 entrywise: one row per distinct alpha + beta
    let mut seen = std::collections::HashSet::new();
    for h in &prog.set.equalities {
        let h = h.normalized();
        let terms = h.dense_terms(&vars)?;
        let t = k - h.half_degree();
        let rows = index.len_upto(2 * t);
        let mut buf = Vec::new();
        for a in 0..rows {
            let mut coefs: Vec<(usize, f64)> = terms
                .iter()
                .map(|(g, c)| (index.sum_position(a, 0, g, &mut buf).unwrap(), *c))
                .collect();
            coefs.sort_by_key(|&(i, _)| i);
            let key: Vec<(usize, u64)> = coefs.iter().map(|&(i, c)| (i, c.to_bits())).collect();
            if seen.insert(key) {
                conic.equalities.push(LinearEquality { coefficients: coefs, rhs: 0.0 });
            }
        }
    }
    Ok(MomentSdp { conic, vars, order: k })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelaxationStatus {
    Solved,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

/// Outcome of one relaxation.
#[derive(Clone, Debug)]
pub struct RelaxationResult {
    pub order: usize,
    pub status: RelaxationStatus,
    /// `f_k`, the sum-of-squares side value (a lower bound when solved).
    pub lower_bound: f64,
    /// `f_k^*`, the moment side value.
    pub moment_value: f64,
    pub y: TruncatedMomentSequence,
    pub backend_status: ConicStatus,
    pub residual: f64,
    pub iterations: usize,
}

/// Build and solve the order-`k` relaxation.
pub fn solve_relaxation(
    prog: &PolynomialProgram,
    k: usize,
    opts: &RelaxationOptions,
    backend: &dyn ConicBackend,
) -> Result<RelaxationResult> {
    let sdp = build_moment_sdp(prog, k, opts)?;
    let sol = backend.solve(&sdp.conic)?;
    let residual = sol.residuals.max();
    let status = match sol.status {
        ConicStatus::Optimal => RelaxationStatus::Solved,
        ConicStatus::Infeasible => RelaxationStatus::Infeasible,
        ConicStatus::Unbounded => RelaxationStatus::Unbounded,
        ConicStatus::MaxIter | ConicStatus::NumericalError if residual <= opts.accept_residual => {
            RelaxationStatus::Solved
        }
        _ => RelaxationStatus::NumericalFailure,
    };
    log::debug!(
        "order {k}: {:?} after {} iterations, moment {:.8}, sos {:.8}, residual {:.1e}",
        sol.status,
        sol.iterations,
        sol.objective,
        sol.dual_objective,
        residual
    );
    let y = TruncatedMomentSequence::new(sdp.vars, k, sol.y)?;
    Ok(RelaxationResult {
        order: k,
        status,
        lower_bound: sol.dual_objective,
        moment_value: sol.objective,
        y,
        backend_status: sol.status,
        residual,
        iterations: sol.iterations,
    })
}

/// Options of the hierarchy loop.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HierarchyOptions {
    /// First order tried; defaults to `max(d_f, d)`.
    pub start_order: Option<usize>,
    pub max_order: usize,
    pub relaxation: RelaxationOptions,
    pub extract: ExtractOptions,
    /// Atoms whose objective exceeds the bound by more than this (relative) are rejected.
    pub optimality_tol: f64,
}

impl Default for HierarchyOptions {
    fn default() -> Self {
        HierarchyOptions {
            start_order: None,
            max_order: 6,
            relaxation: RelaxationOptions::default(),
            extract: ExtractOptions::default(),
            optimality_tol: 1e-4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HierarchyStatus {
    /// Flat truncation held and minimizers were extracted.
    Certified,
    /// The order cap was reached without certification.
    Uncertified,
    /// A relaxation was infeasible, so the program is.
    Infeasible,
}

/// One order of the hierarchy, for traces.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OrderStep {
    pub order: usize,
    pub status: RelaxationStatus,
    pub lower_bound: f64,
    pub moment_value: f64,
    pub ranks: Vec<usize>,
    pub flat_order: Option<usize>,
    pub extracted: usize,
    pub iterations: usize,
    /// Certified by the mean point attaining the bound rather than by extraction.
    #[serde(default)]
    pub mean_point: bool,
}

#[derive(Clone, Debug)]
pub struct HierarchyResult {
    pub status: HierarchyStatus,
    /// Best valid lower bound found.
    pub lower_bound: f64,
    pub moment_value: f64,
    pub order: usize,
    pub flat_order: Option<usize>,
    pub minimizers: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub rank_profile: Option<RankProfile>,
    pub steps: Vec<OrderStep>,
    /// Normalized first moments of the relaxation that gave the bound.
    pub mean_point: Option<Vec<f64>>,
}

impl HierarchyResult {
    pub fn is_certified(&self) -> bool {
        self.status == HierarchyStatus::Certified
    }
}

/// Solve relaxations of increasing order until flat truncation certifies
/// global optimality, then extract the minimizers.
pub fn solve_hierarchy(
    prog: &PolynomialProgram,
    opts: &HierarchyOptions,
    backend: &dyn ConicBackend,
) -> Result<HierarchyResult> {
    let d = prog.constraint_half_degree();
    let t_min = prog.min_order();
    let k0 = opts.start_order.unwrap_or(t_min).max(t_min);
    let mut steps = Vec::new();
    let mut best: Option<(f64, f64, usize)> = None;
    let mut mean_point = None;
    for k in k0..=opts.max_order.max(k0) {
        let r = solve_relaxation(prog, k, &opts.relaxation, backend)?;
        let mut step = OrderStep {
            order: k,
            status: r.status,
            lower_bound: r.lower_bound,
            moment_value: r.moment_value,
            ranks: Vec::new(),
            flat_order: None,
            extracted: 0,
            iterations: r.iterations,
            mean_point: false,
        };
        match r.status {
            RelaxationStatus::Infeasible => {
                steps.push(step);
                return Ok(HierarchyResult {
                    status: HierarchyStatus::Infeasible,
                    lower_bound: f64::INFINITY,
                    moment_value: f64::INFINITY,
                    order: k,
                    flat_order: None,
                    minimizers: Vec::new(),
                    weights: Vec::new(),
                    rank_profile: None,
                    steps,
                    mean_point: None,
                });
            }
            RelaxationStatus::Unbounded | RelaxationStatus::NumericalFailure => {
                steps.push(step);
                continue;
            }
            RelaxationStatus::Solved => {}
        }
        if best.is_none_or(|(b, _, _)| r.lower_bound > b) {
            best = Some((r.lower_bound, r.moment_value, k));
            let y0 = r.y.values[0];
            mean_point = (y0.abs() > 1e-12).then(|| r.y.first_moments().iter().map(|v| v / y0).collect());
        }
        let profile = RankProfile::compute(&r.y, opts.extract.rank_tol);
        step.ranks = profile.ranks.clone();
        if let Some(t) = check_flat_truncation(&profile, d, t_min) {
            step.flat_order = Some(t);
            match extract_minimizers(&r.y, t, &opts.extract) {
                Ok(atoms) => {
                    let mut keep = Vec::new();
                    for (p, w) in atoms.points.iter().zip(&atoms.weights) {
                        match attains_bound(prog, p, r.lower_bound, opts)? {
                            Some(q) => keep.push((q, *w)),
                            None => log::debug!("order {k}: atom {p:?} rejected"),
                        }
                    }
                    step.extracted = keep.len();
                    if !keep.is_empty() {
                        steps.push(step);
                        let (minimizers, weights) = keep.into_iter().unzip();
                        return Ok(HierarchyResult {
                            status: HierarchyStatus::Certified,
                            lower_bound: r.lower_bound,
                            moment_value: r.moment_value,
                            order: k,
                            flat_order: Some(t),
                            minimizers,
                            weights,
                            rank_profile: Some(profile),
                            steps,
                            mean_point: None,
                        });
                    }
                }
                Err(e) => log::debug!("order {k}: {e}"),
            }
        }
        // a feasible mean point attaining the bound is a minimizer even when
        // the ranks are blurred by solver noise
        let y0 = r.y.values[0];
        if y0.abs() > 1e-12 {
            let z: Vec<f64> = r.y.first_moments().iter().map(|v| v / y0).collect();
            if let Some(q) = attains_bound(prog, &z, r.lower_bound, opts)? {
                step.mean_point = true;
                step.extracted = 1;
                steps.push(step);
                return Ok(HierarchyResult {
                    status: HierarchyStatus::Certified,
                    lower_bound: r.lower_bound,
                    moment_value: r.moment_value,
                    order: k,
                    flat_order: None,
                    minimizers: vec![q],
                    weights: vec![1.0],
                    rank_profile: Some(profile),
                    steps,
                    mean_point: None,
                });
            }
        }
        steps.push(step);
    }
    let (lb, mv, k) = best.unwrap_or((f64::NEG_INFINITY, f64::NAN, opts.max_order));
    Ok(HierarchyResult {
        status: HierarchyStatus::Uncertified,
        lower_bound: lb,
        moment_value: mv,
        order: k,
        flat_order: None,
        minimizers: Vec::new(),
        weights: Vec::new(),
        rank_profile: None,
        steps,
        mean_point,
    })
}

/// `p`, or a feasible point within the snap distance of it, when its
/// objective is within the optimality tolerance of `bound`.
fn attains_bound(prog: &PolynomialProgram, p: &[f64], bound: f64, opts: &HierarchyOptions) -> Result<Option<Vec<f64>>> {
    let q = if feasible(&prog.set, p, opts.extract.feasibility_tol)? {
        p.to_vec()
    } else {
        match restore_feasibility(&prog.set, p, 10)? {
            Some(q) if dist(&q, p) <= opts.extract.snap_tol * (1.0 + norm(p)) => q,
            _ => return Ok(None),
        }
    };
    let fv = prog.objective.eval_at(&prog.set.space, &q)?;
    Ok((fv - bound <= opts.optimality_tol * (1.0 + bound.abs())).then_some(q))
}

fn norm(p: &[f64]) -> f64 {
    p.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn dist(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// Constraint check relative to the magnitude of the terms at `p`.
pub fn feasible(set: &SemialgebraicSet, p: &[f64], tol: f64) -> Result<bool> {
    let a = Assignment::of(&set.space, p)?;
    let scale = |q: &Polynomial| -> Result<f64> {
        let mut s = 0.0;
        for (m, c) in q.terms() {
            s += (c * Polynomial::term(m.clone(), 1.0).eval(&a)?).abs();
        }
        Ok(1.0 + s)
    };
    for h in &set.equalities {
        if h.eval(&a)?.abs() > tol * scale(h)? {
            return Ok(false);
        }
    }
    for g in &set.inequalities {
        if g.eval(&a)? < -tol * scale(g)? {
            return Ok(false);
        }
    }
    Ok(true)
}
