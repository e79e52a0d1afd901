//! The exchange method for semi-infinite polynomial programs.
//!
//! The master problem over a finite index set is solved with the moment
//! hierarchy; each inner problem `min_u g(x_i, u)` is solved with the
//! Jacobian-augmented hierarchy, and its minimizers are added to the index
//! set until some master minimizer is feasible within `eps`.

use std::fmt::Write as _;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::conic::ConicBackend;
use crate::error::{Error, Result};
use crate::jacobian;
use crate::local::{local_candidates, polish_point, project_equalities, restore_feasibility};
use crate::moment::{solve_hierarchy, HierarchyOptions, HierarchyStatus, OrderStep, PolynomialProgram};
use crate::par;
use crate::poly::{Assignment, Block, Polynomial, SemialgebraicSet};

/// `min f(x)` over `x in X` subject to `g(x, u) >= 0` for all `u in U`.
#[derive(Clone, Debug, PartialEq)]
pub struct SippProblem {
    pub name: String,
    pub objective: Polynomial,
    pub coupling: Polynomial,
    pub x_set: SemialgebraicSet,
    pub u_set: SemialgebraicSet,
    pub x_compact: bool,
    pub u_compact: bool,
    /// User assertion that `U` is closed at infinity. Only recorded.
    pub closed_at_infinity: Option<bool>,
    /// Set once the index variables have been homogenized.
    pub homogenized: bool,
}

impl SippProblem {
    pub fn new(
        objective: Polynomial,
        coupling: Polynomial,
        x_set: SemialgebraicSet,
        u_set: SemialgebraicSet,
    ) -> Result<Self> {
        let p = SippProblem {
            name: String::new(),
            objective,
            coupling,
            x_set,
            u_set,
            x_compact: true,
            u_compact: true,
            closed_at_infinity: None,
            homogenized: false,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.x_set.space.block != Block::X || self.u_set.space.block != Block::U {
            return Err(Error::SpaceMismatch("X must be over x and U over u".into()));
        }
        if !self.objective.uses_only(&self.x_set.space) {
            return Err(Error::SpaceMismatch(format!("objective uses variables outside {}", self.x_set.space.name())));
        }
        for v in self.coupling.vars() {
            if !self.x_set.space.contains(v) && !self.u_set.space.contains(v) {
                return Err(Error::SpaceMismatch(format!("coupling uses {v}, which is in neither space")));
            }
        }
        if !self.x_compact {
            return Err(Error::Problem("X must be compact".into()));
        }
        Ok(())
    }

    /// `g(x, .)` as a polynomial in `u`.
    pub fn coupling_at(&self, x: &[f64]) -> Result<Polynomial> {
        Ok(self.coupling.substitute(&Assignment::of(&self.x_set.space, x)?))
    }

    /// `g(., u)` as a polynomial in `x`.
    pub fn cut_at(&self, u: &[f64]) -> Result<Polynomial> {
        Ok(self.coupling.substitute(&Assignment::of(&self.u_set.space, u)?))
    }

    pub fn coupling_value(&self, x: &[f64], u: &[f64]) -> Result<f64> {
        self.coupling.eval(&Assignment::of(&self.x_set.space, x)?.with(&self.u_set.space, u)?)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExchangeOptions {
    pub eps: f64,
    pub max_iter: usize,
    pub master: HierarchyOptions,
    pub inner: HierarchyOptions,
    /// Distance below which two index points are the same.
    pub dedup_tol: f64,
    pub seed: u64,
    /// `U_0`; sampled from `U` when empty.
    pub initial_points: Vec<Vec<f64>>,
    /// Box for sampling `U`; defaults to `[-10, 10]^p`, or `[-1, 1]^(p+1)`
    /// after homogenization.
    pub bounding_box: Option<Vec<(f64, f64)>>,
    pub jacobian_cap: usize,
    /// Sample count of the post-hoc check on noncompact index sets (0 = off).
    pub audit_samples: usize,
}

impl Default for ExchangeOptions {
    fn default() -> Self {
        ExchangeOptions {
            eps: 1e-4,
            max_iter: 15,
            master: HierarchyOptions::default(),
            inner: HierarchyOptions::default(),
            dedup_tol: 1e-7,
            seed: 0x5eed,
            initial_points: Vec::new(),
            bounding_box: None,
            jacobian_cap: jacobian::DEFAULT_CAP,
            audit_samples: 20_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExchangeStatus {
    Certified,
    IterationCap,
    MasterInfeasible,
    InnerUnattainedSuspected,
    /// The master hierarchy did not certify up to its order cap.
    NumericalFailure,
}

impl ExchangeStatus {
    /// Process exit code of the command line pipeline.
    pub fn exit_code(self) -> i32 {
        match self {
            ExchangeStatus::Certified => 0,
            ExchangeStatus::MasterInfeasible => 1,
            ExchangeStatus::IterationCap => 2,
            ExchangeStatus::InnerUnattainedSuspected => 3,
            ExchangeStatus::NumericalFailure => 4,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MasterOutcome {
    pub status: HierarchyStatus,
    /// `f_k^min`, or its best lower bound when uncertified.
    pub value: f64,
    pub order: usize,
    pub flat_order: Option<usize>,
    pub minimizers: Vec<Vec<f64>>,
    pub steps: Vec<OrderStep>,
    /// Set when the minimizer is a feasible point attaining the bound found
    /// near the mean point, not an extracted atom.
    #[serde(default)]
    pub mean_point_certificate: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InnerOutcome {
    pub x: Vec<f64>,
    /// `g_i^k`; `-inf` when the relaxation is unbounded, `+inf` when `U` is empty.
    pub value: f64,
    pub certified: bool,
    pub minimizers: Vec<Vec<f64>>,
    pub order: usize,
    pub jacobian_equations: usize,
    pub steps: Vec<OrderStep>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    pub index_points: usize,
    pub master: MasterOutcome,
    pub inner: Vec<InnerOutcome>,
    pub accepted: Vec<Vec<f64>>,
    pub new_points: usize,
}

/// Sampling check of accepted points on a noncompact index set.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AuditReport {
    pub samples: usize,
    pub min_value: f64,
    pub argmin: Option<Vec<f64>>,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExchangeReport {
    pub status: ExchangeStatus,
    /// `f*`: the last master value.
    pub f_star: Option<f64>,
    pub x_star: Vec<Vec<f64>>,
    /// `min over X* of min_u g(x*, u)`.
    pub obj2: Option<f64>,
    /// Number of master problems solved.
    pub iterations: usize,
    pub index_points: Vec<Vec<f64>>,
    pub trace: Vec<IterationRecord>,
    pub audit: Option<AuditReport>,
    pub message: Option<String>,
    pub elapsed_secs: f64,
}

impl ExchangeReport {
    /// Objective values along the trace.
    pub fn master_values(&self) -> Vec<f64> {
        self.trace.iter().map(|r| r.master.value).collect()
    }
}

fn bounding_box(problem: &SippProblem, opts: &ExchangeOptions) -> Vec<(f64, f64)> {
    let p = problem.u_set.space.dim;
    match &opts.bounding_box {
        Some(b) if b.len() == p => b.clone(),
        _ if problem.homogenized => vec![(-1.0, 1.0); p],
        _ => vec![(-10.0, 10.0); p],
    }
}

/// Rejection sampling in a box, with points projected onto the equalities.
pub fn sample_point(
    set: &SemialgebraicSet,
    bbox: &[(f64, f64)],
    rng: &mut ChaCha8Rng,
    tries: usize,
) -> Result<Option<Vec<f64>>> {
    for _ in 0..tries {
        let mut z: Vec<f64> = bbox.iter().map(|&(lo, hi)| rng.random_range(lo..=hi)).collect();
        if !project_equalities(set, &mut z)? {
            continue;
        }
        if set.contains(&z, 1e-9)? {
            return Ok(Some(z));
        }
    }
    Ok(None)
}

/// `min f` over `X` and the cuts `g(x, u_j) >= 0`.
pub fn master_program(problem: &SippProblem, points: &[Vec<f64>]) -> Result<Option<PolynomialProgram>> {
    let mut ineqs = problem.x_set.inequalities.clone();
    for u in points {
        let cut = problem.cut_at(u)?;
        if cut.degree() <= 0 {
            // a constant cut is either vacuous or makes the master infeasible
            if cut.coeff(&crate::poly::Monomial::one()) < 0.0 {
                return Ok(None);
            }
            continue;
        }
        // u and -u give the same cut for forms even in u
        let n = cut.normalized();
        if ineqs.iter().any(|g| g.normalized().max_coeff_diff(&n) <= 1e-10) {
            continue;
        }
        ineqs.push(cut);
    }
    let set = SemialgebraicSet::new(problem.x_set.space.clone(), problem.x_set.equalities.clone(), ineqs)?;
    Ok(Some(PolynomialProgram::new(problem.objective.clone(), set)?))
}

pub fn solve_master(
    problem: &SippProblem,
    points: &[Vec<f64>],
    opts: &ExchangeOptions,
    backend: &dyn ConicBackend,
) -> Result<MasterOutcome> {
    let Some(prog) = master_program(problem, points)? else {
        return Ok(MasterOutcome {
            status: HierarchyStatus::Infeasible,
            value: f64::INFINITY,
            order: 0,
            flat_order: None,
            minimizers: Vec::new(),
            steps: Vec::new(),
            mean_point_certificate: false,
        });
    };
    let h = solve_hierarchy(&prog, &opts.master, backend)?;
    let mut out = MasterOutcome {
        status: h.status,
        value: h.lower_bound,
        order: h.order,
        flat_order: h.flat_order,
        minimizers: h.minimizers,
        mean_point_certificate: h.steps.last().is_some_and(|s| s.mean_point),
        steps: h.steps,
    };
    if out.status == HierarchyStatus::Uncertified {
        // local minimizers near the mean point of the best relaxation; one
        // that attains the lower bound is global
        if let Some(z) = h.mean_point.as_deref().filter(|_| h.lower_bound.is_finite()) {
            let mut best: Option<(f64, Vec<f64>)> = None;
            for c in local_candidates(&prog, z)? {
                if let Some(w) = restore_feasibility(&prog.set, &c, 10)? {
                    let fw = prog.objective.eval_at(&prog.set.space, &w)?;
                    if best.as_ref().is_none_or(|(b, _)| fw < *b) {
                        best = Some((fw, w));
                    }
                }
            }
            if let Some((fz, z)) = best {
                log::debug!("local candidate {z:?}, value {fz}, bound {}", h.lower_bound);
                if fz - h.lower_bound <= opts.master.optimality_tol * (1.0 + h.lower_bound.abs()) {
                    log::info!("master not flat up to order {}, a local minimizer attains the bound", out.order);
                    out.status = HierarchyStatus::Certified;
                    out.minimizers = vec![z];
                    out.mean_point_certificate = true;
                    return Ok(out);
                }
            }
        }
        log::warn!("master problem not certified up to order {}", opts.master.max_order);
    }
    Ok(out)
}

/// `min_u g(x, u)` over `U` by the Jacobian-augmented hierarchy.
pub fn solve_inner(
    problem: &SippProblem,
    x: &[f64],
    opts: &ExchangeOptions,
    backend: &dyn ConicBackend,
) -> Result<InnerOutcome> {
    let obj = problem.coupling_at(x)?;
    let mut out = InnerOutcome {
        x: x.to_vec(),
        value: f64::NAN,
        certified: true,
        minimizers: Vec::new(),
        order: 0,
        jacobian_equations: 0,
        steps: Vec::new(),
    };
    if obj.degree() <= 0 {
        out.value = obj.coeff(&crate::poly::Monomial::one());
        return Ok(out);
    }
    let base = PolynomialProgram::new(obj, problem.u_set.clone())?;
    let aug = jacobian::augment(&base, opts.jacobian_cap)?;
    out.jacobian_equations = aug.phi.len();
    let h = solve_hierarchy(&aug.problem()?, &opts.inner, backend)?;
    out.order = h.order;
    out.steps = h.steps;
    match h.status {
        HierarchyStatus::Certified => {
            out.value = h.lower_bound;
            out.minimizers = h.minimizers.iter().map(|t| polish_point(&problem.u_set, t)).collect::<Result<_>>()?;
        }
        HierarchyStatus::Infeasible => out.value = f64::INFINITY,
        HierarchyStatus::Uncertified => {
            out.certified = false;
            out.value = h.lower_bound;
            log::warn!("inner problem at {x:?} not certified, bound {}", h.lower_bound);
        }
    }
    Ok(out)
}

fn dedup_insert(points: &mut Vec<Vec<f64>>, p: &[f64], tol: f64) -> bool {
    let dup = points.iter().any(|q| q.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt() <= tol);
    if !dup {
        points.push(p.to_vec());
    }
    !dup
}

/// Minimum of `g(x, .)` over sample points of `U`: a grid for `p <= 2`
/// without equalities, random points otherwise.
pub fn audit(
    problem: &SippProblem,
    xs: &[Vec<f64>],
    bbox: &[(f64, f64)],
    samples: usize,
    seed: u64,
    threshold: f64,
) -> Result<AuditReport> {
    let set = &problem.u_set;
    let p = set.space.dim;
    let mut pts: Vec<Vec<f64>> = Vec::new();
    if p <= 2 && set.equalities.is_empty() {
        let m = ((samples as f64).powf(1.0 / p as f64).ceil() as usize).max(2);
        let total = m.pow(p as u32);
        for i in 0..total {
            let mut rem = i;
            let z: Vec<f64> = bbox
                .iter()
                .map(|&(lo, hi)| {
                    let j = rem % m;
                    rem /= m;
                    lo + (hi - lo) * j as f64 / (m - 1) as f64
                })
                .collect();
            if set.contains(&z, 0.0)? {
                pts.push(z);
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xa0d1);
        for _ in 0..samples {
            if let Some(z) = sample_point(set, bbox, &mut rng, 20)? {
                pts.push(z);
            }
        }
    }
    let mut best = (f64::INFINITY, None);
    for x in xs {
        let g = problem.coupling_at(x)?;
        for z in &pts {
            let v = g.eval_at(&set.space, z)?;
            if v < best.0 {
                best = (v, Some(z.clone()));
            }
        }
    }
    Ok(AuditReport { samples: pts.len(), min_value: best.0, argmin: best.1, passed: best.0 >= threshold })
}

/// Run the exchange method.
pub fn exchange_loop(problem: &SippProblem, opts: &ExchangeOptions, backend: &dyn ConicBackend) -> Result<ExchangeReport> {
    problem.validate()?;
    let start = Instant::now();
    let bbox = bounding_box(problem, opts);
    let mut points: Vec<Vec<f64>> = Vec::new();
    for u in &opts.initial_points {
        if u.len() != problem.u_set.space.dim {
            return Err(Error::Dimension { expected: problem.u_set.space.dim, got: u.len() });
        }
        dedup_insert(&mut points, u, opts.dedup_tol);
    }
    if points.is_empty() {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let u0 = sample_point(&problem.u_set, &bbox, &mut rng, 100_000)?
            .ok_or_else(|| Error::Sampling("no point of U found in the bounding box".into()))?;
        points.push(u0);
    }

    let mut trace = Vec::new();
    let mut status = ExchangeStatus::IterationCap;
    let mut x_star = Vec::new();
    let mut obj2 = None;
    let mut f_star = None;
    let mut message = None;
    for k in 0..=opts.max_iter {
        let master = solve_master(problem, &points, opts, backend)?;
        log::info!(
            "iteration {k}: {} index points, master {:?} value {:.6}, {} minimizers",
            points.len(),
            master.status,
            master.value,
            master.minimizers.len()
        );
        let mut rec = IterationRecord {
            k,
            index_points: points.len(),
            master,
            inner: Vec::new(),
            accepted: Vec::new(),
            new_points: 0,
        };
        match rec.master.status {
            HierarchyStatus::Infeasible => {
                status = ExchangeStatus::MasterInfeasible;
                f_star = None;
                message = Some("the discretized master problem is infeasible".into());
                trace.push(rec);
                break;
            }
            HierarchyStatus::Uncertified => {
                status = ExchangeStatus::NumericalFailure;
                f_star = Some(rec.master.value);
                message = Some(format!(
                    "the master relaxation did not certify up to order {}",
                    opts.master.max_order
                ));
                trace.push(rec);
                break;
            }
            HierarchyStatus::Certified => {}
        }
        f_star = Some(rec.master.value);
        let inner: Vec<Result<InnerOutcome>> =
            par::map_slice(&rec.master.minimizers, |x| solve_inner(problem, x, opts, backend));
        rec.inner = inner.into_iter().collect::<Result<_>>()?;
        for io in &rec.inner {
            for t in &io.minimizers {
                if dedup_insert(&mut points, t, opts.dedup_tol) {
                    rec.new_points += 1;
                }
            }
            // an uncertified inner still carries a valid lower bound
            if io.value >= -opts.eps {
                rec.accepted.push(io.x.clone());
            }
        }
        let accepted = !rec.accepted.is_empty();
        if accepted {
            x_star = rec.accepted.clone();
            obj2 = rec
                .inner
                .iter()
                .filter(|io| io.value >= -opts.eps)
                .map(|io| io.value)
                .reduce(f64::min);
        }
        let stalled = rec.new_points == 0;
        trace.push(rec);
        if accepted {
            status = ExchangeStatus::Certified;
            break;
        }
        if stalled {
            status = ExchangeStatus::InnerUnattainedSuspected;
            message = Some(
                "the index set stopped growing without an accepted point; the inner minimum may be \
                 unattained, try homogenizing the index variables"
                    .into(),
            );
            break;
        }
    }

    let mut audit_report = None;
    if status == ExchangeStatus::Certified && !problem.u_compact && opts.audit_samples > 0 {
        let a = audit(problem, &x_star, &bbox, opts.audit_samples, opts.seed, -10.0 * opts.eps)?;
        if !a.passed {
            status = ExchangeStatus::InnerUnattainedSuspected;
            message = Some(format!(
                "sampling of the noncompact index set found g = {:.3e} at an accepted point; \
                 try homogenizing the index variables",
                a.min_value
            ));
        }
        audit_report = Some(a);
    }
    Ok(ExchangeReport {
        status,
        f_star,
        x_star,
        obj2,
        iterations: trace.len(),
        index_points: points,
        trace,
        audit: audit_report,
        message,
        elapsed_secs: start.elapsed().as_secs_f64(),
    })
}

fn fmt_point(p: &[f64]) -> String {
    let s: Vec<String> = p.iter().map(|v| format!("{v:.4}")).collect();
    format!("({})", s.join(", "))
}

/// Plain-text summary with the columns x*, Iter, f*, Obj_2.
pub fn render_table(name: &str, r: &ExchangeReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<16} {:<32} {:>5} {:>12} {:>12}  status", "problem", "x*", "Iter", "f*", "Obj_2");
    let xs = if r.x_star.is_empty() { "-".to_string() } else { r.x_star.iter().map(|p| fmt_point(p)).collect::<Vec<_>>().join(" ") };
    let f = r.f_star.map_or("-".into(), |v| format!("{v:.4}"));
    let o = r.obj2.map_or("-".into(), |v| format!("{v:.4e}"));
    let _ = writeln!(out, "{name:<16} {xs:<32} {:>5} {f:>12} {o:>12}  {:?}", r.iterations, r.status);
    if let Some(m) = &r.message {
        let _ = writeln!(out, "  note: {m}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::InteriorPoint;
    use crate::poly::VariableSpace;

    fn p(s: &str) -> Polynomial {
        s.parse().unwrap()
    }

    #[test]
    fn single_index_point_is_finite_program() {
        // U = {1}: min x1 s.t. x1 - u1 >= 0, x1 in [-2, 2]
        let x = SemialgebraicSet::new(VariableSpace::x(1), vec![], vec![p("4 - x1^2")]).unwrap();
        let u = SemialgebraicSet::new(VariableSpace::u(1), vec![p("u1 - 1")], vec![]).unwrap();
        let prob = SippProblem::new(p("x1"), p("x1 - u1"), x, u).unwrap();
        let r = exchange_loop(&prob, &ExchangeOptions::default(), &InteriorPoint::default()).unwrap();
        assert_eq!(r.status, ExchangeStatus::Certified);
        assert_eq!(r.iterations, 1);
        assert!((r.f_star.unwrap() - 1.0).abs() < 1e-5);
    }

    #[test]
    fn interval_index_set() {
        // x1 >= u1^2 for u1 in [-1, 1]: the worst index point is u1 = +-1
        let x = SemialgebraicSet::new(VariableSpace::x(1), vec![], vec![p("9 - x1^2")]).unwrap();
        let u = SemialgebraicSet::new(VariableSpace::u(1), vec![], vec![p("1 - u1^2")]).unwrap();
        let prob = SippProblem::new(p("x1"), p("x1 - u1^2"), x, u).unwrap();
        let opts = ExchangeOptions { initial_points: vec![vec![0.0]], ..Default::default() };
        let r = exchange_loop(&prob, &opts, &InteriorPoint::default()).unwrap();
        assert_eq!(r.status, ExchangeStatus::Certified);
        assert!((r.x_star[0][0] - 1.0).abs() < 1e-4);
        assert_eq!(r.iterations, 2);
        assert!(r.obj2.unwrap() >= -1e-4);
    }

    #[test]
    fn polish_snaps_to_bound() {
        let u = SemialgebraicSet::new(VariableSpace::u(1), vec![], vec![p("u1"), p("2 - u1")]).unwrap();
        assert_eq!(polish_point(&u, &[-1e-9]).unwrap(), vec![0.0]);
        assert_eq!(polish_point(&u, &[0.7]).unwrap(), vec![0.7]);
    }

    #[test]
    fn sampler_hits_circle() {
        let u = SemialgebraicSet::new(VariableSpace::u(2), vec![p("u1^2 + u2^2 - 1")], vec![p("u1")]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let z = sample_point(&u, &[(-2.0, 2.0); 2], &mut rng, 100).unwrap().unwrap();
        assert!((z[0] * z[0] + z[1] * z[1] - 1.0).abs() < 1e-9 && z[0] >= 0.0);
    }
}
