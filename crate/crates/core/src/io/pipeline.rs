//! Parse, homogenize if asked, run the exchange method, write the outputs.

use std::path::PathBuf;

use crate::conic::{sdpa, InteriorPoint, IpmOptions};
use crate::error::Result;
use crate::exchange::{exchange_loop, master_program, render_table, ExchangeReport, SippProblem};
use crate::homogenize::{homogenize_problem, lift_point};
use crate::io::problem::{render_problem, render_sipp, ParsedProblem};
use crate::io::report::{Report, SolverSettings};
use crate::jacobian;
use crate::moment::{build_moment_sdp, PolynomialProgram};

#[derive(Clone, Debug)]
pub struct PipelineOptions {
    /// Overrides the file: `Some(true)` homogenizes, `Some(false)` never does.
    pub homogenize: Option<bool>,
    pub ipm: IpmOptions,
    /// Directory for the SDPA files of the relaxations along the trace.
    pub export_sdpa: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions { homogenize: None, ipm: IpmOptions::from_env(), export_sdpa: None, report: None }
    }
}

#[derive(Clone, Debug)]
pub struct PipelineOutcome {
    pub report: Report,
    pub exchange: ExchangeReport,
    /// The problem passed to the exchange loop.
    pub solved: SippProblem,
    pub table: String,
}

impl PipelineOutcome {
    pub fn exit_code(&self) -> i32 {
        self.report.exit_code
    }
}

pub fn run_pipeline(parsed: &ParsedProblem, opts: &PipelineOptions) -> Result<PipelineOutcome> {
    let homogenize = opts.homogenize.unwrap_or(parsed.homogenize);
    let mut xopts = parsed.options.clone();
    let solved = if homogenize && !parsed.problem.homogenized {
        xopts.initial_points = xopts.initial_points.iter().map(|u| lift_point(u)).collect();
        xopts.bounding_box = None;
        homogenize_problem(&parsed.problem)?
    } else {
        parsed.problem.clone()
    };
    let backend = InteriorPoint::new(opts.ipm.clone());
    let ex = exchange_loop(&solved, &xopts, &backend)?;
    if let Some(dir) = &opts.export_sdpa {
        export_trace(&solved, &ex, &xopts, dir)?;
    }
    let name = if solved.name.is_empty() { "problem" } else { solved.name.as_str() };
    let table = render_table(name, &ex);
    let settings = SolverSettings {
        eps: xopts.eps,
        max_iter: xopts.max_iter,
        master_order_cap: xopts.master.max_order,
        inner_order_cap: xopts.inner.max_order,
        seed: xopts.seed,
        sdp_tol: opts.ipm.tol,
        rank_tol: xopts.master.extract.rank_tol,
        parallel: opts.ipm.parallel && crate::par::is_parallel(),
    };
    let transformed = if homogenize { Some(render_sipp(&solved)?) } else { None };
    let report = Report::new(
        name,
        ex.clone(),
        solved.homogenized,
        solved.closed_at_infinity,
        render_problem(parsed)?,
        transformed,
        settings,
    );
    if let Some(path) = &opts.report {
        report.write(path)?;
    }
    Ok(PipelineOutcome { report, exchange: ex, solved, table })
}

/// Write the master relaxation of each iteration and every inner relaxation
/// at the order where the hierarchy stopped.
pub fn export_trace(
    problem: &SippProblem,
    ex: &ExchangeReport,
    opts: &crate::exchange::ExchangeOptions,
    dir: &std::path::Path,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for rec in &ex.trace {
        let pts = &ex.index_points[..rec.index_points.min(ex.index_points.len())];
        if let Some(prog) = master_program(problem, pts)? {
            if rec.master.order >= prog.min_order() {
                let sdp = build_moment_sdp(&prog, rec.master.order, &opts.master.relaxation)?;
                let path = dir.join(format!("master_k{}.dat-s", rec.k));
                sdpa::write_sdpa(&sdp.conic, &path)?;
                written.push(path);
            }
        }
        for (i, inner) in rec.inner.iter().enumerate() {
            let obj = problem.coupling_at(&inner.x)?;
            if obj.degree() <= 0 || inner.order == 0 {
                continue;
            }
            let base = PolynomialProgram::new(obj, problem.u_set.clone())?;
            let prog = jacobian::augment(&base, opts.jacobian_cap)?.problem()?;
            let sdp = build_moment_sdp(&prog, inner.order, &opts.inner.relaxation)?;
            let path = dir.join(format!("inner_k{}_{}.dat-s", rec.k, i));
            sdpa::write_sdpa(&sdp.conic, &path)?;
            written.push(path);
        }
    }
    Ok(written)
}
