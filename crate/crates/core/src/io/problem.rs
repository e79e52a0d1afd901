//! Problem files in TOML.
//!
//! ```toml
//! name = "interval"
//! objective = "x1"
//! coupling = "x1 - u1^2"
//!
//! [variables]
//! x = 1
//! u = 1
//!
//! [x_set]
//! inequalities = ["9 - x1^2"]
//!
//! [index_set]
//! inequalities = ["1 - u1^2"]
//! initial_points = [[0.0]]
//! ```
//!
//! A polynomial matrix inequality replaces `coupling` and `[index_set]` by
//! `matrix`, a list of rows of polynomial strings; the index set is then the
//! unit sphere.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exchange::{ExchangeOptions, SippProblem};
use crate::pmi::{pmi_to_sipp, PolynomialMatrix};
use crate::poly::{parse::parse_polynomial, Polynomial, SemialgebraicSet, VariableSpace};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Variables {
    pub x: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetSpec {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub equalities: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inequalities: Vec<String>,
    #[serde(default = "yes")]
    pub compact: bool,
}

fn yes() -> bool {
    true
}

impl Default for SetSpec {
    fn default() -> Self {
        SetSpec { equalities: Vec::new(), inequalities: Vec::new(), compact: true }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndexSetSpec {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub equalities: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inequalities: Vec<String>,
    #[serde(default = "yes")]
    pub compact: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closed_at_infinity: Option<bool>,
    /// Points of `U_0`, in the original index variables.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub initial_points: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounding_box: Option<Vec<[f64; 2]>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptionsSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub master_order_cap: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner_order_cap: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Defaults to `!index_set.compact`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub homogenize: Option<bool>,
    /// Redundant ball `r2 - |x|^2 >= 0` added to every master relaxation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub master_ball: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audit_samples: Option<usize>,
}

/// Plot window for the feasibility grid of a matrix inequality.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub x1: [f64; 2],
    pub x2: [f64; 2],
    #[serde(default = "grid_steps")]
    pub steps: usize,
}

fn grid_steps() -> usize {
    101
}

/// Known answer, used by the corpus driver for comparison only.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Reference {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_star: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub x_star: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub objective: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<String>>>,
    pub variables: Variables,
    #[serde(default)]
    pub x_set: SetSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index_set: Option<IndexSetSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub options: Option<OptionsSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<Reference>,
}

/// A parsed file: the problem as written plus run settings.
#[derive(Clone, Debug)]
pub struct ParsedProblem {
    pub problem: SippProblem,
    pub options: ExchangeOptions,
    pub homogenize: bool,
    pub matrix: Option<PolynomialMatrix>,
    pub grid: Option<GridSpec>,
    pub reference: Option<Reference>,
    pub description: Option<String>,
    pub master_ball: Option<f64>,
}

fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

struct Ctx<'a> {
    src: &'a str,
}

impl Ctx<'_> {
    fn poly(&self, what: &str, s: &str, space: &[&VariableSpace]) -> Result<Polynomial> {
        let p = parse_polynomial(s).map_err(|e| match e {
            Error::Parse { line, column, message } => {
                // point into the file when the string occurs there verbatim
                let (l, c) = match self.src.find(s) {
                    Some(off) if line == 1 => {
                        let (l0, c0) = line_col(self.src, off);
                        (l0, c0 + column - 1)
                    }
                    Some(off) => (line_col(self.src, off).0 + line - 1, column),
                    None => (line, column),
                };
                Error::Parse { line: l, column: c, message: format!("in {what}: {message}") }
            }
            other => other,
        })?;
        for v in p.vars() {
            if !space.iter().any(|sp| sp.contains(v)) {
                return Err(Error::SpaceMismatch(format!("{what} uses {v}, which is not declared")));
            }
        }
        Ok(p)
    }

    fn list(&self, what: &str, items: &[String], space: &VariableSpace) -> Result<Vec<Polynomial>> {
        items.iter().map(|s| self.poly(what, s, &[space])).collect()
    }
}

/// Parse a problem file.
pub fn parse_problem(src: &str) -> Result<ParsedProblem> {
    let file: ProblemFile = toml::from_str(src).map_err(|e| {
        let (line, column) = e.span().map_or((1, 1), |s| line_col(src, s.start));
        Error::Parse { line, column, message: e.message().to_string() }
    })?;
    from_file(&file, src)
}

/// Build the problem from an already deserialized file. `src` is only used
/// to locate errors.
pub fn from_file(file: &ProblemFile, src: &str) -> Result<ParsedProblem> {
    let ctx = Ctx { src };
    let xs = VariableSpace::x(file.variables.x);
    if file.variables.x == 0 {
        return Err(Error::Problem("at least one decision variable is required".into()));
    }
    let objective = ctx.poly("objective", &file.objective, &[&xs])?;
    let x_set = SemialgebraicSet::new(
        xs.clone(),
        ctx.list("x_set.equalities", &file.x_set.equalities, &xs)?,
        ctx.list("x_set.inequalities", &file.x_set.inequalities, &xs)?,
    )?;
    let opts_spec = file.options.clone().unwrap_or_default();
    let mut options = ExchangeOptions::default();
    let mut matrix = None;
    let mut problem = match (&file.coupling, &file.matrix) {
        (Some(_), Some(_)) => return Err(Error::Problem("give either `coupling` or `matrix`, not both".into())),
        (None, None) => return Err(Error::Problem("missing `coupling` or `matrix`".into())),
        (Some(g), None) => {
            let p = file.variables.u.ok_or_else(|| Error::Problem("missing variables.u".into()))?;
            let us = VariableSpace::u(p);
            let idx = file.index_set.clone().ok_or_else(|| Error::Problem("missing [index_set]".into()))?;
            let coupling = ctx.poly("coupling", g, &[&xs, &us])?;
            let u_set = SemialgebraicSet::new(
                us.clone(),
                ctx.list("index_set.equalities", &idx.equalities, &us)?,
                ctx.list("index_set.inequalities", &idx.inequalities, &us)?,
            )?;
            let mut prob = SippProblem::new(objective, coupling, x_set, u_set)?;
            prob.u_compact = idx.compact;
            prob.closed_at_infinity = idx.closed_at_infinity;
            for pt in &idx.initial_points {
                if pt.len() != p {
                    return Err(Error::Dimension { expected: p, got: pt.len() });
                }
            }
            options.initial_points = idx.initial_points.clone();
            if let Some(b) = &idx.bounding_box {
                if b.len() != p {
                    return Err(Error::Dimension { expected: p, got: b.len() });
                }
                options.bounding_box = Some(b.iter().map(|r| (r[0], r[1])).collect());
            }
            prob
        }
        (None, Some(rows)) => {
            if file.index_set.is_some() {
                return Err(Error::Problem("a matrix inequality fixes the index set to the unit sphere".into()));
            }
            let m = rows.len();
            if file.variables.u.is_some_and(|u| u != m) {
                return Err(Error::Dimension { expected: m, got: file.variables.u.unwrap_or(0) });
            }
            let mut prow = Vec::with_capacity(m);
            for (i, r) in rows.iter().enumerate() {
                if r.len() != m {
                    return Err(Error::Dimension { expected: m, got: r.len() });
                }
                prow.push(
                    r.iter()
                        .enumerate()
                        .map(|(j, s)| ctx.poly(&format!("matrix entry ({}, {})", i + 1, j + 1), s, &[&xs]))
                        .collect::<Result<Vec<_>>>()?,
                );
            }
            let g = PolynomialMatrix::from_rows(prow)?;
            let prob = pmi_to_sipp(&objective, &g, x_set)?;
            matrix = Some(g);
            prob
        }
    };
    problem.x_compact = file.x_set.compact;
    problem.name = file.name.clone().unwrap_or_default();
    problem.validate()?;

    if let Some(v) = opts_spec.eps {
        options.eps = v;
    }
    if let Some(v) = opts_spec.max_iter {
        options.max_iter = v;
    }
    if let Some(v) = opts_spec.master_order_cap {
        options.master.max_order = v;
    }
    if let Some(v) = opts_spec.inner_order_cap {
        options.inner.max_order = v;
    }
    if let Some(v) = opts_spec.seed {
        options.seed = v;
    }
    if let Some(v) = opts_spec.audit_samples {
        options.audit_samples = v;
    }
    options.master.relaxation.ball_radius_sq = opts_spec.master_ball;
    Ok(ParsedProblem {
        homogenize: opts_spec.homogenize.unwrap_or(!problem.u_compact),
        problem,
        options,
        matrix,
        grid: file.grid.clone(),
        reference: file.reference.clone(),
        description: file.description.clone(),
        master_ball: opts_spec.master_ball,
    })
}

fn strings(ps: &[Polynomial]) -> Vec<String> {
    ps.iter().map(|p| p.to_string()).collect()
}

/// Inverse of [`from_file`].
pub fn to_file(p: &ParsedProblem) -> ProblemFile {
    let prob = &p.problem;
    let d = ExchangeOptions::default();
    let o = &p.options;
    let pick = |a: usize, b: usize| (a != b).then_some(a);
    let options = OptionsSpec {
        eps: (o.eps != d.eps).then_some(o.eps),
        max_iter: pick(o.max_iter, d.max_iter),
        master_order_cap: pick(o.master.max_order, d.master.max_order),
        inner_order_cap: pick(o.inner.max_order, d.inner.max_order),
        seed: (o.seed != d.seed).then_some(o.seed),
        homogenize: (p.homogenize == prob.u_compact).then_some(p.homogenize),
        master_ball: p.master_ball,
        audit_samples: pick(o.audit_samples, d.audit_samples),
    };
    let (coupling, matrix, index_set) = match &p.matrix {
        Some(g) => (None, Some(g.rows().iter().map(|r| strings(r)).collect()), None),
        None => (
            Some(prob.coupling.to_string()),
            None,
            Some(IndexSetSpec {
                equalities: strings(&prob.u_set.equalities),
                inequalities: strings(&prob.u_set.inequalities),
                compact: prob.u_compact,
                closed_at_infinity: prob.closed_at_infinity,
                initial_points: o.initial_points.clone(),
                bounding_box: o.bounding_box.as_ref().map(|b| b.iter().map(|&(l, h)| [l, h]).collect()),
            }),
        ),
    };
    ProblemFile {
        name: (!prob.name.is_empty()).then(|| prob.name.clone()),
        description: p.description.clone(),
        objective: prob.objective.to_string(),
        coupling,
        matrix,
        variables: Variables {
            x: prob.x_set.space.dim,
            u: p.matrix.is_none().then_some(prob.u_set.space.dim),
        },
        x_set: SetSpec {
            equalities: strings(&prob.x_set.equalities),
            inequalities: strings(&prob.x_set.inequalities),
            compact: prob.x_compact,
        },
        index_set,
        options: (options != OptionsSpec::default()).then_some(options),
        grid: p.grid.clone(),
        reference: p.reference.clone(),
    }
}

/// Render as TOML; `parse_problem(render_problem(p))` reproduces `p`.
pub fn render_problem(p: &ParsedProblem) -> Result<String> {
    toml::to_string(&to_file(p)).map_err(|e| Error::Problem(format!("cannot render problem: {e}")))
}

/// A problem file for a program built in code, with default options.
pub fn render_sipp(problem: &SippProblem) -> Result<String> {
    render_problem(&ParsedProblem {
        problem: problem.clone(),
        options: ExchangeOptions::default(),
        homogenize: !problem.u_compact,
        matrix: None,
        grid: None,
        reference: None,
        description: None,
        master_ball: None,
    })
}
