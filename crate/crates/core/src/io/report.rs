//! The JSON report, schema `v1`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::exchange::{AuditReport, ExchangeReport, ExchangeStatus, IterationRecord};
use crate::moment::RelaxationStatus;

pub const SCHEMA_VERSION: &str = "v1";

/// The published JSON schema of [`Report`].
pub const SCHEMA: &str = include_str!("../../schema/report-v1.json");

/// One rank decision of the hierarchy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankAudit {
    pub iteration: usize,
    /// `master`, or `inner` with the index of the candidate point.
    pub role: String,
    pub candidate: Option<usize>,
    pub order: usize,
    pub status: RelaxationStatus,
    pub ranks: Vec<usize>,
    pub flat_order: Option<usize>,
    pub extracted: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolverSettings {
    pub eps: f64,
    pub max_iter: usize,
    pub master_order_cap: usize,
    pub inner_order_cap: usize,
    pub seed: u64,
    pub sdp_tol: f64,
    pub rank_tol: f64,
    pub parallel: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub name: String,
    pub status: ExchangeStatus,
    pub exit_code: i32,
    pub homogenized: bool,
    pub closed_at_infinity: Option<bool>,
    pub f_star: Option<f64>,
    pub x_star: Vec<Vec<f64>>,
    pub obj2: Option<f64>,
    pub iterations: usize,
    pub elapsed_secs: f64,
    pub message: Option<String>,
    /// The problem as given, in the problem file format.
    pub problem: String,
    /// The problem actually solved, when it differs.
    pub transformed: Option<String>,
    pub settings: SolverSettings,
    pub index_points: Vec<Vec<f64>>,
    pub rank_audit: Vec<RankAudit>,
    pub audit: Option<AuditReport>,
    pub trace: Vec<IterationRecord>,
}

pub fn rank_audit(trace: &[IterationRecord]) -> Vec<RankAudit> {
    let mut out = Vec::new();
    for rec in trace {
        for s in &rec.master.steps {
            out.push(RankAudit {
                iteration: rec.k,
                role: "master".into(),
                candidate: None,
                order: s.order,
                status: s.status,
                ranks: s.ranks.clone(),
                flat_order: s.flat_order,
                extracted: s.extracted,
            });
        }
        for (i, inner) in rec.inner.iter().enumerate() {
            for s in &inner.steps {
                out.push(RankAudit {
                    iteration: rec.k,
                    role: "inner".into(),
                    candidate: Some(i),
                    order: s.order,
                    status: s.status,
                    ranks: s.ranks.clone(),
                    flat_order: s.flat_order,
                    extracted: s.extracted,
                });
            }
        }
    }
    out
}

impl Report {
    pub fn new(
        name: &str,
        ex: ExchangeReport,
        homogenized: bool,
        closed_at_infinity: Option<bool>,
        problem: String,
        transformed: Option<String>,
        settings: SolverSettings,
    ) -> Self {
        Report {
            schema: SCHEMA_VERSION.into(),
            name: name.into(),
            status: ex.status,
            exit_code: ex.status.exit_code(),
            homogenized,
            closed_at_infinity,
            f_star: ex.f_star,
            x_star: ex.x_star,
            obj2: ex.obj2,
            iterations: ex.iterations,
            elapsed_secs: ex.elapsed_secs,
            message: ex.message,
            problem,
            transformed,
            settings,
            index_points: ex.index_points,
            rank_audit: rank_audit(&ex.trace),
            audit: ex.audit,
            trace: ex.trace,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}
