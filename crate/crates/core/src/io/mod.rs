//! Problem files, random instances, reports and the end-to-end pipeline.

pub mod corpus;
pub mod generator;
pub mod pipeline;
pub mod problem;
pub mod report;

pub use generator::{generate_random_instance, IndexSetKind, RandomInstanceSpec};
pub use pipeline::{run_pipeline, PipelineOptions, PipelineOutcome};
pub use problem::{parse_problem, render_problem, ParsedProblem};
pub use report::Report;
