//! Experiment harness: hypothesis ingestion and simulation, per-plan result
//! rows, comparisons, and table/chart rendering.

mod chart;
mod experiment;
mod hypotheses;
mod report;
mod simulate;

pub use chart::emit_fs_chart;
pub use experiment::{
    compare_experiments, load_plans, run_experiment, ExperimentError, ExperimentPlan, Improvement,
    PlanFile, ResultRow, ResultTable,
};
pub use hypotheses::{
    load_hypotheses, read_delimited, write_hypotheses, HypothesisError, HypothesisFormat,
    HypothesisSet, Provenance,
};
pub use report::{emit_report, ReportFormat};
pub use simulate::{simulate_hypotheses, CorruptionProfile, CorruptionRates, SimulationError};
