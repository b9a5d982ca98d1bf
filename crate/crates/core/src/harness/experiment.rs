use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::HypothesisSet;
use crate::fairness::{fairness_score, relative_fairness_improvement, FairnessError, FairnessResult, FairnessWeights};
use crate::manifest::{Composition, CorpusManifest, Group, Partition, Severity};
use crate::metrics::{macro_pooled_wer, score_testset, MetricsError, ScoreOptions};

/// One external system to score: which model produced the hypotheses and on
/// which training composition it was trained. Training itself happens
/// elsewhere; the composition is carried as provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub plan_id: String,
    pub model_label: String,
    #[serde(rename = "composition")]
    pub train_composition: Composition,
    pub weights: Vec<FairnessWeights>,
    /// Hypothesis file or directory, relative to the plan file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hypotheses: Option<PathBuf>,
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.weights.is_empty() {
            return Err(ExperimentError::Fairness(FairnessError::EmptyWeights));
        }
        Ok(())
    }
}

/// `{"plans": [...]}` document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanFile {
    pub plans: Vec<ExperimentPlan>,
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("evaluation partition is empty")]
    EmptyEval,
    #[error("no scorable {0} utterances in the evaluation partition")]
    MissingGroup(Group),
    #[error("weight pair {0} not present in both rows")]
    WeightAbsent(FairnessWeights),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Fairness(#[from] FairnessError),
    #[error("cannot read plan file {path}: {message}")]
    PlanFile { path: PathBuf, message: String },
}

/// Load plans and resolve relative hypothesis paths against the plan file's
/// directory.
pub fn load_plans(path: &Path) -> Result<Vec<ExperimentPlan>, ExperimentError> {
    let fail = |message: String| ExperimentError::PlanFile {
        path: path.to_path_buf(),
        message,
    };
    let text = std::fs::read_to_string(path).map_err(|e| fail(e.to_string()))?;
    let file: PlanFile = serde_json::from_str(&text).map_err(|e| fail(e.to_string()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut plans = file.plans;
    for plan in &mut plans {
        plan.validate()?;
        if let Some(h) = &plan.hypotheses {
            if h.is_relative() {
                plan.hypotheses = Some(base.join(h));
            }
        }
    }
    Ok(plans)
}

/// One table row: group and severity error rates, pooled rate and FS per
/// weight pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub plan_id: String,
    pub model_label: String,
    pub composition: Composition,
    pub w_normal: f64,
    pub w_mild: Option<f64>,
    pub w_moderate: Option<f64>,
    pub w_severe: Option<f64>,
    pub w_clp: f64,
    /// Mean of `w_normal` and `w_clp`.
    pub pooled: f64,
    /// Corpus-level rate over both groups, when computed from counts.
    pub pooled_micro: Option<f64>,
    pub fs: Vec<FairnessResult>,
    pub n_missing: usize,
}

impl ResultRow {
    /// Build a row from group rates, deriving pooled and FS columns.
    pub fn from_rates(
        plan_id: impl Into<String>,
        model_label: impl Into<String>,
        composition: Composition,
        w_normal: f64,
        w_clp: f64,
        weights: &[FairnessWeights],
    ) -> Result<Self, ExperimentError> {
        if weights.is_empty() {
            return Err(FairnessError::EmptyWeights.into());
        }
        let fs = weights
            .iter()
            .map(|w| fairness_score(w_normal, w_clp, *w))
            .collect::<Result<_, _>>()?;
        Ok(ResultRow {
            plan_id: plan_id.into(),
            model_label: model_label.into(),
            composition,
            w_normal,
            w_mild: None,
            w_moderate: None,
            w_severe: None,
            w_clp,
            pooled: macro_pooled_wer(w_normal, w_clp),
            pooled_micro: None,
            fs,
            n_missing: 0,
        })
    }

    pub fn severity_rate(&self, severity: Severity) -> Option<f64> {
        match severity {
            Severity::None => Some(self.w_normal),
            Severity::Mild => self.w_mild,
            Severity::Moderate => self.w_moderate,
            Severity::Severe => self.w_severe,
        }
    }

    pub fn fs_for(&self, weights: FairnessWeights) -> Option<&FairnessResult> {
        self.fs.iter().find(|r| r.weights == weights)
    }

    /// Stored pooled/FS values that disagree with values recomputed from the
    /// group rates by more than `tolerance`.
    pub fn consistency_issues(&self, tolerance: f64) -> Vec<String> {
        let mut issues = Vec::new();
        let pooled = macro_pooled_wer(self.w_normal, self.w_clp);
        if (pooled - self.pooled).abs() > tolerance {
            issues.push(format!(
                "pooled {:.2} != mean({:.2}, {:.2}) = {:.2}",
                self.pooled, self.w_normal, self.w_clp, pooled
            ));
        }
        for stored in &self.fs {
            match fairness_score(self.w_normal, self.w_clp, stored.weights) {
                Ok(fresh) if (fresh.score - stored.score).abs() > tolerance => issues.push(format!(
                    "FS({}) {:.2} != recomputed {:.2}",
                    stored.weights, stored.score, fresh.score
                )),
                Ok(_) => {}
                Err(e) => issues.push(e.to_string()),
            }
        }
        issues
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    pub fn new(rows: Vec<ResultRow>) -> Self {
        ResultTable { rows }
    }

    pub fn push(&mut self, row: ResultRow) {
        self.rows.push(row);
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Weight pairs across all rows, in first-appearance order.
    pub fn weight_columns(&self) -> Vec<FairnessWeights> {
        let mut out: Vec<FairnessWeights> = Vec::new();
        for w in self.rows.iter().flat_map(|r| r.fs.iter().map(|f| f.weights)) {
            if !out.contains(&w) {
                out.push(w);
            }
        }
        out
    }
}

/// Score the evaluation partition with `hypotheses` and derive the row.
pub fn run_experiment(
    plan: &ExperimentPlan,
    manifest: &CorpusManifest,
    hypotheses: &HypothesisSet,
    opts: &ScoreOptions,
) -> Result<ResultRow, ExperimentError> {
    plan.validate()?;
    let eval: Vec<_> = manifest.partition(Partition::Eval).collect();
    if eval.is_empty() {
        return Err(ExperimentError::EmptyEval);
    }
    let report = score_testset(eval, hypotheses, opts)?;
    let w_normal = report.w_normal().ok_or(ExperimentError::MissingGroup(Group::Normal))?;
    let w_clp = report.w_clp().ok_or(ExperimentError::MissingGroup(Group::Clp))?;
    let mut row = ResultRow::from_rates(
        &plan.plan_id,
        &plan.model_label,
        plan.train_composition.clone(),
        w_normal,
        w_clp,
        &plan.weights,
    )?;
    row.w_mild = report.severity_rate(Severity::Mild);
    row.w_moderate = report.severity_rate(Severity::Moderate);
    row.w_severe = report.severity_rate(Severity::Severe);
    row.pooled_micro = report.micro_pooled();
    row.n_missing = report.n_missing();
    Ok(row)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Improvement {
    pub weights: FairnessWeights,
    pub pooled_baseline: f64,
    pub pooled_candidate: f64,
    /// `candidate − baseline`; negative means lower pooled error.
    pub pooled_delta: f64,
    pub fs_baseline: f64,
    pub fs_candidate: f64,
    /// `candidate − baseline`; positive means fairer.
    pub fs_delta: f64,
    /// Relative |FS| reduction in percent; `None` when the baseline FS is 0.
    pub relative_improvement: Option<f64>,
}

pub fn compare_experiments(
    baseline: &ResultRow,
    candidate: &ResultRow,
    weights: FairnessWeights,
) -> Result<Improvement, ExperimentError> {
    let (Some(b), Some(c)) = (baseline.fs_for(weights), candidate.fs_for(weights)) else {
        return Err(ExperimentError::WeightAbsent(weights));
    };
    let relative_improvement = match relative_fairness_improvement(b.score, c.score) {
        Ok(v) => Some(v),
        Err(FairnessError::ZeroBaseline) => None,
        Err(e) => return Err(e.into()),
    };
    Ok(Improvement {
        weights,
        pooled_baseline: baseline.pooled,
        pooled_candidate: candidate.pooled,
        pooled_delta: candidate.pooled - baseline.pooled,
        fs_baseline: b.score,
        fs_candidate: c.score,
        fs_delta: c.score - b.score,
        relative_improvement,
    })
}
