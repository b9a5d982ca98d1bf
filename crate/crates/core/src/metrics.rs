//! Token alignment and error rates (WER/PER) with group- and
//! severity-stratified aggregation.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::iter::Sum;
use std::ops::{Add, AddAssign};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::harness::HypothesisSet;
use crate::manifest::{Group, Severity, UtteranceRecord};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("undefined error rate denominator: empty reference")]
    EmptyReference,
    #[error("PER unavailable: record `{0}` has no reference phonemes")]
    PerUnavailable(String),
    #[error("empty reference for record `{0}`")]
    EmptyRecordReference(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EditOp {
    Hit,
    Substitution,
    Deletion,
    Insertion,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignmentStep {
    pub op: EditOp,
    pub reference: Option<String>,
    pub hypothesis: Option<String>,
}

/// Additive S/D/I/hit counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorCounts {
    pub substitutions: usize,
    pub deletions: usize,
    pub insertions: usize,
    pub hits: usize,
    pub ref_len: usize,
}

impl ErrorCounts {
    pub fn errors(&self) -> usize {
        self.substitutions + self.deletions + self.insertions
    }

    /// `100·(S+D+I)/N`, or `None` when the reference length is zero.
    pub fn error_percent(&self) -> Option<f64> {
        (self.ref_len > 0).then(|| 100.0 * self.errors() as f64 / self.ref_len as f64)
    }

    /// All-deletion counts for a reference of `ref_len` tokens.
    pub fn all_deleted(ref_len: usize) -> Self {
        ErrorCounts {
            deletions: ref_len,
            ref_len,
            ..Default::default()
        }
    }
}

impl Add for ErrorCounts {
    type Output = ErrorCounts;

    fn add(self, rhs: Self) -> Self {
        ErrorCounts {
            substitutions: self.substitutions + rhs.substitutions,
            deletions: self.deletions + rhs.deletions,
            insertions: self.insertions + rhs.insertions,
            hits: self.hits + rhs.hits,
            ref_len: self.ref_len + rhs.ref_len,
        }
    }
}

impl AddAssign for ErrorCounts {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl Sum for ErrorCounts {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(ErrorCounts::default(), Add::add)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignmentOutcome {
    pub substitutions: usize,
    pub deletions: usize,
    pub insertions: usize,
    pub hits: usize,
    pub ref_len: usize,
    pub trace: Vec<AlignmentStep>,
}

impl AlignmentOutcome {
    pub fn counts(&self) -> ErrorCounts {
        ErrorCounts {
            substitutions: self.substitutions,
            deletions: self.deletions,
            insertions: self.insertions,
            hits: self.hits,
            ref_len: self.ref_len,
        }
    }

    pub fn cost(&self) -> usize {
        self.substitutions + self.deletions + self.insertions
    }
}

/// Minimal unit-cost alignment of `hypothesis` against `reference`.
///
/// Among equal-cost paths the backtrace prefers the diagonal (hit or
/// substitution), then deletion, then insertion.
pub fn align_tokens<R, H>(reference: &[R], hypothesis: &[H]) -> Result<AlignmentOutcome, MetricsError>
where
    R: AsRef<str>,
    H: AsRef<str>,
{
    if reference.is_empty() {
        return Err(MetricsError::EmptyReference);
    }
    let n = reference.len();
    let m = hypothesis.len();
    let width = m + 1;
    let mut cost = vec![0usize; (n + 1) * width];
    for j in 0..=m {
        cost[j] = j;
    }
    for i in 1..=n {
        cost[i * width] = i;
        let r = reference[i - 1].as_ref();
        for j in 1..=m {
            let diag = cost[(i - 1) * width + j - 1] + usize::from(r != hypothesis[j - 1].as_ref());
            let del = cost[(i - 1) * width + j] + 1;
            let ins = cost[i * width + j - 1] + 1;
            cost[i * width + j] = diag.min(del).min(ins);
        }
    }

    let mut trace = Vec::with_capacity(n.max(m));
    let (mut subs, mut dels, mut ins, mut hits) = (0, 0, 0, 0);
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = cost[i * width + j];
        if i > 0 && j > 0 {
            let same = reference[i - 1].as_ref() == hypothesis[j - 1].as_ref();
            if here == cost[(i - 1) * width + j - 1] + usize::from(!same) {
                let op = if same {
                    hits += 1;
                    EditOp::Hit
                } else {
                    subs += 1;
                    EditOp::Substitution
                };
                trace.push(AlignmentStep {
                    op,
                    reference: Some(reference[i - 1].as_ref().to_string()),
                    hypothesis: Some(hypothesis[j - 1].as_ref().to_string()),
                });
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && here == cost[(i - 1) * width + j] + 1 {
            dels += 1;
            trace.push(AlignmentStep {
                op: EditOp::Deletion,
                reference: Some(reference[i - 1].as_ref().to_string()),
                hypothesis: None,
            });
            i -= 1;
        } else {
            ins += 1;
            trace.push(AlignmentStep {
                op: EditOp::Insertion,
                reference: None,
                hypothesis: Some(hypothesis[j - 1].as_ref().to_string()),
            });
            j -= 1;
        }
    }
    trace.reverse();

    Ok(AlignmentOutcome {
        substitutions: subs,
        deletions: dels,
        insertions: ins,
        hits,
        ref_len: n,
        trace,
    })
}

/// `100·(S+D+I)/ref_len`. Values above 100 are legal.
pub fn error_rate(outcome: &AlignmentOutcome) -> Result<f64, MetricsError> {
    outcome
        .counts()
        .error_percent()
        .ok_or(MetricsError::EmptyReference)
}

/// Unweighted mean of the two group error rates, the tables' "Pooled WER".
pub fn macro_pooled_wer(w_a: f64, w_b: f64) -> f64 {
    (w_a + w_b) / 2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MissingPolicy {
    /// Drop utterances without a hypothesis, but count them.
    #[default]
    Exclude,
    /// Score a missing hypothesis as an empty transcript.
    #[serde(alias = "empty")]
    ScoreAsEmpty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    #[default]
    Word,
    Phoneme,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScoreOptions {
    pub missing: MissingPolicy,
    pub level: Level,
    /// Lowercase and strip trailing punctuation before aligning (word level
    /// only).
    pub normalize: bool,
}

impl Default for ScoreOptions {
    fn default() -> Self {
        ScoreOptions {
            missing: MissingPolicy::Exclude,
            level: Level::Word,
            normalize: true,
        }
    }
}

fn is_trailing_punct(c: char) -> bool {
    c.is_ascii_punctuation() || matches!(c, '।' | '॥' | '…' | '“' | '”' | '‘' | '’' | '«' | '»')
}

/// Lowercase each token and strip trailing punctuation; tokens left empty are
/// dropped.
pub fn normalize_tokens<S: AsRef<str>>(tokens: &[S]) -> Vec<String> {
    tokens
        .iter()
        .map(|t| t.as_ref().trim_end_matches(is_trailing_punct).to_lowercase())
        .filter(|t| !t.is_empty())
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorRateReport {
    pub counts: ErrorCounts,
    pub n_utterances: usize,
    pub n_missing_hypotheses: usize,
}

impl ErrorRateReport {
    pub fn error_percent(&self) -> Option<f64> {
        self.counts.error_percent()
    }

    fn absorb(&mut self, scored: &Scored) {
        match scored.counts {
            Some(c) => {
                self.counts += c;
                self.n_utterances += 1;
            }
            None => self.n_missing_hypotheses += 1,
        }
        if scored.missing && scored.counts.is_some() {
            self.n_missing_hypotheses += 1;
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GroupErrorReport {
    pub level: Level,
    pub by_group: BTreeMap<Group, ErrorRateReport>,
    pub by_severity: BTreeMap<Severity, ErrorRateReport>,
}

impl GroupErrorReport {
    pub fn group_rate(&self, group: Group) -> Option<f64> {
        self.by_group.get(&group).and_then(ErrorRateReport::error_percent)
    }

    pub fn severity_rate(&self, severity: Severity) -> Option<f64> {
        self.by_severity
            .get(&severity)
            .and_then(ErrorRateReport::error_percent)
    }

    /// Normal-group error rate (W_N).
    pub fn w_normal(&self) -> Option<f64> {
        self.group_rate(Group::Normal)
    }

    /// CLP-group error rate (W_C).
    pub fn w_clp(&self) -> Option<f64> {
        self.group_rate(Group::Clp)
    }

    /// Mean of W_N and W_C.
    pub fn macro_pooled(&self) -> Option<f64> {
        Some(macro_pooled_wer(self.w_normal()?, self.w_clp()?))
    }

    /// Corpus-level rate over both groups (summed counts).
    pub fn micro_pooled(&self) -> Option<f64> {
        self.by_group
            .values()
            .map(|r| r.counts)
            .sum::<ErrorCounts>()
            .error_percent()
    }

    pub fn n_missing(&self) -> usize {
        self.by_group.values().map(|r| r.n_missing_hypotheses).sum()
    }

    /// Delimited rendering, one row per group and severity key.
    pub fn to_delimited(&self) -> String {
        let mut out = String::from(
            "key,utterances,missing,ref_len,substitutions,deletions,insertions,hits,error_percent\n",
        );
        let rows = self
            .by_group
            .iter()
            .map(|(g, r)| (format!("group:{g}"), r))
            .chain(self.by_severity.iter().map(|(s, r)| (format!("severity:{s}"), r)));
        for (key, r) in rows {
            let c = r.counts;
            let rate = r
                .error_percent()
                .map_or_else(|| "-".to_string(), |v| format!("{v:.2}"));
            let _ = writeln!(
                out,
                "{key},{},{},{},{},{},{},{},{rate}",
                r.n_utterances,
                r.n_missing_hypotheses,
                c.ref_len,
                c.substitutions,
                c.deletions,
                c.insertions,
                c.hits
            );
        }
        if let Some(p) = self.macro_pooled() {
            let _ = writeln!(out, "pooled:macro,,,,,,,,{p:.2}");
        }
        if let Some(p) = self.micro_pooled() {
            let _ = writeln!(out, "pooled:micro,,,,,,,,{p:.2}");
        }
        out
    }
}

struct Scored {
    group: Group,
    severity: Severity,
    counts: Option<ErrorCounts>,
    missing: bool,
}

fn reference_tokens(record: &UtteranceRecord, level: Level) -> Result<&[String], MetricsError> {
    let tokens = match level {
        Level::Word => record.reference_words.as_slice(),
        Level::Phoneme => record
            .reference_phonemes
            .as_deref()
            .ok_or_else(|| MetricsError::PerUnavailable(record.utterance_id.clone()))?,
    };
    if tokens.is_empty() {
        return Err(MetricsError::EmptyRecordReference(record.utterance_id.clone()));
    }
    Ok(tokens)
}

fn score_one(
    record: &UtteranceRecord,
    hypotheses: &HypothesisSet,
    opts: &ScoreOptions,
) -> Result<Scored, MetricsError> {
    let reference = reference_tokens(record, opts.level)?;
    let normalize = opts.normalize && opts.level == Level::Word;
    let reference: Vec<String> = if normalize {
        normalize_tokens(reference)
    } else {
        reference.to_vec()
    };
    if reference.is_empty() {
        return Err(MetricsError::EmptyRecordReference(record.utterance_id.clone()));
    }
    let hyp = hypotheses.get(&record.utterance_id);
    let counts = match (hyp, opts.missing) {
        (Some(h), _) => {
            let h = if normalize { normalize_tokens(h) } else { h.to_vec() };
            Some(align_tokens(&reference, &h)?.counts())
        }
        (None, MissingPolicy::Exclude) => None,
        (None, MissingPolicy::ScoreAsEmpty) => Some(ErrorCounts::all_deleted(reference.len())),
    };
    Ok(Scored {
        group: record.group,
        severity: record.severity,
        counts,
        missing: hyp.is_none(),
    })
}

/// Score `records` against `hypotheses`, pooling counts per group and per
/// severity before dividing.
///
/// Hypotheses for utterances outside `records` are ignored. Utterances are
/// aligned in parallel; the reduction is over integer counts, so the result
/// does not depend on scheduling.
pub fn score_testset<'a, I>(
    records: I,
    hypotheses: &HypothesisSet,
    opts: &ScoreOptions,
) -> Result<GroupErrorReport, MetricsError>
where
    I: IntoIterator<Item = &'a UtteranceRecord>,
{
    let records: Vec<&UtteranceRecord> = records.into_iter().collect();
    if opts.level == Level::Phoneme {
        if let Some(r) = records.iter().find(|r| r.reference_phonemes.is_none()) {
            return Err(MetricsError::PerUnavailable(r.utterance_id.clone()));
        }
    }
    let scored: Vec<Scored> = records
        .par_iter()
        .map(|r| score_one(r, hypotheses, opts))
        .collect::<Result<_, _>>()?;

    let mut report = GroupErrorReport {
        level: opts.level,
        ..Default::default()
    };
    for s in &scored {
        report.by_group.entry(s.group).or_default().absorb(s);
        report.by_severity.entry(s.severity).or_default().absorb(s);
    }
    Ok(report)
}
