//! Fairness score between the Normal and CLP groups.
//!
//! The score is `FS = −α·avg − β·disparity`, where `avg` is the mean of the
//! two group error rates and `disparity` their absolute difference. Scores
//! lie in `(−∞, 0]`; closer to zero is fairer.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FairnessError {
    #[error("error rate must be non-negative, got {0}")]
    NegativeError(f64),
    #[error("weight must be non-negative, got {0}")]
    NegativeWeight(f64),
    #[error("weight list is empty")]
    EmptyWeights,
    #[error("baseline fairness score is zero")]
    ZeroBaseline,
    #[error("fairness score must be non-positive, got {0}")]
    PositiveScore(f64),
    #[error("need at least two groups")]
    TooFewGroups,
    #[error("invalid weight pair `{0}`, expected `alpha:beta`")]
    Parse(String),
}

/// An (α, β) pair. Serialized as a two-element array `[alpha, beta]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct FairnessWeights {
    alpha: f64,
    beta: f64,
}

impl FairnessWeights {
    /// The three weight pairs studied in the augmentation tables:
    /// balanced, disparity-heavy and error-heavy.
    pub const STANDARD: [FairnessWeights; 3] = [
        FairnessWeights { alpha: 0.5, beta: 0.5 },
        FairnessWeights { alpha: 0.1, beta: 0.9 },
        FairnessWeights { alpha: 0.9, beta: 0.1 },
    ];

    pub const BALANCED: FairnessWeights = FairnessWeights { alpha: 0.5, beta: 0.5 };

    pub fn new(alpha: f64, beta: f64) -> Result<Self, FairnessError> {
        for w in [alpha, beta] {
            if !w.is_finite() || w < 0.0 {
                return Err(FairnessError::NegativeWeight(w));
            }
        }
        Ok(FairnessWeights { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Parse a comma-separated list such as `0.5:0.5,0.1:0.9`.
    pub fn parse_list(s: &str) -> Result<Vec<Self>, FairnessError> {
        s.split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(str::parse)
            .collect()
    }

    /// Column label such as `FS(a=0.5,b=0.5)`.
    pub fn label(&self) -> String {
        format!("FS(a={},b={})", self.alpha, self.beta)
    }
}

impl TryFrom<[f64; 2]> for FairnessWeights {
    type Error = FairnessError;

    fn try_from([alpha, beta]: [f64; 2]) -> Result<Self, Self::Error> {
        FairnessWeights::new(alpha, beta)
    }
}

impl From<FairnessWeights> for [f64; 2] {
    fn from(w: FairnessWeights) -> Self {
        [w.alpha, w.beta]
    }
}

impl FromStr for FairnessWeights {
    type Err = FairnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s
            .split_once(':')
            .ok_or_else(|| FairnessError::Parse(s.to_string()))?;
        let parse = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| FairnessError::Parse(s.to_string()))
        };
        FairnessWeights::new(parse(a)?, parse(b)?)
    }
}

impl fmt::Display for FairnessWeights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.alpha, self.beta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FairnessResult {
    pub weights: FairnessWeights,
    /// Normal-group error rate (W_N).
    pub error_g1: f64,
    /// CLP-group error rate (W_C).
    pub error_g2: f64,
    pub average_error: f64,
    pub disparity: f64,
    pub score: f64,
}

fn check_error(e: f64) -> Result<f64, FairnessError> {
    if e >= 0.0 && e.is_finite() {
        Ok(e)
    } else {
        Err(FairnessError::NegativeError(e))
    }
}

pub fn average_error_rate(e1: f64, e2: f64) -> Result<f64, FairnessError> {
    Ok((check_error(e1)? + check_error(e2)?) / 2.0)
}

pub fn error_disparity(e1: f64, e2: f64) -> Result<f64, FairnessError> {
    Ok((check_error(e1)? - check_error(e2)?).abs())
}

pub fn fairness_score(e1: f64, e2: f64, w: FairnessWeights) -> Result<FairnessResult, FairnessError> {
    let average_error = average_error_rate(e1, e2)?;
    let disparity = error_disparity(e1, e2)?;
    // `0.0 - x` keeps a zero score from becoming -0.0
    let score = 0.0 - (w.alpha * average_error + w.beta * disparity);
    Ok(FairnessResult {
        weights: w,
        error_g1: e1,
        error_g2: e2,
        average_error,
        disparity,
        score,
    })
}

/// One result per weight pair, in input order.
pub fn fairness_sweep(
    e1: f64,
    e2: f64,
    weights: &[FairnessWeights],
) -> Result<Vec<FairnessResult>, FairnessError> {
    if weights.is_empty() {
        return Err(FairnessError::EmptyWeights);
    }
    weights.iter().map(|w| fairness_score(e1, e2, *w)).collect()
}

/// Relative reduction of |FS| from `fs_baseline` to `fs_new`, in percent.
/// Positive means the new system is fairer.
pub fn relative_fairness_improvement(fs_baseline: f64, fs_new: f64) -> Result<f64, FairnessError> {
    for fs in [fs_baseline, fs_new] {
        if fs > 0.0 {
            return Err(FairnessError::PositiveScore(fs));
        }
    }
    if fs_baseline == 0.0 {
        return Err(FairnessError::ZeroBaseline);
    }
    Ok(100.0 * (fs_baseline.abs() - fs_new.abs()) / fs_baseline.abs())
}

/// Multi-group extension: mean error over all groups and the maximum
/// pairwise disparity. With two groups it reduces to [`fairness_score`].
pub fn multi_group_score(errors: &[f64], w: FairnessWeights) -> Result<f64, FairnessError> {
    if errors.len() < 2 {
        return Err(FairnessError::TooFewGroups);
    }
    for &e in errors {
        check_error(e)?;
    }
    let mean = errors.iter().sum::<f64>() / errors.len() as f64;
    let max = errors.iter().copied().fold(f64::MIN, f64::max);
    let min = errors.iter().copied().fold(f64::MAX, f64::min);
    Ok(0.0 - (w.alpha * mean + w.beta * (max - min)))
}

pub const SWEEP_HEADER: &str = "alpha,beta,error_normal,error_clp,average,disparity,fs";

/// Delimited sweep export, values at two decimals.
pub fn sweep_to_delimited(results: &[FairnessResult]) -> String {
    let mut out = format!("{SWEEP_HEADER}\n");
    for r in results {
        let _ = writeln!(
            out,
            "{},{},{:.2},{:.2},{:.2},{:.2},{:.2}",
            r.weights.alpha,
            r.weights.beta,
            r.error_g1,
            r.error_g2,
            r.average_error,
            r.disparity,
            crate::round2(r.score)
        );
    }
    out
}
