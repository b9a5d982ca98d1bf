use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    compute_spectrogram, detect_voiced, dtw_distance, AudioSignal, FrameSpec, LocalMetric,
    SpectralError, DEFAULT_THRESHOLD_FRACTION,
};
use crate::manifest::Severity;

/// Transform applied to magnitude frames before the DTW comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Compression {
    /// `ln(1 + magnitude)`.
    #[default]
    Log,
    None,
}

impl FromStr for Compression {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "log" => Ok(Compression::Log),
            "none" | "linear" | "magnitude" => Ok(Compression::None),
            other => Err(format!("unknown compression `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudyOptions {
    pub frame: FrameSpec,
    pub metric: LocalMetric,
    pub compression: Compression,
    pub threshold_fraction: f64,
}

impl Default for StudyOptions {
    fn default() -> Self {
        StudyOptions {
            frame: FrameSpec::default(),
            metric: LocalMetric::Euclidean,
            compression: Compression::Log,
            threshold_fraction: DEFAULT_THRESHOLD_FRACTION,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledAudio {
    pub id: String,
    pub signal: AudioSignal,
}

impl LabeledAudio {
    pub fn new(id: impl Into<String>, signal: AudioSignal) -> Self {
        LabeledAudio {
            id: id.into(),
            signal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairDistance {
    pub severity: Severity,
    pub normal_id: String,
    pub graded_id: String,
    pub raw_cost: f64,
    pub normalized_cost: f64,
    pub path_length: usize,
}

/// Five-number summary with linearly interpolated quartiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FiveNumberSummary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub n: usize,
}

impl FiveNumberSummary {
    /// `None` for an empty sample.
    pub fn from_values(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let q = |p: f64| {
            let pos = p * (sorted.len() - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
        };
        Some(FiveNumberSummary {
            min: sorted[0],
            q1: q(0.25),
            median: q(0.5),
            q3: q(0.75),
            max: sorted[sorted.len() - 1],
            n: sorted.len(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceStudy {
    /// Sorted by severity, then normal id, then graded id.
    pub pairs: Vec<PairDistance>,
    pub summaries: BTreeMap<Severity, FiveNumberSummary>,
    /// Utterances without any voiced frame.
    pub skipped: Vec<String>,
}

impl DistanceStudy {
    pub fn median(&self, severity: Severity) -> Option<f64> {
        self.summaries.get(&severity).map(|s| s.median)
    }

    /// Pair rows followed by a per-severity summary block.
    pub fn to_delimited(&self) -> String {
        let mut out = String::from("severity,normal_id,graded_id,raw_cost,normalized_cost\n");
        for p in &self.pairs {
            let _ = writeln!(
                out,
                "{},{},{},{:.6},{:.6}",
                p.severity, p.normal_id, p.graded_id, p.raw_cost, p.normalized_cost
            );
        }
        out.push_str("\nseverity,n,min,q1,median,q3,max\n");
        for (sev, s) in &self.summaries {
            let _ = writeln!(
                out,
                "{sev},{},{:.6},{:.6},{:.6},{:.6},{:.6}",
                s.n, s.min, s.q1, s.median, s.q3, s.max
            );
        }
        let _ = writeln!(out, "\nskipped,{}", self.skipped.len());
        for id in &self.skipped {
            let _ = writeln!(out, "skipped,{id}");
        }
        out
    }
}

/// Voiced spectrogram frames of one utterance, compressed. `None` when no
/// frame is voiced.
fn voiced_frames(signal: &AudioSignal, opts: &StudyOptions) -> Result<Option<Vec<Vec<f64>>>, SpectralError> {
    let spec = compute_spectrogram(signal, &opts.frame)?;
    let mask = detect_voiced(signal, &opts.frame, opts.threshold_fraction)?;
    let frames: Vec<Vec<f64>> = mask
        .voiced_indices()
        .map(|i| match opts.compression {
            Compression::Log => spec.frames[i].iter().map(|m| m.ln_1p()).collect(),
            Compression::None => spec.frames[i].clone(),
        })
        .collect();
    Ok((!frames.is_empty()).then_some(frames))
}

/// DTW distances between the voiced spectrograms of every (normal, graded)
/// pair, summarized per severity.
///
/// Pairs run in parallel; results are sorted before summarizing, so the
/// output does not depend on scheduling.
pub fn severity_distance_study(
    normal: &[LabeledAudio],
    graded: &BTreeMap<Severity, Vec<LabeledAudio>>,
    opts: &StudyOptions,
) -> Result<DistanceStudy, SpectralError> {
    if normal.is_empty() {
        return Err(SpectralError::EmptySet("normal"));
    }
    if graded.values().all(Vec::is_empty) {
        return Err(SpectralError::EmptySet("graded"));
    }
    let rate = normal[0].signal.sample_rate();
    for u in normal.iter().chain(graded.values().flatten()) {
        if u.signal.sample_rate() != rate {
            return Err(SpectralError::MixedSampleRate(rate, u.signal.sample_rate()));
        }
    }

    let featurize = |set: &[LabeledAudio]| -> Result<Vec<(String, Option<Vec<Vec<f64>>>)>, SpectralError> {
        set.par_iter()
            .map(|u| Ok((u.id.clone(), voiced_frames(&u.signal, opts)?)))
            .collect()
    };
    let normal_feats = featurize(normal)?;
    let mut skipped: Vec<String> = normal_feats
        .iter()
        .filter(|(_, f)| f.is_none())
        .map(|(id, _)| id.clone())
        .collect();

    let mut jobs = Vec::new();
    let mut graded_feats = BTreeMap::new();
    for (&sev, set) in graded {
        let feats = featurize(set)?;
        skipped.extend(feats.iter().filter(|(_, f)| f.is_none()).map(|(id, _)| id.clone()));
        graded_feats.insert(sev, feats);
    }
    for (&sev, feats) in &graded_feats {
        for (nid, nf) in &normal_feats {
            let Some(nf) = nf else { continue };
            for (gid, gf) in feats {
                let Some(gf) = gf else { continue };
                jobs.push((sev, nid, nf, gid, gf));
            }
        }
    }

    let mut pairs: Vec<PairDistance> = jobs
        .par_iter()
        .map(|(sev, nid, nf, gid, gf)| {
            let r = dtw_distance(nf, gf, opts.metric)?;
            Ok(PairDistance {
                severity: *sev,
                normal_id: (*nid).clone(),
                graded_id: (*gid).clone(),
                raw_cost: r.total_cost,
                normalized_cost: r.normalized_cost,
                path_length: r.path_length,
            })
        })
        .collect::<Result<_, SpectralError>>()?;
    pairs.sort_by(|a, b| {
        (a.severity, &a.normal_id, &a.graded_id).cmp(&(b.severity, &b.normal_id, &b.graded_id))
    });

    let mut summaries = BTreeMap::new();
    for &sev in graded.keys() {
        let values: Vec<f64> = pairs
            .iter()
            .filter(|p| p.severity == sev)
            .map(|p| p.normalized_cost)
            .collect();
        if let Some(s) = FiveNumberSummary::from_values(&values) {
            summaries.insert(sev, s);
        }
    }
    skipped.sort();
    Ok(DistanceStudy {
        pairs,
        summaries,
        skipped,
    })
}
