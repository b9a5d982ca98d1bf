//! Seeded corruption of reference transcripts, standing in for an external
//! recognizer when testing the pipeline at desk scale.
//!
//! Every utterance draws from its own ChaCha8 stream: the generator is
//! seeded with the profile seed and the stream id is the 64-bit FNV-1a hash
//! of the utterance id. Output therefore depends only on (seed, utterance
//! id, reference) and not on iteration order or thread count.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{HypothesisError, HypothesisSet, Provenance};
use crate::manifest::{Group, Severity, UtteranceRecord};
use crate::metrics::Level;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CorruptionRates {
    #[serde(default)]
    pub substitution: f64,
    #[serde(default)]
    pub deletion: f64,
    #[serde(default)]
    pub insertion: f64,
}

impl CorruptionRates {
    pub fn new(substitution: f64, deletion: f64, insertion: f64) -> Self {
        CorruptionRates {
            substitution,
            deletion,
            insertion,
        }
    }

    pub fn substitution_only(p: f64) -> Self {
        Self::new(p, 0.0, 0.0)
    }

    fn validate(&self, severity: Severity) -> Result<(), SimulationError> {
        for (name, p) in [
            ("substitution", self.substitution),
            ("deletion", self.deletion),
            ("insertion", self.insertion),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(SimulationError::ProbabilityOutOfRange {
                    severity,
                    name,
                    value: p,
                });
            }
        }
        if self.substitution + self.deletion > 1.0 + 1e-12 {
            return Err(SimulationError::SubDelExceedsOne(severity));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorruptionProfile {
    /// Rates per severity; Normal utterances use the `none` row.
    pub rates: BTreeMap<Severity, CorruptionRates>,
    pub vocabulary: Vec<String>,
    pub seed: u64,
}

#[derive(Debug, Error)]
pub enum SimulationError {
    #[error("{name} probability {value} for severity `{severity}` outside [0, 1]")]
    ProbabilityOutOfRange {
        severity: Severity,
        name: &'static str,
        value: f64,
    },
    #[error("substitution + deletion probability exceeds 1 for severity `{0}`")]
    SubDelExceedsOne(Severity),
    #[error("corruption vocabulary is empty")]
    EmptyVocabulary,
    #[error("no corruption rates for severity `{0}`")]
    MissingSeverity(Severity),
    #[error("record `{0}` has no reference phonemes")]
    MissingPhonemes(String),
    #[error(transparent)]
    Hypothesis(#[from] HypothesisError),
}

impl CorruptionProfile {
    /// One rate row for the Normal group and another shared by all CLP
    /// severities.
    pub fn by_group(
        normal: CorruptionRates,
        clp: CorruptionRates,
        vocabulary: Vec<String>,
        seed: u64,
    ) -> Self {
        let mut rates = BTreeMap::new();
        rates.insert(Severity::None, normal);
        for s in Severity::GRADED {
            rates.insert(s, clp);
        }
        CorruptionProfile {
            rates,
            vocabulary,
            seed,
        }
    }

    pub fn rates_for(&self, record: &UtteranceRecord) -> Result<CorruptionRates, SimulationError> {
        let key = match record.group {
            Group::Normal => Severity::None,
            Group::Clp => record.severity,
        };
        self.rates
            .get(&key)
            .copied()
            .ok_or(SimulationError::MissingSeverity(key))
    }

    pub fn validate(&self) -> Result<(), SimulationError> {
        if self.vocabulary.is_empty() {
            return Err(SimulationError::EmptyVocabulary);
        }
        for (sev, r) in &self.rates {
            r.validate(*sev)?;
        }
        Ok(())
    }
}

fn fnv1a64(text: &str) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    text.bytes()
        .fold(OFFSET, |h, b| (h ^ u64::from(b)).wrapping_mul(PRIME))
}

fn pick<'v>(rng: &mut ChaCha8Rng, vocab: &'v [String], exclude: Option<&str>) -> Option<&'v str> {
    let skip = exclude.and_then(|t| vocab.iter().position(|v| v == t));
    let k = vocab.len() - usize::from(skip.is_some());
    if k == 0 {
        return None;
    }
    // u32 range keeps the draw identical on 32- and 64-bit targets
    let mut idx = rng.gen_range(0..k as u32) as usize;
    if skip.is_some_and(|s| idx >= s) {
        idx += 1;
    }
    Some(&vocab[idx])
}

fn corrupt(reference: &[String], rates: CorruptionRates, vocab: &[String], rng: &mut ChaCha8Rng) -> Vec<String> {
    let mut out = Vec::with_capacity(reference.len());
    for token in reference {
        let u: f64 = rng.gen();
        if u < rates.deletion {
            // dropped
        } else if u < rates.deletion + rates.substitution {
            // a vocabulary of just this token cannot substitute it
            let sub = pick(rng, vocab, Some(token)).unwrap_or(token);
            out.push(sub.to_string());
        } else {
            out.push(token.clone());
        }
        if rates.insertion > 0.0 && rng.gen::<f64>() < rates.insertion {
            if let Some(t) = pick(rng, vocab, None) {
                out.push(t.to_string());
            }
        }
    }
    out
}

/// Corrupt each record's reference with its severity's rates: per token,
/// delete with `p_del`, otherwise substitute with `p_sub` (uniform over the
/// vocabulary minus the token), otherwise keep; then insert a uniform random
/// token with `p_ins`.
pub fn simulate_hypotheses<'a, I>(
    records: I,
    profile: &CorruptionProfile,
    level: Level,
) -> Result<HypothesisSet, SimulationError>
where
    I: IntoIterator<Item = &'a UtteranceRecord>,
{
    profile.validate()?;
    let vocab: Vec<String> = profile
        .vocabulary
        .iter()
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let records: Vec<&UtteranceRecord> = records.into_iter().collect();
    let produced: Vec<(String, Vec<String>)> = records
        .par_iter()
        .map(|r| {
            let rates = profile.rates_for(r)?;
            let reference = match level {
                Level::Word => &r.reference_words,
                Level::Phoneme => r
                    .reference_phonemes
                    .as_ref()
                    .ok_or_else(|| SimulationError::MissingPhonemes(r.utterance_id.clone()))?,
            };
            let mut rng = ChaCha8Rng::seed_from_u64(profile.seed);
            rng.set_stream(fnv1a64(&r.utterance_id));
            Ok((r.utterance_id.clone(), corrupt(reference, rates, &vocab, &mut rng)))
        })
        .collect::<Result<_, SimulationError>>()?;

    let mut set = HypothesisSet::new(Provenance::Simulated);
    for (id, tokens) in produced {
        set.insert(id, tokens)?;
    }
    Ok(set)
}
