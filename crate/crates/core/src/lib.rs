//! Severity-aware fairness evaluation for automatic speech recognition.
//!
//! The crate scores ASR hypotheses against reference transcripts for normal
//! and cleft-lip-and-palate (CLP) speech, computes a weighted fairness score
//! over the two groups, measures spectral DTW distances between voiced
//! regions of normal and graded utterances, and assembles experiment tables
//! for augmentation studies.
//!
//! Modules:
//!
//! - [`manifest`]: corpus records, manifest I/O, validation and splits.
//! - [`metrics`]: token alignment, WER/PER and group-stratified scoring.
//! - [`fairness`]: average error, disparity, fairness score and sweeps.
//! - [`spectral`]: WAV ingestion, spectrograms, energy VAD, DTW.
//! - [`harness`]: hypotheses, simulation, experiment rows, reports, charts.

pub mod fairness;
pub mod harness;
pub mod manifest;
pub mod metrics;
pub mod spectral;

/// Schema version of the manifest and hypothesis file formats.
pub const FORMAT_VERSION: u32 = 1;

/// Round to two decimals, the precision used in rendered tables. Rounds the
/// exact binary value, so `-50.955` (stored just above -50.955) gives -50.95.
pub fn round2(value: f64) -> f64 {
    if !value.is_finite() {
        return value;
    }
    let r: f64 = format!("{value:.2}").parse().unwrap_or(value);
    // avoid rendering "-0.00"
    r + 0.0
}
