//! Signal pipeline for the spectral distance study: WAV ingestion, framed
//! magnitude spectrograms, energy-based voice activity detection, dynamic
//! time warping, and per-severity distance distributions.

mod audio;
mod dtw;
mod stft;
mod study;
mod vad;

pub use audio::{read_audio, write_wav, AudioError, AudioSignal};
pub use dtw::{dtw_distance, DtwResult, LocalMetric};
pub use stft::{compute_spectrogram, FrameSpec, Spectrogram, WindowFunction};
pub use study::{
    severity_distance_study, Compression, DistanceStudy, FiveNumberSummary, LabeledAudio,
    PairDistance, StudyOptions,
};
pub use vad::{detect_voiced, frame_energies, VoicedMask, DEFAULT_THRESHOLD_FRACTION};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SpectralError {
    #[error("invalid frame spec: {0}")]
    InvalidFrameSpec(String),
    #[error("signal of {samples} samples is shorter than one {window}-sample window")]
    TooShort { samples: usize, window: usize },
    #[error("empty frame sequence")]
    EmptySequence,
    #[error("frame dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("mixed sample rates: {0} Hz vs {1} Hz")]
    MixedSampleRate(u32, u32),
    #[error("{0} set is empty")]
    EmptySet(&'static str),
}
