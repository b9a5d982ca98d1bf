use std::f64::consts::PI;
use std::str::FromStr;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::{AudioSignal, SpectralError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowFunction {
    #[default]
    Hamming,
    Hann,
    Rectangular,
}

impl WindowFunction {
    /// Symmetric window of `len` coefficients.
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        if len <= 1 {
            return vec![1.0; len];
        }
        let denom = (len - 1) as f64;
        (0..len)
            .map(|n| {
                let phase = 2.0 * PI * n as f64 / denom;
                match self {
                    WindowFunction::Hamming => 0.54 - 0.46 * phase.cos(),
                    WindowFunction::Hann => 0.5 - 0.5 * phase.cos(),
                    WindowFunction::Rectangular => 1.0,
                }
            })
            .collect()
    }
}

impl FromStr for WindowFunction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "hamming" => Ok(WindowFunction::Hamming),
            "hann" | "hanning" => Ok(WindowFunction::Hann),
            "rectangular" | "rect" | "none" => Ok(WindowFunction::Rectangular),
            other => Err(format!("unknown window function `{other}`")),
        }
    }
}

/// Framing parameters. Defaults: 20 ms windows, 10 ms hop, 1024-point
/// transform, Hamming window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameSpec {
    pub window_ms: f64,
    pub hop_ms: f64,
    pub fft_points: usize,
    pub window: WindowFunction,
}

impl Default for FrameSpec {
    fn default() -> Self {
        FrameSpec {
            window_ms: 20.0,
            hop_ms: 10.0,
            fft_points: 1024,
            window: WindowFunction::Hamming,
        }
    }
}

impl FrameSpec {
    pub fn window_samples(&self, sample_rate: u32) -> usize {
        (self.window_ms * f64::from(sample_rate) / 1000.0).round() as usize
    }

    pub fn hop_samples(&self, sample_rate: u32) -> usize {
        (self.hop_ms * f64::from(sample_rate) / 1000.0).round() as usize
    }

    /// Check the invariants for a given sample rate.
    pub fn validate(&self, sample_rate: u32) -> Result<(), SpectralError> {
        let bad = |m: String| Err(SpectralError::InvalidFrameSpec(m));
        if !(self.window_ms > 0.0 && self.hop_ms > 0.0) {
            return bad("window and hop must be positive".into());
        }
        if self.hop_ms > self.window_ms {
            return bad(format!("hop {} ms exceeds window {} ms", self.hop_ms, self.window_ms));
        }
        let win = self.window_samples(sample_rate);
        if win == 0 || self.hop_samples(sample_rate) == 0 {
            return bad("window or hop rounds to zero samples".into());
        }
        if self.fft_points < win {
            return bad(format!(
                "{} transform points fewer than {win} window samples",
                self.fft_points
            ));
        }
        Ok(())
    }

    /// `floor((n - win) / hop) + 1`, or 0 when the signal is shorter than one
    /// window.
    pub fn n_frames(&self, n_samples: usize, sample_rate: u32) -> usize {
        let win = self.window_samples(sample_rate);
        let hop = self.hop_samples(sample_rate);
        if n_samples < win || hop == 0 {
            0
        } else {
            (n_samples - win) / hop + 1
        }
    }

    pub(crate) fn frames<'s>(&self, signal: &'s AudioSignal) -> Result<Vec<&'s [f64]>, SpectralError> {
        self.validate(signal.sample_rate())?;
        let win = self.window_samples(signal.sample_rate());
        let hop = self.hop_samples(signal.sample_rate());
        let n = self.n_frames(signal.len(), signal.sample_rate());
        if n == 0 {
            return Err(SpectralError::TooShort {
                samples: signal.len(),
                window: win,
            });
        }
        Ok((0..n)
            .map(|f| &signal.samples()[f * hop..f * hop + win])
            .collect())
    }
}

/// One-sided magnitude spectra, one row per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub frames: Vec<Vec<f64>>,
    pub spec: FrameSpec,
    pub sample_rate: u32,
}

impl Spectrogram {
    pub fn n_frames(&self) -> usize {
        self.frames.len()
    }

    pub fn n_bins(&self) -> usize {
        self.spec.fft_points / 2 + 1
    }

    pub fn bin_frequency(&self, bin: usize) -> f64 {
        bin as f64 * f64::from(self.sample_rate) / self.spec.fft_points as f64
    }
}

/// Window each frame, zero-pad to `fft_points`, and keep the magnitudes of
/// bins `0..=fft_points/2`.
pub fn compute_spectrogram(signal: &AudioSignal, spec: &FrameSpec) -> Result<Spectrogram, SpectralError> {
    let frames = spec.frames(signal)?;
    let win = spec.window_samples(signal.sample_rate());
    let coeffs = spec.window.coefficients(win);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(spec.fft_points);
    let bins = spec.fft_points / 2 + 1;
    let mut buffer = vec![Complex::new(0.0, 0.0); spec.fft_points];
    let mut scratch = vec![Complex::new(0.0, 0.0); fft.get_inplace_scratch_len()];

    let mut out = Vec::with_capacity(frames.len());
    for frame in frames {
        buffer.iter_mut().for_each(|c| *c = Complex::new(0.0, 0.0));
        for ((slot, &x), &w) in buffer.iter_mut().zip(frame).zip(&coeffs) {
            slot.re = x * w;
        }
        fft.process_with_scratch(&mut buffer, &mut scratch);
        out.push(buffer[..bins].iter().map(|c| c.norm()).collect());
    }
    Ok(Spectrogram {
        frames: out,
        spec: *spec,
        sample_rate: signal.sample_rate(),
    })
}
