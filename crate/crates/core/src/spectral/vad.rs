use super::{AudioSignal, FrameSpec, SpectralError};

pub const DEFAULT_THRESHOLD_FRACTION: f64 = 0.06;

#[derive(Debug, Clone, PartialEq)]
pub struct VoicedMask {
    pub flags: Vec<bool>,
    pub threshold_fraction: f64,
    pub mean_energy: f64,
}

impl VoicedMask {
    pub fn voiced_count(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }

    pub fn voiced_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.flags
            .iter()
            .enumerate()
            .filter_map(|(i, &f)| f.then_some(i))
    }
}

/// Sum of squared (unwindowed) samples per frame.
pub fn frame_energies(signal: &AudioSignal, spec: &FrameSpec) -> Result<Vec<f64>, SpectralError> {
    Ok(spec
        .frames(signal)?
        .into_iter()
        .map(|f| f.iter().map(|x| x * x).sum())
        .collect())
}

/// A frame is voiced when its energy strictly exceeds
/// `threshold_fraction × mean frame energy` of the utterance.
pub fn detect_voiced(
    signal: &AudioSignal,
    spec: &FrameSpec,
    threshold_fraction: f64,
) -> Result<VoicedMask, SpectralError> {
    let energies = frame_energies(signal, spec)?;
    let mean_energy = energies.iter().sum::<f64>() / energies.len() as f64;
    let threshold = threshold_fraction * mean_energy;
    Ok(VoicedMask {
        flags: energies.iter().map(|&e| e > threshold).collect(),
        threshold_fraction,
        mean_energy,
    })
}
