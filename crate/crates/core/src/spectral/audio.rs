use std::path::Path;

use thiserror::Error;

/// Mono PCM signal with samples scaled to `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioSignal {
    samples: Vec<f64>,
    sample_rate: u32,
}

#[derive(Debug, Error)]
pub enum AudioError {
    #[error("non-mono audio: {0} channels")]
    NonMono(u16),
    #[error("unsupported encoding: {0}")]
    UnsupportedEncoding(String),
    #[error("truncated file")]
    Truncated,
    #[error("sample rate must be positive")]
    InvalidSampleRate,
    #[error("cannot read audio: {0}")]
    Io(#[from] std::io::Error),
}

impl AudioSignal {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self, AudioError> {
        if sample_rate == 0 {
            return Err(AudioError::InvalidSampleRate);
        }
        Ok(AudioSignal {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Copy with every sample multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        AudioSignal {
            samples: self.samples.iter().map(|s| s * k).collect(),
            sample_rate: self.sample_rate,
        }
    }
}

const MIN_RATE: u32 = 8_000;
const MAX_RATE: u32 = 48_000;

fn map_hound(err: hound::Error) -> AudioError {
    match err {
        hound::Error::IoError(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => {
            AudioError::Truncated
        }
        hound::Error::IoError(e) => AudioError::Io(e),
        hound::Error::Unsupported => AudioError::UnsupportedEncoding("unsupported WAVE variant".into()),
        other => AudioError::UnsupportedEncoding(other.to_string()),
    }
}

/// Read a RIFF/WAVE file holding mono 16-bit signed PCM at 8–48 kHz.
pub fn read_audio(path: &Path) -> Result<AudioSignal, AudioError> {
    let file = std::fs::File::open(path)?;
    let expected_len = file.metadata()?.len();
    let mut reader = hound::WavReader::new(std::io::BufReader::new(file)).map_err(map_hound)?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(AudioError::NonMono(spec.channels));
    }
    if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(AudioError::UnsupportedEncoding(format!(
            "{:?} {}-bit",
            spec.sample_format, spec.bits_per_sample
        )));
    }
    if !(MIN_RATE..=MAX_RATE).contains(&spec.sample_rate) {
        return Err(AudioError::UnsupportedEncoding(format!(
            "sample rate {} Hz outside {MIN_RATE}-{MAX_RATE} Hz",
            spec.sample_rate
        )));
    }
    // the data chunk header announces more bytes than the file holds
    let declared = u64::from(reader.len()) * 2;
    if declared > expected_len {
        return Err(AudioError::Truncated);
    }
    let samples = reader
        .samples::<i16>()
        .map(|s| s.map(|v| f64::from(v) / 32768.0))
        .collect::<Result<Vec<_>, _>>()
        .map_err(map_hound)?;
    AudioSignal::new(samples, spec.sample_rate)
}

/// Write mono 16-bit PCM; samples are clipped to `[-1, 1]`.
pub fn write_wav(path: &Path, signal: &AudioSignal) -> Result<(), AudioError> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: signal.sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(map_hound)?;
    for &s in &signal.samples {
        let v = (s.clamp(-1.0, 1.0) * 32767.0).round() as i16;
        writer.write_sample(v).map_err(map_hound)?;
    }
    writer.finalize().map_err(map_hound)
}
