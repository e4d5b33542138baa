//! Mono PCM16 WAV input/output and the in-memory waveform type.
//!
//! Integer sample `i` maps to the amplitude `i / 32768`. On write, amplitudes
//! are clamped to `[-1, 1 - 2^-15]` and rounded to the nearest code.

use std::path::Path;

use thiserror::Error;

/// Default sample rate of every clip handled by the toolkit.
pub const DEFAULT_SAMPLE_RATE_HZ: u32 = 16_000;

const PCM16_SCALE: f64 = 32768.0;
/// Largest amplitude representable by a PCM16 code.
pub const MAX_PCM16_AMPLITUDE: f64 = 1.0 - 1.0 / PCM16_SCALE;

#[derive(Debug, Error)]
pub enum AudioError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed WAV header in {path}: {reason}")]
    MalformedHeader { path: String, reason: String },
    #[error("unsupported WAV encoding in {path}: {reason}")]
    UnsupportedEncoding { path: String, reason: String },
    #[error("unsupported channel count {channels} in {path} (mono only)")]
    UnsupportedChannelCount { path: String, channels: u16 },
    #[error("unsupported bit depth {bits} in {path} (16-bit only)")]
    UnsupportedBitDepth { path: String, bits: u16 },
    #[error("sample {index} is not finite")]
    NonFinite { index: usize },
    #[error("sample rate must be positive")]
    ZeroSampleRate,
}

/// A mono waveform with amplitudes nominally in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    samples: Vec<f64>,
    sample_rate_hz: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<f64>, sample_rate_hz: u32) -> Result<Self, AudioError> {
        if sample_rate_hz == 0 {
            return Err(AudioError::ZeroSampleRate);
        }
        if let Some(index) = samples.iter().position(|s| !s.is_finite()) {
            return Err(AudioError::NonFinite { index });
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    pub fn silence(len: usize, sample_rate_hz: u32) -> Self {
        Self {
            samples: vec![0.0; len],
            sample_rate_hz: sample_rate_hz.max(1),
        }
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate_hz)
    }

    pub fn rms(&self) -> f64 {
        rms(&self.samples)
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, s| m.max(s.abs()))
    }

    /// Returns a copy with every sample multiplied by `gain`.
    pub fn scaled(&self, gain: f64) -> Self {
        Self {
            samples: self.samples.iter().map(|s| s * gain).collect(),
            sample_rate_hz: self.sample_rate_hz,
        }
    }
}

pub(crate) fn rms(samples: &[f64]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    (samples.iter().map(|s| s * s).sum::<f64>() / samples.len() as f64).sqrt()
}

/// Converts an amplitude to its PCM16 code (clamp, then round to nearest).
pub fn amplitude_to_pcm16(x: f64) -> i16 {
    let clamped = x.clamp(-1.0, MAX_PCM16_AMPLITUDE);
    (clamped * PCM16_SCALE).round() as i16
}

pub fn pcm16_to_amplitude(code: i16) -> f64 {
    f64::from(code) / PCM16_SCALE
}

/// Quantizes every sample to the PCM16 grid without touching the filesystem.
pub fn quantize_pcm16(clip: &AudioClip) -> AudioClip {
    AudioClip {
        samples: clip
            .samples
            .iter()
            .map(|&s| pcm16_to_amplitude(amplitude_to_pcm16(s)))
            .collect(),
        sample_rate_hz: clip.sample_rate_hz,
    }
}

pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioClip, AudioError> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let reader = hound::WavReader::open(path).map_err(|e| map_hound(e, &display))?;
    let spec = reader.spec();
    if spec.sample_format != hound::SampleFormat::Int {
        return Err(AudioError::UnsupportedEncoding {
            path: display,
            reason: "IEEE float samples".into(),
        });
    }
    if spec.channels != 1 {
        return Err(AudioError::UnsupportedChannelCount {
            path: display,
            channels: spec.channels,
        });
    }
    if spec.bits_per_sample != 16 {
        return Err(AudioError::UnsupportedBitDepth {
            path: display,
            bits: spec.bits_per_sample,
        });
    }
    let samples = reader
        .into_samples::<i16>()
        .map(|s| s.map(pcm16_to_amplitude))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| map_hound(e, &display))?;
    AudioClip::new(samples, spec.sample_rate)
}

pub fn write_wav(clip: &AudioClip, path: impl AsRef<Path>) -> Result<(), AudioError> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: clip.sample_rate_hz,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(|e| map_hound(e, &display))?;
    {
        let mut w = writer.get_i16_writer(clip.samples.len() as u32);
        for &s in &clip.samples {
            w.write_sample(amplitude_to_pcm16(s));
        }
        w.flush().map_err(|e| map_hound(e, &display))?;
    }
    writer.finalize().map_err(|e| map_hound(e, &display))
}

fn map_hound(err: hound::Error, path: &str) -> AudioError {
    match err {
        hound::Error::IoError(source) => AudioError::Io {
            path: path.to_string(),
            source,
        },
        hound::Error::FormatError(reason) => AudioError::MalformedHeader {
            path: path.to_string(),
            reason: reason.to_string(),
        },
        hound::Error::Unsupported => AudioError::UnsupportedEncoding {
            path: path.to_string(),
            reason: "non-PCM audio format".into(),
        },
        other => AudioError::MalformedHeader {
            path: path.to_string(),
            reason: other.to_string(),
        },
    }
}
