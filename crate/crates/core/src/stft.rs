//! STFT encoder and inverse-STFT decoder.
//!
//! Analysis applies a periodic Hann window to frame `k` covering samples
//! `[k*hop, k*hop + window)`; the input is zero-padded at the tail so every
//! sample lands in at least one frame. Synthesis is a weighted overlap-add
//! normalized by the running sum of squared windows.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::{AudioClip, DEFAULT_SAMPLE_RATE_HZ};

#[derive(Debug, Error, PartialEq)]
pub enum StftError {
    #[error("invalid STFT configuration: {0}")]
    InvalidConfig(String),
    #[error("clip has {len} samples, shorter than one {window}-sample window")]
    ClipTooShort { len: usize, window: usize },
    #[error("clip sample rate {clip} Hz does not match codec rate {codec} Hz")]
    SampleRateMismatch { clip: u32, codec: u32 },
    #[error("spectrogram has no frames")]
    EmptySpectrogram,
    #[error("frame {index} has {len} bins, expected {expected}")]
    FrameLength {
        index: usize,
        len: usize,
        expected: usize,
    },
    #[error("frame {index} contains a non-finite entry")]
    NonFinite { index: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum WindowKind {
    #[default]
    Hann,
}

impl WindowKind {
    /// Periodic (DFT-even) window coefficients.
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            WindowKind::Hann => (0..len)
                .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StftConfig {
    pub window_length: usize,
    pub hop_length: usize,
    pub window: WindowKind,
    pub sample_rate_hz: u32,
}

impl Default for StftConfig {
    fn default() -> Self {
        Self {
            window_length: 512,
            hop_length: 128,
            window: WindowKind::Hann,
            sample_rate_hz: DEFAULT_SAMPLE_RATE_HZ,
        }
    }
}

impl StftConfig {
    pub fn new(window_length: usize, hop_length: usize, sample_rate_hz: u32) -> Result<Self, StftError> {
        let cfg = Self {
            window_length,
            hop_length,
            window: WindowKind::Hann,
            sample_rate_hz,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), StftError> {
        if self.sample_rate_hz == 0 {
            return Err(StftError::InvalidConfig("sample rate must be positive".into()));
        }
        if self.window_length < 2 || self.hop_length == 0 {
            return Err(StftError::InvalidConfig(
                "window length must be >= 2 and hop length >= 1".into(),
            ));
        }
        if !self.window_length.is_multiple_of(self.hop_length) || self.window_length / self.hop_length < 2 {
            return Err(StftError::InvalidConfig(format!(
                "hop {} must divide window {} at least twice",
                self.hop_length, self.window_length
            )));
        }
        // constant overlap-add of the analysis window
        let w = self.window.coefficients(self.window_length);
        let sums: Vec<f64> = (0..self.hop_length)
            .map(|m| w.iter().skip(m).step_by(self.hop_length).sum())
            .collect();
        let first = sums[0];
        if sums.iter().any(|s| (s - first).abs() > 1e-9 * first.abs().max(1.0)) {
            return Err(StftError::InvalidConfig(format!(
                "window/hop pair {}/{} violates constant overlap-add",
                self.window_length, self.hop_length
            )));
        }
        Ok(())
    }

    pub fn num_bins(&self) -> usize {
        self.window_length / 2 + 1
    }

    /// Frame count for a clip of `len >= window_length` samples.
    pub fn num_frames(&self, len: usize) -> usize {
        (len - self.window_length).div_ceil(self.hop_length) + 1
    }

    /// Seconds between consecutive frames.
    pub fn timestep_s(&self) -> f64 {
        self.hop_length as f64 / f64::from(self.sample_rate_hz)
    }

    /// Time at which the input buffer for frame `k` is complete.
    pub fn frame_ready_time_s(&self, k: usize) -> f64 {
        (k * self.hop_length + self.window_length) as f64 / f64::from(self.sample_rate_hz)
    }
}

/// Complex half-spectrum frames of a real signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    frames: Vec<Vec<Complex64>>,
    config: StftConfig,
    signal_len: Option<usize>,
}

impl Spectrogram {
    pub fn from_frames(
        frames: Vec<Vec<Complex64>>,
        config: StftConfig,
        signal_len: Option<usize>,
    ) -> Result<Self, StftError> {
        let expected = config.num_bins();
        for (index, f) in frames.iter().enumerate() {
            if f.len() != expected {
                return Err(StftError::FrameLength {
                    index,
                    len: f.len(),
                    expected,
                });
            }
            if f.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
                return Err(StftError::NonFinite { index });
            }
        }
        Ok(Self {
            frames,
            config,
            signal_len,
        })
    }

    /// Rebuilds a spectrogram from polar components.
    pub fn from_polar(
        magnitude: &[Vec<f64>],
        phase: &[Vec<f64>],
        config: StftConfig,
        signal_len: Option<usize>,
    ) -> Result<Self, StftError> {
        let frames = magnitude
            .iter()
            .zip(phase)
            .map(|(m, p)| m.iter().zip(p).map(|(&r, &t)| Complex64::from_polar(r, t)).collect())
            .collect();
        Self::from_frames(frames, config, signal_len)
    }

    pub fn frames(&self) -> &[Vec<Complex64>] {
        &self.frames
    }

    pub fn config(&self) -> &StftConfig {
        &self.config
    }

    pub fn signal_len(&self) -> Option<usize> {
        self.signal_len
    }

    pub fn num_frames(&self) -> usize {
        self.frames.len()
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            frames: self
                .frames
                .iter()
                .map(|f| f.iter().map(|c| c * alpha).collect())
                .collect(),
            config: self.config,
            signal_len: self.signal_len,
        }
    }

    /// Splits into magnitude and phase frames. A zero bin has phase 0.
    pub fn magnitude_phase(&self) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        self.frames
            .iter()
            .map(|f| f.iter().map(|&c| polar(c)).unzip())
            .unzip()
    }
}

fn polar(c: Complex64) -> (f64, f64) {
    let mag = c.norm();
    if mag == 0.0 {
        (0.0, 0.0)
    } else {
        (mag, c.im.atan2(c.re))
    }
}

/// Single-frame analysis/synthesis with cached FFT plans.
#[derive(Clone)]
pub struct FrameCodec {
    config: StftConfig,
    window: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for FrameCodec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FrameCodec").field("config", &self.config).finish()
    }
}

impl FrameCodec {
    pub fn new(config: StftConfig) -> Result<Self, StftError> {
        config.validate()?;
        let mut planner = FftPlanner::new();
        Ok(Self {
            window: config.window.coefficients(config.window_length),
            forward: planner.plan_fft_forward(config.window_length),
            inverse: planner.plan_fft_inverse(config.window_length),
            config,
        })
    }

    pub fn config(&self) -> &StftConfig {
        &self.config
    }

    pub fn window(&self) -> &[f64] {
        &self.window
    }

    /// Windowed forward transform of exactly one window of samples.
    pub fn analyze(&self, segment: &[f64]) -> Vec<Complex64> {
        debug_assert_eq!(segment.len(), self.config.window_length);
        let mut buf: Vec<Complex64> = segment
            .iter()
            .zip(&self.window)
            .map(|(&s, &w)| Complex64::new(s * w, 0.0))
            .collect();
        self.forward.process(&mut buf);
        buf.truncate(self.config.num_bins());
        buf
    }

    /// Inverse transform of a half spectrum, multiplied by the synthesis window.
    pub fn synthesize(&self, bins: &[Complex64]) -> Vec<f64> {
        let n = self.config.window_length;
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        buf[..bins.len()].copy_from_slice(bins);
        for f in bins.len()..n {
            buf[f] = bins[n - f].conj();
        }
        self.inverse.process(&mut buf);
        let scale = 1.0 / n as f64;
        buf.iter()
            .zip(&self.window)
            .map(|(c, &w)| c.re * scale * w)
            .collect()
    }

    /// Forward FFT of a real frame without windowing (full length, used by gradients).
    pub(crate) fn raw_forward(&self, frame: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = frame.iter().map(|&s| Complex64::new(s, 0.0)).collect();
        self.forward.process(&mut buf);
        buf
    }
}

pub fn stft(clip: &AudioClip, cfg: &StftConfig) -> Result<Spectrogram, StftError> {
    let codec = FrameCodec::new(*cfg)?;
    stft_with(&codec, clip)
}

pub fn stft_with(codec: &FrameCodec, clip: &AudioClip) -> Result<Spectrogram, StftError> {
    let cfg = *codec.config();
    if clip.sample_rate_hz() != cfg.sample_rate_hz {
        return Err(StftError::SampleRateMismatch {
            clip: clip.sample_rate_hz(),
            codec: cfg.sample_rate_hz,
        });
    }
    let len = clip.len();
    if len < cfg.window_length {
        return Err(StftError::ClipTooShort {
            len,
            window: cfg.window_length,
        });
    }
    let count = cfg.num_frames(len);
    let padded_len = (count - 1) * cfg.hop_length + cfg.window_length;
    let mut padded = clip.samples().to_vec();
    padded.resize(padded_len, 0.0);
    let frames = (0..count)
        .map(|k| {
            let start = k * cfg.hop_length;
            codec.analyze(&padded[start..start + cfg.window_length])
        })
        .collect();
    Ok(Spectrogram {
        frames,
        config: cfg,
        signal_len: Some(len),
    })
}

const EDGE_NORM_FLOOR: f64 = 0.1;

pub fn istft(spec: &Spectrogram) -> Result<AudioClip, StftError> {
    let codec = FrameCodec::new(spec.config)?;
    istft_with(&codec, spec)
}

/// Overlap-adds the synthesized frames; returns the raw sum and the
/// squared-window sum at every sample of the padded signal.
fn overlap_add(codec: &FrameCodec, spec: &Spectrogram) -> Result<(Vec<f64>, Vec<f64>), StftError> {
    if spec.frames.is_empty() {
        return Err(StftError::EmptySpectrogram);
    }
    let hop = spec.config.hop_length;
    let padded_len = (spec.frames.len() - 1) * hop + spec.config.window_length;
    let mut out = vec![0.0; padded_len];
    let mut norm = vec![0.0; padded_len];
    let window = codec.window();
    for (k, frame) in spec.frames.iter().enumerate() {
        let start = k * hop;
        let chunk = codec.synthesize(frame);
        for (m, (&v, &w)) in chunk.iter().zip(window).enumerate() {
            out[start + m] += v;
            norm[start + m] += w * w;
        }
    }
    Ok((out, norm))
}

fn finish(mut out: Vec<f64>, spec: &Spectrogram) -> AudioClip {
    if let Some(len) = spec.signal_len {
        out.truncate(len);
    }
    AudioClip::new(out, spec.config.sample_rate_hz).expect("finite synthesis output")
}

/// Exact inverse of [`stft_with`] for unmodified spectra. Samples that no
/// window reaches (the first one, for a periodic Hann) come out as zero.
pub fn istft_with(codec: &FrameCodec, spec: &Spectrogram) -> Result<AudioClip, StftError> {
    let (mut out, norm) = overlap_add(codec, spec)?;
    for (o, &d) in out.iter_mut().zip(&norm) {
        *o = if d > f64::EPSILON { *o / d } else { 0.0 };
    }
    Ok(finish(out, spec))
}

/// Inverse STFT for modified spectra.
///
/// Near the ends only one or two frames overlap and the squared-window sum
/// approaches zero, so exact normalization would blow up any inconsistency
/// the modification introduced. Where the sum falls below a fraction of its
/// steady-state value the missing weight is filled from `fallback`, the
/// signal an unmodified spectrum would decode to. A spectrum that is the
/// STFT of `fallback` therefore still decodes exactly, while the gain applied
/// to anything else stays bounded. `fallback` is zero-extended as needed.
pub fn istft_guided(codec: &FrameCodec, spec: &Spectrogram, fallback: &[f64]) -> Result<AudioClip, StftError> {
    let (mut out, norm) = overlap_add(codec, spec)?;
    let hop = spec.config.hop_length as f64;
    let floor = EDGE_NORM_FLOOR * codec.window().iter().map(|w| w * w).sum::<f64>() / hop;
    for (i, (o, &d)) in out.iter_mut().zip(&norm).enumerate() {
        if d < floor {
            let x = fallback.get(i).copied().unwrap_or(0.0);
            *o = (*o + (floor - d) * x) / floor;
        } else {
            *o /= d;
        }
    }
    Ok(finish(out, spec))
}
