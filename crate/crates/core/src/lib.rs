//! Neuromorphic speech denoising toolkit.
//!
//! The pipeline encodes noisy audio with an STFT, runs a sigma-delta ReLU
//! network over the magnitude frames to predict a multiplicative mask, and
//! decodes the masked spectrum back to audio. Alongside it live the dataset
//! synthesizer, the evaluation metrics (SI-SNR, latency, power proxy) and a
//! surrogate-gradient trainer.

// `!(x > 0.0)` guards are meant to reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audio;
pub mod metrics;
pub mod sdnn;
pub mod stft;
pub mod synth;
pub mod train;

pub use audio::{read_wav, write_wav, AudioClip, AudioError};
pub use stft::{istft, stft, Spectrogram, StftConfig, StftError};
