//! Quantization-aware training: shadow parameters, the unrolled
//! sigma-delta graph, the SI-SNR plus magnitude-MSE loss, Rectified Adam and
//! the epoch loop with checkpointing.

mod graph;
mod radam;
mod session;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use graph::{forward_backward, forward_loss, segment_masks, Gradients, LayerGrads, LossWeights, Segment, StreamState};
pub use radam::{RadamState, StepKind, BETA1, BETA2, EPSILON};
pub use session::{
    checkpoint_path, resume, train, EpochRecord, TrainHistory, TrainOutcome, CHECKPOINT_DIR, CONFIG_ECHO_FILE,
    HISTORY_FILE, STATE_FILE,
};

use crate::audio::{AudioClip, AudioError};
use crate::metrics::{cap_db, si_snr, MetricsError};
use crate::sdnn::{quant, SdnnError, SdnnLayer, SdnnNetwork, Weights, MAX_DELAY};
use crate::stft::{StftConfig, StftError};
use crate::synth::SynthError;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("manifest has no usable records")]
    EmptyManifest,
    #[error("resume state does not match: {0}")]
    ResumeMismatch(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("corrupt training state {path}: {message}")]
    State { path: String, message: String },
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Network(#[from] SdnnError),
    #[error(transparent)]
    Stft(#[from] StftError),
    #[error(transparent)]
    Data(#[from] SynthError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    /// Utterances whose gradients are averaged per optimizer step.
    pub batch_size: usize,
    /// Frames per truncated backpropagation segment.
    pub bptt_len: usize,
    /// Weight of the magnitude MSE term.
    pub loss_lambda: f64,
    /// Weight of the negative SI-SNR term.
    pub si_snr_weight: f64,
    /// Global gradient-norm clip; `None` disables clipping.
    pub grad_clip: Option<f64>,
    pub seed: u64,
    /// Frames between a noisy input frame and the output frame it masks.
    pub net_delay_steps: usize,
    /// Share of the manifest (taken from its end) held out for validation.
    pub validation_fraction: f64,
    pub stft: StftConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            epochs: 20,
            batch_size: 4,
            bptt_len: 100,
            loss_lambda: 1.0,
            si_snr_weight: 1.0,
            grad_clip: Some(10.0),
            seed: 0,
            net_delay_steps: 2,
            validation_fraction: 0.2,
            stft: StftConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: &str| Err(TrainError::InvalidConfig(m.into()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if self.bptt_len == 0 {
            return bad("bptt_len must be at least 1");
        }
        if !(self.loss_lambda >= 0.0 && self.si_snr_weight >= 0.0) {
            return bad("loss weights must be nonnegative");
        }
        if let Some(c) = self.grad_clip {
            if !(c > 0.0) {
                return bad("grad_clip must be positive");
            }
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return bad("validation_fraction must be in [0, 1)");
        }
        self.stft.validate()?;
        Ok(())
    }

    pub fn loss_weights(&self) -> LossWeights {
        LossWeights {
            si_snr: self.si_snr_weight,
            mse: self.loss_lambda,
            net_delay_steps: self.net_delay_steps,
        }
    }
}

/// Full-precision mirror of one layer's trainable values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShadowLayer {
    pub in_dim: usize,
    pub out_dim: usize,
    /// `None` deploys full-precision weights.
    pub weight_bits: Option<u8>,
    /// Row-major `out x in`.
    pub weights: Vec<f64>,
    pub delays: Vec<f64>,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShadowParams {
    pub input_threshold: f64,
    pub layers: Vec<ShadowLayer>,
}

impl ShadowParams {
    pub fn from_network(net: &SdnnNetwork) -> Self {
        Self {
            input_threshold: net.input_threshold(),
            layers: net
                .layers()
                .iter()
                .map(|l| ShadowLayer {
                    in_dim: l.in_dim(),
                    out_dim: l.out_dim(),
                    weight_bits: match l.weights() {
                        Weights::Float(_) => None,
                        Weights::Quantized { bits, .. } => Some(*bits),
                    },
                    weights: l.weights().effective(),
                    delays: l.delays().iter().map(|&d| f64::from(d)).collect(),
                    threshold: l.threshold(),
                })
                .collect(),
        }
    }

    /// Quantized network: weights requantized per layer, delays rounded.
    pub fn deploy(&self) -> Result<SdnnNetwork, SdnnError> {
        let layers = self
            .layers
            .iter()
            .map(|l| {
                let weights = match l.weight_bits {
                    Some(bits) => {
                        let (codes, scale_exp) = quant::quantize(&l.weights, bits);
                        Weights::Quantized {
                            codes,
                            bits,
                            scale_exp,
                        }
                    }
                    None => Weights::Float(l.weights.clone()),
                };
                let delays = l.delays.iter().map(|&d| round_delay(d)).collect();
                SdnnLayer::new(l.in_dim, l.out_dim, weights, delays, l.threshold.max(0.0))
            })
            .collect::<Result<Vec<_>, _>>()?;
        SdnnNetwork::new(self.input_threshold, layers)
    }

    /// True when `net` is exactly what [`deploy`](Self::deploy) produces.
    pub fn matches(&self, net: &SdnnNetwork) -> bool {
        self.deploy().is_ok_and(|d| &d == net)
    }

    /// Trainable values in gradient order: per layer weights, delays, threshold.
    pub fn flatten(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| {
                l.weights
                    .iter()
                    .chain(&l.delays)
                    .chain(std::iter::once(&l.threshold))
                    .copied()
            })
            .collect()
    }

    /// Inverse of [`flatten`](Self::flatten); delays and thresholds are
    /// projected back onto their valid ranges.
    pub fn assign(&mut self, values: &[f64]) {
        let mut it = values.iter().copied();
        for l in &mut self.layers {
            for w in &mut l.weights {
                *w = it.next().expect("value count");
            }
            for d in &mut l.delays {
                *d = it.next().expect("value count").clamp(0.0, f64::from(MAX_DELAY));
            }
            l.threshold = it.next().expect("value count").max(0.0);
        }
        assert!(it.next().is_none(), "too many values");
    }
}

fn round_delay(d: f64) -> u8 {
    d.round().clamp(0.0, f64::from(MAX_DELAY)) as u8
}

/// Negative capped SI-SNR of `denoised` against `clean` plus `lambda` times
/// the mean squared difference of masked and clean STFT magnitudes.
pub fn loss(
    denoised: &AudioClip,
    clean: &AudioClip,
    masked_mags: &[Vec<f64>],
    clean_mags: &[Vec<f64>],
    lambda: f64,
) -> Result<f64, TrainError> {
    let snr = cap_db(si_snr(denoised, clean)?);
    if masked_mags.len() != clean_mags.len() {
        return Err(TrainError::Dimension(format!(
            "{} masked frames vs {} clean frames",
            masked_mags.len(),
            clean_mags.len()
        )));
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for (a, b) in masked_mags.iter().zip(clean_mags) {
        if a.len() != b.len() {
            return Err(TrainError::Dimension(format!("{} vs {} bins", a.len(), b.len())));
        }
        sum += a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>();
        count += a.len();
    }
    let mse = if count == 0 { 0.0 } else { sum / count as f64 };
    Ok(-snr + lambda * mse)
}
