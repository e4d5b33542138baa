use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::delta::{DeltaEncoder, SigmaDecoder, SparseEvents};
use super::layer::{LayerState, SdnnLayer, Weights};
use super::ops::OpsCounter;
use super::quant;
use super::SdnnError;
use crate::audio::AudioClip;
use crate::stft::{istft_guided, stft_with, FrameCodec, Spectrogram, StftConfig};

/// Bit width charged per axonal delay in model-size accounting.
pub const DELAY_BITS: u64 = 6;
/// Bit width charged per threshold in model-size accounting.
pub const THRESHOLD_BITS: u64 = 16;

/// Layer sizes and initialization settings for a feedforward SDNN.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Topology {
    /// Neuron counts, input first: `[257, 512, 512, 257]` is three layers.
    pub dims: Vec<usize>,
    /// Weight width in bits; `None` keeps full-precision weights.
    pub weight_bits: Option<u8>,
    /// Delta threshold on every layer's output.
    pub threshold: f64,
    /// Delta threshold on the network input.
    pub input_threshold: f64,
    /// Multiplier on the uniform `sqrt(6 / fan_in)` initialization bound.
    pub init_gain: f64,
}

impl Default for Topology {
    fn default() -> Self {
        Self {
            dims: vec![257, 512, 512, 257],
            weight_bits: Some(8),
            threshold: 0.0,
            input_threshold: 0.0,
            init_gain: 1.0,
        }
    }
}

impl Topology {
    pub fn with_dims(dims: &[usize]) -> Self {
        Self {
            dims: dims.to_vec(),
            ..Self::default()
        }
    }
}

/// A feedforward sigma-delta ReLU network. Parameters only; per-stream
/// runtime state lives in [`NetworkState`].
#[derive(Debug, Clone, PartialEq)]
pub struct SdnnNetwork {
    input_threshold: f64,
    layers: Vec<SdnnLayer>,
}

impl SdnnNetwork {
    pub fn new(input_threshold: f64, layers: Vec<SdnnLayer>) -> Result<Self, SdnnError> {
        if !(input_threshold >= 0.0 && input_threshold.is_finite()) {
            return Err(SdnnError::InvalidLayer(format!(
                "input threshold {input_threshold} must be finite and >= 0"
            )));
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(SdnnError::InvalidLayer(format!(
                    "layer {i} outputs {} but layer {} expects {}",
                    pair[0].out_dim(),
                    i + 1,
                    pair[1].in_dim()
                )));
            }
        }
        Ok(Self {
            input_threshold,
            layers,
        })
    }

    /// Randomly initialized network with zero delays.
    pub fn random(topology: &Topology, seed: u64) -> Result<Self, SdnnError> {
        if topology.dims.len() < 2 {
            return Err(SdnnError::InvalidLayer("topology needs at least two sizes".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = topology
            .dims
            .windows(2)
            .map(|pair| {
                let (in_dim, out_dim) = (pair[0], pair[1]);
                let bound = topology.init_gain * (6.0 / in_dim as f64).sqrt();
                let w: Vec<f64> = (0..in_dim * out_dim)
                    .map(|_| rng.gen_range(-bound..=bound))
                    .collect();
                let weights = match topology.weight_bits {
                    Some(bits) => {
                        let (codes, scale_exp) = quant::quantize(&w, bits);
                        Weights::Quantized {
                            codes,
                            bits,
                            scale_exp,
                        }
                    }
                    None => Weights::Float(w),
                };
                SdnnLayer::new(in_dim, out_dim, weights, vec![0; out_dim], topology.threshold)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(topology.input_threshold, layers)
    }

    pub fn layers(&self) -> &[SdnnLayer] {
        &self.layers
    }

    pub fn input_threshold(&self) -> f64 {
        self.input_threshold
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, SdnnLayer::in_dim)
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, SdnnLayer::out_dim)
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut dims: Vec<usize> = self.layers.first().map(|l| l.in_dim()).into_iter().collect();
        dims.extend(self.layers.iter().map(SdnnLayer::out_dim));
        dims
    }

    pub fn total_neurons(&self) -> usize {
        self.layers.iter().map(SdnnLayer::out_dim).sum()
    }

    /// Dense multiply-accumulate count of one timestep.
    pub fn dense_macs_per_step(&self) -> u64 {
        self.layers
            .iter()
            .map(|l| (l.in_dim() * l.out_dim()) as u64)
            .sum()
    }

    /// Unique parameters: weights, delays and one threshold per layer.
    pub fn count_params(&self) -> u64 {
        self.layers
            .iter()
            .map(|l| (l.weights().len() + l.delays().len() + 1) as u64)
            .sum()
    }

    pub fn weight_count(&self) -> u64 {
        self.layers.iter().map(|l| l.weights().len() as u64).sum()
    }

    /// Total parameter bits rounded up to whole bytes.
    pub fn model_size_bytes(&self) -> u64 {
        let bits: u64 = self
            .layers
            .iter()
            .map(|l| {
                l.weights().len() as u64 * u64::from(l.weights().bits())
                    + l.delays().len() as u64 * DELAY_BITS
                    + THRESHOLD_BITS
            })
            .sum();
        bits.div_ceil(8)
    }

    pub fn new_state(&self) -> NetworkState {
        NetworkState {
            input: DeltaEncoder::new(self.input_dim(), self.input_threshold),
            layers: self.layers.iter().map(SdnnLayer::new_state).collect(),
            output: SigmaDecoder::new(self.output_dim()),
        }
    }

    /// Processes one magnitude frame and returns the current mask.
    pub fn step(
        &self,
        state: &mut NetworkState,
        frame: &[f64],
        counter: &mut OpsCounter,
    ) -> Result<Vec<f64>, SdnnError> {
        if frame.len() != self.input_dim() {
            return Err(SdnnError::DimensionMismatch {
                expected: self.input_dim(),
                got: frame.len(),
            });
        }
        let mut events = state.input.encode(frame);
        for (layer, layer_state) in self.layers.iter().zip(state.layers.iter_mut()) {
            events = layer.step(layer_state, &events, counter)?;
        }
        let mask = state.output.accumulate(&events).iter().map(|&m| m.max(0.0)).collect();
        counter.finish_step();
        Ok(mask)
    }

    /// Runs a single layer's event stream in isolation; used by analysis tools.
    pub fn layer_events(
        &self,
        layer: usize,
        inputs: &[SparseEvents],
    ) -> Result<Vec<SparseEvents>, SdnnError> {
        let l = &self.layers[layer];
        let mut st = l.new_state();
        let mut counter = OpsCounter::default();
        inputs.iter().map(|e| l.step(&mut st, e, &mut counter)).collect()
    }

    pub fn stream(&self) -> SdnnStream<'_> {
        SdnnStream {
            net: self,
            state: self.new_state(),
        }
    }
}

/// Per-stream runtime state of a whole network.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    input: DeltaEncoder,
    layers: Vec<LayerState>,
    output: SigmaDecoder,
}

impl NetworkState {
    pub fn layers(&self) -> &[LayerState] {
        &self.layers
    }
}

/// Anything that turns noisy magnitude frames into multiplicative masks.
pub trait MaskSource {
    fn input_dim(&self) -> usize;
    fn next_mask(&mut self, magnitude: &[f64], counter: &mut OpsCounter) -> Result<Vec<f64>, SdnnError>;
}

/// A network paired with fresh runtime state.
#[derive(Debug, Clone)]
pub struct SdnnStream<'a> {
    net: &'a SdnnNetwork,
    state: NetworkState,
}

impl MaskSource for SdnnStream<'_> {
    fn input_dim(&self) -> usize {
        self.net.input_dim()
    }

    fn next_mask(&mut self, magnitude: &[f64], counter: &mut OpsCounter) -> Result<Vec<f64>, SdnnError> {
        self.net.step(&mut self.state, magnitude, counter)
    }
}

/// Fixed mask, e.g. all ones for the encode/decode-only bypass path.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantMask {
    pub value: f64,
    pub dim: usize,
}

impl MaskSource for ConstantMask {
    fn input_dim(&self) -> usize {
        self.dim
    }

    fn next_mask(&mut self, magnitude: &[f64], counter: &mut OpsCounter) -> Result<Vec<f64>, SdnnError> {
        if magnitude.len() != self.dim {
            return Err(SdnnError::DimensionMismatch {
                expected: self.dim,
                got: magnitude.len(),
            });
        }
        counter.finish_step();
        Ok(vec![self.value; self.dim])
    }
}

/// Full encode -> mask -> decode pipeline over one utterance.
///
/// Output frame `k` is `mask_k * |X_{k-D}|` with phase `arg X_{k-D}`, where
/// `D = net_delay_steps`; frames with `k < D` are silent.
pub fn denoise(
    masks: &mut dyn MaskSource,
    noisy: &AudioClip,
    cfg: &StftConfig,
    net_delay_steps: usize,
) -> Result<(AudioClip, OpsCounter), SdnnError> {
    let codec = FrameCodec::new(*cfg)?;
    denoise_with(&codec, masks, noisy, net_delay_steps)
}

pub fn denoise_with(
    codec: &FrameCodec,
    masks: &mut dyn MaskSource,
    noisy: &AudioClip,
    net_delay_steps: usize,
) -> Result<(AudioClip, OpsCounter), SdnnError> {
    let cfg = *codec.config();
    if masks.input_dim() != cfg.num_bins() {
        return Err(SdnnError::DimensionMismatch {
            expected: cfg.num_bins(),
            got: masks.input_dim(),
        });
    }
    let spec = stft_with(codec, noisy)?;
    let (magnitude, phase) = spec.magnitude_phase();
    let mut counter = OpsCounter::new(cfg.timestep_s());
    let bins = cfg.num_bins();
    let mut out_mag = Vec::with_capacity(magnitude.len());
    let mut out_phase = Vec::with_capacity(magnitude.len());
    for (k, frame) in magnitude.iter().enumerate() {
        let mask = masks.next_mask(frame, &mut counter)?;
        match k.checked_sub(net_delay_steps) {
            Some(src) => {
                out_mag.push(mask.iter().zip(&magnitude[src]).map(|(m, a)| m * a).collect());
                out_phase.push(phase[src].clone());
            }
            None => {
                out_mag.push(vec![0.0; bins]);
                out_phase.push(vec![0.0; bins]);
            }
        }
    }
    let masked = Spectrogram::from_polar(&out_mag, &out_phase, cfg, spec.signal_len())?;
    // what a unit mask would produce: the input, late by the network delay
    let shift = (net_delay_steps * cfg.hop_length).min(noisy.len());
    let mut passthrough = vec![0.0; shift];
    passthrough.extend_from_slice(&noisy.samples()[..noisy.len() - shift]);
    Ok((istft_guided(codec, &masked, &passthrough)?, counter))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdnn::layer::MAX_DELAY;

    fn identity_layer(n: usize) -> SdnnLayer {
        let mut w = vec![0.0; n * n];
        for i in 0..n {
            w[i * n + i] = 1.0;
        }
        SdnnLayer::new(n, n, Weights::Float(w), vec![0; n], 0.0).unwrap()
    }

    #[test]
    fn identity_network_passes_frames() {
        let net = SdnnNetwork::new(0.0, vec![identity_layer(5)]).unwrap();
        let mut st = net.new_state();
        let mut c = OpsCounter::new(0.008);
        for frame in [[0.1, 0.0, 2.0, 3.0, 0.5], [0.3, 0.2, 0.0, 3.0, 0.7]] {
            assert_eq!(net.step(&mut st, &frame, &mut c).unwrap(), frame.to_vec());
        }
    }

    #[test]
    fn rest_stays_at_rest() {
        let net = SdnnNetwork::random(&Topology::with_dims(&[6, 8, 6]), 3).unwrap();
        let mut st = net.new_state();
        let mut c = OpsCounter::new(0.008);
        for _ in 0..10 {
            assert!(net.step(&mut st, &[0.0; 6], &mut c).unwrap().iter().all(|&m| m == 0.0));
        }
        assert_eq!(c.synops, 0);
        assert_eq!(c.neuronops, 10 * 14);
        assert!((c.audio_seconds - 0.08).abs() < 1e-12);
    }

    #[test]
    fn neuron_ops_count_every_step() {
        let net = SdnnNetwork::random(&Topology::with_dims(&[4, 7, 3, 4]), 1).unwrap();
        let mut st = net.new_state();
        let mut c = OpsCounter::new(0.01);
        for t in 0..13 {
            let x = [t as f64 * 0.1, 1.0, 0.0, 0.3];
            net.step(&mut st, &x, &mut c).unwrap();
        }
        assert_eq!(c.neuronops, 13 * 14);
        assert_eq!(c.steps, 13);
    }

    #[test]
    fn input_dimension_checked() {
        let net = SdnnNetwork::new(0.0, vec![identity_layer(3)]).unwrap();
        let mut st = net.new_state();
        assert!(matches!(
            net.step(&mut st, &[1.0; 4], &mut OpsCounter::default()),
            Err(SdnnError::DimensionMismatch { expected: 3, got: 4 })
        ));
    }

    #[test]
    fn mismatched_layer_chain_rejected() {
        let a = identity_layer(3);
        let b = identity_layer(4);
        assert!(SdnnNetwork::new(0.0, vec![a, b]).is_err());
    }

    #[test]
    fn accounting_arithmetic() {
        let one = SdnnNetwork::random(&Topology::with_dims(&[257, 512]), 0).unwrap();
        assert_eq!(one.count_params(), 131_584 + 512 + 1);
        let full = SdnnNetwork::random(&Topology::default(), 0).unwrap();
        assert_eq!(full.weight_count(), 525_312);
        let empty = SdnnNetwork::new(0.0, vec![]).unwrap();
        assert_eq!(empty.count_params(), 0);
        assert_eq!(empty.model_size_bytes(), 0);
        // 525312*8 + 1281*6 + 3*16 bits
        assert_eq!(full.model_size_bytes(), (4_202_496u64 + 7_686 + 48).div_ceil(8));
    }

    #[test]
    fn model_size_bit_rule() {
        // 1000 weights @8b + 100 delays @6b + 10 thresholds @16b
        let layers: Vec<SdnnLayer> = (0..10)
            .map(|_| {
                SdnnLayer::new(
                    10,
                    10,
                    Weights::Quantized {
                        codes: vec![0; 100],
                        bits: 8,
                        scale_exp: 0,
                    },
                    vec![0; 10],
                    0.0,
                )
                .unwrap()
            })
            .collect();
        let net = SdnnNetwork::new(0.0, layers).unwrap();
        assert_eq!(net.model_size_bytes(), 1095);

        let with_bits = |bits| {
            let l = SdnnLayer::new(
                10,
                10,
                Weights::Quantized {
                    codes: vec![0; 100],
                    bits,
                    scale_exp: 0,
                },
                vec![0; 10],
                0.0,
            )
            .unwrap();
            SdnnNetwork::new(0.0, vec![l]).unwrap().model_size_bytes()
        };
        // weight contribution 400 bits -> 800 bits
        assert_eq!(with_bits(8) - with_bits(4), 50);
    }

    #[test]
    fn delay_cap_is_64() {
        assert_eq!(MAX_DELAY, 64);
    }
}
