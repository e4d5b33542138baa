use super::delta::{DeltaEncoder, SparseEvents};
use super::ops::OpsCounter;
use super::quant;
use super::SdnnError;

/// Largest supported axonal delay, in timesteps.
pub const MAX_DELAY: u8 = 64;

/// Synaptic weights of a layer, stored row-major (`out x in`).
#[derive(Debug, Clone, PartialEq)]
pub enum Weights {
    /// Full-precision weights (used for analysis and smooth-mode training).
    Float(Vec<f64>),
    /// Signed codes of `bits` width; the effective weight is `code * 2^scale_exp`.
    Quantized {
        codes: Vec<i8>,
        bits: u8,
        scale_exp: i8,
    },
}

impl Weights {
    pub fn len(&self) -> usize {
        match self {
            Weights::Float(w) => w.len(),
            Weights::Quantized { codes, .. } => codes.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Bit width used for model-size accounting (64 for float weights).
    pub fn bits(&self) -> u8 {
        match self {
            Weights::Float(_) => 64,
            Weights::Quantized { bits, .. } => *bits,
        }
    }

    pub fn effective(&self) -> Vec<f64> {
        match self {
            Weights::Float(w) => w.clone(),
            Weights::Quantized {
                codes, scale_exp, ..
            } => codes.iter().map(|&c| quant::dequantize(c, *scale_exp)).collect(),
        }
    }
}

/// One sigma-delta ReLU layer: synapses, per-neuron axonal delays and the
/// delta threshold applied to its outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct SdnnLayer {
    in_dim: usize,
    out_dim: usize,
    weights: Weights,
    delays: Vec<u8>,
    threshold: f64,
    // effective weights, column-major, for event-driven accumulation
    columns: Vec<f64>,
}

impl SdnnLayer {
    pub fn new(
        in_dim: usize,
        out_dim: usize,
        weights: Weights,
        delays: Vec<u8>,
        threshold: f64,
    ) -> Result<Self, SdnnError> {
        if weights.len() != in_dim * out_dim {
            return Err(SdnnError::InvalidLayer(format!(
                "{} weights for a {in_dim}->{out_dim} layer",
                weights.len()
            )));
        }
        if delays.len() != out_dim {
            return Err(SdnnError::InvalidLayer(format!(
                "{} delays for {out_dim} neurons",
                delays.len()
            )));
        }
        if let Some(&d) = delays.iter().find(|&&d| d > MAX_DELAY) {
            return Err(SdnnError::InvalidLayer(format!(
                "delay {d} exceeds maximum {MAX_DELAY}"
            )));
        }
        if !(threshold >= 0.0 && threshold.is_finite()) {
            return Err(SdnnError::InvalidLayer(format!("threshold {threshold} must be finite and >= 0")));
        }
        match &weights {
            Weights::Float(w) => {
                if w.iter().any(|v| !v.is_finite()) {
                    return Err(SdnnError::InvalidLayer("non-finite weight".into()));
                }
            }
            Weights::Quantized { codes, bits, .. } => {
                if !(1..=quant::MAX_WEIGHT_BITS).contains(bits) {
                    return Err(SdnnError::InvalidLayer(format!("weight bits {bits} outside 1..=8")));
                }
                let (lo, hi) = quant::code_range(*bits);
                if codes.iter().any(|&c| i32::from(c) < lo || i32::from(c) > hi) {
                    return Err(SdnnError::InvalidLayer(format!(
                        "weight code outside {bits}-bit range"
                    )));
                }
            }
        }
        let effective = weights.effective();
        let mut columns = vec![0.0; in_dim * out_dim];
        for o in 0..out_dim {
            for i in 0..in_dim {
                columns[i * out_dim + o] = effective[o * in_dim + i];
            }
        }
        Ok(Self {
            in_dim,
            out_dim,
            weights,
            delays,
            threshold,
            columns,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn weights(&self) -> &Weights {
        &self.weights
    }

    pub fn delays(&self) -> &[u8] {
        &self.delays
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Effective weight for output `o`, input `i`.
    pub fn weight(&self, o: usize, i: usize) -> f64 {
        self.columns[i * self.out_dim + o]
    }

    pub fn max_delay(&self) -> u8 {
        self.delays.iter().copied().max().unwrap_or(0)
    }

    pub fn new_state(&self) -> LayerState {
        let slots = usize::from(self.max_delay()) + 1;
        LayerState {
            pre_activation: vec![0.0; self.out_dim],
            output_delta: DeltaEncoder::new(self.out_dim, self.threshold),
            pending: vec![Vec::new(); slots],
            cursor: 0,
        }
    }

    /// Advances the layer by one timestep.
    ///
    /// Incoming events are accumulated into the pre-activation (`z += W e`),
    /// every neuron applies ReLU and delta-encodes its output, and each
    /// emitted event is released after that neuron's axonal delay.
    pub fn step(
        &self,
        state: &mut LayerState,
        input: &SparseEvents,
        counter: &mut OpsCounter,
    ) -> Result<SparseEvents, SdnnError> {
        if input.dim() != self.in_dim {
            return Err(SdnnError::DimensionMismatch {
                expected: self.in_dim,
                got: input.dim(),
            });
        }
        for (i, v) in input.iter() {
            let col = &self.columns[i * self.out_dim..(i + 1) * self.out_dim];
            for (z, &w) in state.pre_activation.iter_mut().zip(col) {
                *z += w * v;
            }
        }
        counter.synops += (input.nnz() * self.out_dim) as u64;

        let activation: Vec<f64> = state.pre_activation.iter().map(|&z| z.max(0.0)).collect();
        counter.neuronops += self.out_dim as u64;
        let emitted = state.output_delta.encode(&activation);

        let slots = state.pending.len();
        for (i, v) in emitted.iter() {
            let slot = (state.cursor + usize::from(self.delays[i])) % slots;
            state.pending[slot].push((i, v));
        }
        let due = std::mem::take(&mut state.pending[state.cursor]);
        state.cursor = (state.cursor + 1) % slots;
        Ok(SparseEvents::from_pairs(self.out_dim, due))
    }
}

/// Per-stream runtime state of one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerState {
    pre_activation: Vec<f64>,
    output_delta: DeltaEncoder,
    pending: Vec<Vec<(usize, f64)>>,
    cursor: usize,
}

impl LayerState {
    pub fn pre_activation(&self) -> &[f64] {
        &self.pre_activation
    }

    pub fn is_at_rest(&self) -> bool {
        self.pre_activation.iter().all(|&z| z == 0.0)
            && self.output_delta.reference().iter().all(|&r| r == 0.0)
            && self.pending.iter().all(Vec::is_empty)
    }
}
