//! Delta encoding (send only changes that clear a threshold) and its sigma
//! decoder (accumulate received changes).

/// Graded-spike message: only nonzero channels are carried, in ascending index order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseEvents {
    dim: usize,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseEvents {
    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds from `(index, value)` pairs; zero values are dropped and pairs sorted.
    pub fn from_pairs(dim: usize, mut pairs: Vec<(usize, f64)>) -> Self {
        pairs.retain(|&(_, v)| v != 0.0);
        pairs.sort_by_key(|&(i, _)| i);
        assert!(pairs.iter().all(|&(i, _)| i < dim), "event index out of range");
        let (indices, values) = pairs.into_iter().unzip();
        Self {
            dim,
            indices,
            values,
        }
    }

    pub fn from_dense(dense: &[f64]) -> Self {
        let pairs = dense.iter().copied().enumerate().collect();
        Self::from_pairs(dense.len(), pairs)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (i, v) in self.iter() {
            out[i] = v;
        }
        out
    }
}

/// Sender side: tracks the last transmitted value per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaEncoder {
    reference: Vec<f64>,
    threshold: f64,
}

impl DeltaEncoder {
    pub fn new(dim: usize, threshold: f64) -> Self {
        assert!(threshold >= 0.0 && threshold.is_finite(), "threshold must be finite and >= 0");
        Self {
            reference: vec![0.0; dim],
            threshold,
        }
    }

    pub fn dim(&self) -> usize {
        self.reference.len()
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn reference(&self) -> &[f64] {
        &self.reference
    }

    /// Emits `x - reference` on every channel whose change reaches the
    /// threshold, moving that channel's reference to `x`.
    pub fn encode(&mut self, x: &[f64]) -> SparseEvents {
        assert_eq!(x.len(), self.reference.len(), "delta encoder dimension mismatch");
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for (i, (r, &v)) in self.reference.iter_mut().zip(x).enumerate() {
            let d = v - *r;
            if d != 0.0 && d.abs() >= self.threshold {
                indices.push(i);
                values.push(d);
                *r = v;
            }
        }
        SparseEvents {
            dim: x.len(),
            indices,
            values,
        }
    }

    pub fn reset(&mut self) {
        self.reference.iter_mut().for_each(|r| *r = 0.0);
    }
}

/// Receiver side: running sum of received deltas.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaDecoder {
    accumulator: Vec<f64>,
}

impl SigmaDecoder {
    pub fn new(dim: usize) -> Self {
        Self {
            accumulator: vec![0.0; dim],
        }
    }

    pub fn accumulate(&mut self, events: &SparseEvents) -> &[f64] {
        assert_eq!(events.dim(), self.accumulator.len(), "sigma decoder dimension mismatch");
        for (i, v) in events.iter() {
            self.accumulator[i] += v;
        }
        &self.accumulator
    }

    pub fn value(&self) -> &[f64] {
        &self.accumulator
    }

    pub fn reset(&mut self) {
        self.accumulator.iter_mut().for_each(|a| *a = 0.0);
    }
}
