use serde::{Deserialize, Serialize};

/// Synaptic and neuron operation tallies over a processed stretch of audio.
///
/// One synaptic op is counted per transmitted nonzero event per outgoing
/// synapse; one neuron op per neuron per timestep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct OpsCounter {
    pub synops: u64,
    pub neuronops: u64,
    pub steps: u64,
    pub audio_seconds: f64,
    pub timestep_s: f64,
}

impl OpsCounter {
    pub fn new(timestep_s: f64) -> Self {
        Self {
            timestep_s,
            ..Self::default()
        }
    }

    pub(crate) fn finish_step(&mut self) {
        self.steps += 1;
        self.audio_seconds = self.steps as f64 * self.timestep_s;
    }

    /// Adds another counter's tallies (same timestep assumed).
    pub fn merge(&mut self, other: &OpsCounter) {
        self.synops += other.synops;
        self.neuronops += other.neuronops;
        self.steps += other.steps;
        self.audio_seconds += other.audio_seconds;
        if self.timestep_s == 0.0 {
            self.timestep_s = other.timestep_s;
        }
    }

    pub fn synops_per_s(&self) -> f64 {
        self.synops as f64 / self.audio_seconds
    }

    pub fn neuronops_per_s(&self) -> f64 {
        self.neuronops as f64 / self.audio_seconds
    }
}
