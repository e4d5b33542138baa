use super::{LatencyBreakdown, MetricsError};
use crate::sdnn::OpsCounter;

/// Neuron updates are weighted ten times a synaptic op.
pub const NEURON_OP_WEIGHT: f64 = 10.0;

/// Effective operations per second of audio, in M-Ops/s:
/// `(synops + 10 * neuronops) / audio_seconds / 1e6`.
pub fn power_proxy(counter: &OpsCounter) -> Result<f64, MetricsError> {
    if !(counter.audio_seconds > 0.0) {
        return Err(MetricsError::ZeroDuration);
    }
    let effective = counter.synops as f64 + NEURON_OP_WEIGHT * counter.neuronops as f64;
    Ok(effective / counter.audio_seconds / 1e6)
}

/// Power-delay product in M-Ops: power proxy times total latency.
pub fn pdp_proxy(power_mops_s: f64, latency: &LatencyBreakdown) -> f64 {
    power_mops_s * latency.total_s
}
