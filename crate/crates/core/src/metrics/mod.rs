//! Evaluation metrics: SI-SNR and its improvement gates, latency
//! decomposition, the operation-count power proxy and report assembly.

mod latency;
mod power;
mod report;
mod si_snr;

use thiserror::Error;

pub use latency::{buffer_latency, encdec_latency, measure_codec_latency, network_latency, network_lag_samples, LatencyBreakdown, MAX_NETWORK_LAG_S};
pub use power::{pdp_proxy, power_proxy};
pub use report::{qualification, Dnsmos, EvalReport, GateFailure, Qualification, UtteranceScore, CSV_HEADER, MAX_TOTAL_LATENCY_S, MIN_SI_SNRI_DB};
pub use si_snr::{cap_db, mean_si_snr, si_snr, si_snr_improvements, SiSnrImprovements, SI_SNR_CAP_DB};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("length mismatch: {estimate} vs {target} samples")]
    LengthMismatch { estimate: usize, target: usize },
    #[error("sample rate mismatch: {0} Hz vs {1} Hz")]
    SampleRateMismatch(u32, u32),
    #[error("empty signal")]
    Empty,
    #[error("target signal has zero energy after mean removal")]
    DegenerateTarget,
    #[error("signal is all zeros; cross-correlation undefined")]
    DegenerateSignal,
    #[error("overlap of {got} samples is shorter than the required {needed}")]
    TooShort { got: usize, needed: usize },
    #[error("audio duration must be positive")]
    ZeroDuration,
    #[error("empty batch")]
    EmptyBatch,
}
