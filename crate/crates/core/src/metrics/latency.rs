use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::audio::AudioClip;
use crate::stft::{FrameCodec, StftConfig, StftError};

/// Largest lag searched when estimating network latency.
pub const MAX_NETWORK_LAG_S: f64 = 0.100;

const MIN_TIMED_RUNS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyBreakdown {
    pub buffer_s: f64,
    pub encdec_s: f64,
    pub network_s: f64,
    pub total_s: f64,
}

impl LatencyBreakdown {
    pub fn new(buffer_s: f64, encdec_s: f64, network_s: f64) -> Self {
        assert!(
            buffer_s >= 0.0 && encdec_s >= 0.0 && network_s >= 0.0,
            "latencies must be nonnegative"
        );
        Self {
            buffer_s,
            encdec_s,
            network_s,
            total_s: buffer_s + encdec_s + network_s,
        }
    }
}

/// Time to fill one analysis window.
pub fn buffer_latency(cfg: &StftConfig) -> f64 {
    cfg.window_length as f64 / f64::from(cfg.sample_rate_hz)
}

/// Median wall-clock seconds of `encode_decode` over at least 100 timed
/// runs, after one untimed warm-up run.
pub fn encdec_latency<F: FnMut()>(mut encode_decode: F, runs: usize) -> f64 {
    encode_decode();
    let runs = runs.max(MIN_TIMED_RUNS);
    let mut times: Vec<f64> = (0..runs)
        .map(|_| {
            let start = Instant::now();
            encode_decode();
            start.elapsed().as_secs_f64()
        })
        .collect();
    times.sort_by(f64::total_cmp);
    if runs % 2 == 1 {
        times[runs / 2]
    } else {
        0.5 * (times[runs / 2 - 1] + times[runs / 2])
    }
}

/// Encoder-decoder latency of the STFT codec: one hop of new samples is
/// shifted into the window, analyzed, and synthesized back.
pub fn measure_codec_latency(cfg: &StftConfig, clip: &AudioClip, runs: usize) -> Result<f64, StftError> {
    let codec = FrameCodec::new(*cfg)?;
    let n = cfg.window_length;
    let hop = cfg.hop_length;
    let source = clip.samples();
    let mut window = vec![0.0; n];
    let mut cursor = 0usize;
    let mut sink = 0.0;
    let secs = encdec_latency(
        || {
            window.copy_within(hop.., 0);
            for slot in window[n - hop..].iter_mut() {
                *slot = if source.is_empty() { 0.0 } else { source[cursor % source.len()] };
                cursor += 1;
            }
            let bins = codec.analyze(&window);
            let out = codec.synthesize(&bins);
            sink += out[0];
        },
        runs,
    );
    std::hint::black_box(sink);
    Ok(secs)
}

/// Lag (in samples) of `denoised` behind `clean` that maximizes their
/// cross-correlation, searched over `0..=MAX_NETWORK_LAG_S`; ties go to the
/// smallest lag.
pub fn network_lag_samples(clean: &AudioClip, denoised: &AudioClip) -> Result<usize, MetricsError> {
    if clean.sample_rate_hz() != denoised.sample_rate_hz() {
        return Err(MetricsError::SampleRateMismatch(
            clean.sample_rate_hz(),
            denoised.sample_rate_hz(),
        ));
    }
    let rate = clean.sample_rate_hz() as usize;
    let overlap = clean.len().min(denoised.len());
    if overlap < rate {
        return Err(MetricsError::TooShort {
            got: overlap,
            needed: rate,
        });
    }
    let a = &clean.samples()[..overlap];
    let b = &denoised.samples()[..overlap];
    if a.iter().all(|&v| v == 0.0) || b.iter().all(|&v| v == 0.0) {
        return Err(MetricsError::DegenerateSignal);
    }
    let max_lag = ((MAX_NETWORK_LAG_S * rate as f64).round() as usize).min(overlap - 1);
    let corr: Vec<f64> = (0..=max_lag)
        .into_par_iter()
        .map(|lag| a[..overlap - lag].iter().zip(&b[lag..]).map(|(x, y)| x * y).sum())
        .collect();
    let mut best = 0;
    for (lag, &c) in corr.iter().enumerate() {
        if c > corr[best] {
            best = lag;
        }
    }
    Ok(best)
}

/// Network latency in seconds from the cross-correlation peak.
pub fn network_latency(clean: &AudioClip, denoised: &AudioClip) -> Result<f64, MetricsError> {
    let lag = network_lag_samples(clean, denoised)?;
    Ok(lag as f64 / f64::from(clean.sample_rate_hz()))
}
