//! Unrolled forward pass and backpropagation through time for one
//! truncated segment of an utterance.
//!
//! The forward pass reproduces the event-driven network exactly in value:
//! a layer sees `u_t` (the sigma-reconstruction of its input events),
//! computes `z_t = W u_t`, `a_t = relu(z_t)`, updates its delta reference
//! `r_t`, and neuron `i` outputs `r_{t - d_i, i}`. In the backward pass the
//! delta quantizer is straight-through (`dr_t / da_t = 1`), weights pass
//! gradients to their full-precision shadows, and delays use the backward
//! temporal difference of the delayed reference.

use std::collections::VecDeque;

use rustfft::num_complex::Complex64;

use super::TrainError;
use crate::sdnn::{SdnnNetwork, MAX_DELAY};
use crate::stft::FrameCodec;

/// Weighting of the two loss terms and the mask/target alignment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub si_snr: f64,
    pub mse: f64,
    pub net_delay_steps: usize,
}

/// Gradients with the same layout as the network parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGrads>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrads {
    /// Row-major `out x in`.
    pub weights: Vec<f64>,
    pub delays: Vec<f64>,
    pub threshold: f64,
}

impl Gradients {
    pub fn zeros(net: &SdnnNetwork) -> Self {
        Self {
            layers: net
                .layers()
                .iter()
                .map(|l| LayerGrads {
                    weights: vec![0.0; l.in_dim() * l.out_dim()],
                    delays: vec![0.0; l.out_dim()],
                    threshold: 0.0,
                })
                .collect(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers.iter().flat_map(|l| {
            l.weights
                .iter()
                .chain(&l.delays)
                .chain(std::iter::once(&l.threshold))
                .copied()
        })
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.weights.iter_mut().zip(&b.weights).for_each(|(x, y)| *x += y);
            a.delays.iter_mut().zip(&b.delays).for_each(|(x, y)| *x += y);
            a.threshold += b.threshold;
        }
    }

    pub fn scale(&mut self, k: f64) {
        for l in &mut self.layers {
            l.weights.iter_mut().for_each(|x| *x *= k);
            l.delays.iter_mut().for_each(|x| *x *= k);
            l.threshold *= k;
        }
    }

    pub fn norm(&self) -> f64 {
        self.iter().map(|g| g * g).sum::<f64>().sqrt()
    }
}

/// Carried (detached) recurrent state of one utterance between segments.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamState {
    input_reference: Vec<f64>,
    // most recent reference first
    histories: Vec<VecDeque<Vec<f64>>>,
}

const HISTORY_LEN: usize = MAX_DELAY as usize + 2;

impl StreamState {
    pub fn new(net: &SdnnNetwork) -> Self {
        Self {
            input_reference: vec![0.0; net.input_dim()],
            histories: net.layers().iter().map(|_| VecDeque::new()).collect(),
        }
    }
}

/// One truncated segment: frames `start .. start + len` of an utterance.
#[derive(Debug, Clone, Copy)]
pub struct Segment<'a> {
    pub noisy: &'a [Vec<Complex64>],
    pub clean: &'a [Vec<Complex64>],
    pub start: usize,
    pub len: usize,
}

struct LayerTape {
    inputs: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
    refs: Vec<Vec<f64>>,
    history: Vec<Vec<f64>>,
    out_dim: usize,
}

impl LayerTape {
    /// Reference at segment-local time `tau` (negative reaches into history).
    fn reference(&self, tau: isize, i: usize) -> f64 {
        if tau >= 0 {
            self.refs[tau as usize][i]
        } else {
            self.history
                .get((-tau - 1) as usize)
                .map_or(0.0, |r| r[i])
        }
    }
}

struct Tape {
    layers: Vec<LayerTape>,
    masks: Vec<Vec<f64>>,
    input_reference: Vec<f64>,
}

fn delta_update(value: &[f64], reference: &[f64], threshold: f64) -> Vec<f64> {
    value
        .iter()
        .zip(reference)
        .map(|(&v, &r)| {
            let d = v - r;
            if d != 0.0 && d.abs() >= threshold {
                v
            } else {
                r
            }
        })
        .collect()
}

fn run_network(net: &SdnnNetwork, weights: &[Vec<f64>], state: &StreamState, magnitudes: &[Vec<f64>]) -> Tape {
    let mut input_reference = state.input_reference.clone();
    let mut signal: Vec<Vec<f64>> = magnitudes
        .iter()
        .map(|x| {
            input_reference = delta_update(x, &input_reference, net.input_threshold());
            input_reference.clone()
        })
        .collect();
    let mut layers = Vec::with_capacity(net.layers().len());
    for ((layer, w), hist) in net.layers().iter().zip(weights).zip(&state.histories) {
        let (in_dim, out_dim) = (layer.in_dim(), layer.out_dim());
        let history: Vec<Vec<f64>> = hist.iter().cloned().collect();
        let mut prev = history.first().cloned().unwrap_or_else(|| vec![0.0; out_dim]);
        let mut pre = Vec::with_capacity(signal.len());
        let mut refs = Vec::with_capacity(signal.len());
        for u in &signal {
            let z: Vec<f64> = (0..out_dim)
                .map(|o| {
                    let row = &w[o * in_dim..(o + 1) * in_dim];
                    row.iter().zip(u).map(|(a, b)| a * b).sum()
                })
                .collect();
            let a: Vec<f64> = z.iter().map(|&v| v.max(0.0)).collect();
            prev = delta_update(&a, &prev, layer.threshold());
            pre.push(z);
            refs.push(prev.clone());
        }
        let tape = LayerTape {
            inputs: signal,
            pre,
            refs,
            history,
            out_dim,
        };
        signal = (0..tape.refs.len())
            .map(|t| {
                (0..out_dim)
                    .map(|i| tape.reference(t as isize - layer.delays()[i] as isize, i))
                    .collect()
            })
            .collect();
        layers.push(tape);
    }
    let masks = signal
        .into_iter()
        .map(|y| y.into_iter().map(|v| v.max(0.0)).collect())
        .collect();
    Tape {
        layers,
        masks,
        input_reference,
    }
}

fn commit(state: &mut StreamState, tape: &Tape) {
    state.input_reference = tape.input_reference.clone();
    for (hist, layer) in state.histories.iter_mut().zip(&tape.layers) {
        for r in &layer.refs {
            hist.push_front(r.clone());
        }
        hist.truncate(HISTORY_LEN);
    }
}

struct Decoded {
    estimate: Vec<f64>,
    target: Vec<f64>,
    mse: f64,
    // noisy spectra feeding each output frame (zero before the delay)
    sources: Vec<Vec<Complex64>>,
    source_mag: Vec<Vec<f64>>,
    clean_mag: Vec<Vec<f64>>,
}

/// Overlap-add normalization constant: mean of the summed squared window.
fn ola_norm(codec: &FrameCodec) -> f64 {
    codec.window().iter().map(|w| w * w).sum::<f64>() / codec.config().hop_length as f64
}

fn decode(codec: &FrameCodec, seg: &Segment<'_>, masks: &[Vec<f64>], delay: usize) -> Decoded {
    let cfg = codec.config();
    let bins = cfg.num_bins();
    let hop = cfg.hop_length;
    let n = cfg.window_length;
    let len = (masks.len() - 1) * hop + n;
    let norm = ola_norm(codec);
    let zero = vec![Complex64::new(0.0, 0.0); bins];
    let mut estimate = vec![0.0; len];
    let mut target = vec![0.0; len];
    let mut mse = 0.0;
    let mut sources = Vec::with_capacity(masks.len());
    let mut source_mag = Vec::with_capacity(masks.len());
    let mut clean_mag = Vec::with_capacity(masks.len());
    for (t, mask) in masks.iter().enumerate() {
        let k = seg.start + t;
        let (x, c) = match k.checked_sub(delay) {
            Some(src) => (&seg.noisy[src], &seg.clean[src]),
            None => (&zero, &zero),
        };
        let y: Vec<Complex64> = x.iter().zip(mask).map(|(xv, m)| xv * m).collect();
        let xm: Vec<f64> = x.iter().map(|v| v.norm()).collect();
        let cm: Vec<f64> = c.iter().map(|v| v.norm()).collect();
        for ((m, a), b) in mask.iter().zip(&xm).zip(&cm) {
            mse += (m * a - b).powi(2);
        }
        let est_frame = codec.synthesize(&y);
        let tgt_frame = codec.synthesize(c);
        for m in 0..n {
            estimate[t * hop + m] += est_frame[m] / norm;
            target[t * hop + m] += tgt_frame[m] / norm;
        }
        sources.push(x.clone());
        source_mag.push(xm);
        clean_mag.push(cm);
    }
    Decoded {
        estimate,
        target,
        mse: mse / (masks.len() * bins) as f64,
        sources,
        source_mag,
        clean_mag,
    }
}

const SI_SNR_EPS: f64 = 1e-12;

/// Smoothed SI-SNR and its gradient with respect to the estimate, or
/// `None` when the target carries no energy.
pub(crate) fn si_snr_with_grad(estimate: &[f64], target: &[f64]) -> Option<(f64, Vec<f64>)> {
    let n = estimate.len() as f64;
    let em = estimate.iter().sum::<f64>() / n;
    let tm = target.iter().sum::<f64>() / n;
    let est: Vec<f64> = estimate.iter().map(|v| v - em).collect();
    let tgt: Vec<f64> = target.iter().map(|v| v - tm).collect();
    let energy: f64 = tgt.iter().map(|v| v * v).sum();
    if energy < 1e-20 {
        return None;
    }
    let alpha = est.iter().zip(&tgt).map(|(a, b)| a * b).sum::<f64>() / energy;
    let resid: Vec<f64> = est.iter().zip(&tgt).map(|(e, t)| e - alpha * t).collect();
    let p = alpha * alpha * energy + SI_SNR_EPS;
    let q = resid.iter().map(|v| v * v).sum::<f64>() + SI_SNR_EPS;
    let value = 10.0 * (p / q).log10();
    let k = 10.0 / std::f64::consts::LN_10;
    let grad = tgt
        .iter()
        .zip(&resid)
        .map(|(t, e)| k * (2.0 * alpha * t / p - 2.0 * e / q))
        .collect();
    Some((value, grad))
}

fn segment_loss(dec: &Decoded, weights: &LossWeights) -> (f64, Option<Vec<f64>>) {
    let mut loss = weights.mse * dec.mse;
    let mut grad = None;
    if weights.si_snr != 0.0 {
        if let Some((v, g)) = si_snr_with_grad(&dec.estimate, &dec.target) {
            loss -= weights.si_snr * v;
            grad = Some(g.into_iter().map(|x| -weights.si_snr * x).collect());
        }
    }
    (loss, grad)
}

fn check_segment(net: &SdnnNetwork, codec: &FrameCodec, seg: &Segment<'_>) -> Result<(), TrainError> {
    let bins = codec.config().num_bins();
    if net.input_dim() != bins || net.output_dim() != bins {
        return Err(TrainError::Dimension(format!(
            "network {}->{} does not match {bins} STFT bins",
            net.input_dim(),
            net.output_dim()
        )));
    }
    if seg.len == 0 || seg.start + seg.len > seg.noisy.len() || seg.noisy.len() != seg.clean.len() {
        return Err(TrainError::Dimension(format!(
            "segment {}..{} outside {} frames",
            seg.start,
            seg.start + seg.len,
            seg.noisy.len()
        )));
    }
    Ok(())
}

fn magnitudes(seg: &Segment<'_>) -> Vec<Vec<f64>> {
    seg.noisy[seg.start..seg.start + seg.len]
        .iter()
        .map(|f| f.iter().map(|c| c.norm()).collect())
        .collect()
}

/// Loss of one segment without gradients; commits the recurrent state when
/// `commit_state` is set.
pub fn forward_loss(
    net: &SdnnNetwork,
    codec: &FrameCodec,
    state: &mut StreamState,
    seg: &Segment<'_>,
    weights: &LossWeights,
    commit_state: bool,
) -> Result<f64, TrainError> {
    check_segment(net, codec, seg)?;
    let w: Vec<Vec<f64>> = net.layers().iter().map(|l| l.weights().effective()).collect();
    let tape = run_network(net, &w, state, &magnitudes(seg));
    let dec = decode(codec, seg, &tape.masks, weights.net_delay_steps);
    if commit_state {
        commit(state, &tape);
    }
    Ok(segment_loss(&dec, weights).0)
}

/// Loss and parameter gradients of one segment; the recurrent state is
/// advanced past the segment.
pub fn forward_backward(
    net: &SdnnNetwork,
    codec: &FrameCodec,
    state: &mut StreamState,
    seg: &Segment<'_>,
    weights: &LossWeights,
) -> Result<(f64, Gradients), TrainError> {
    check_segment(net, codec, seg)?;
    let w: Vec<Vec<f64>> = net.layers().iter().map(|l| l.weights().effective()).collect();
    let tape = run_network(net, &w, state, &magnitudes(seg));
    let dec = decode(codec, seg, &tape.masks, weights.net_delay_steps);
    let (loss, audio_grad) = segment_loss(&dec, weights);
    commit(state, &tape);

    let cfg = codec.config();
    let (n, hop, bins) = (cfg.window_length, cfg.hop_length, cfg.num_bins());
    let norm = ola_norm(codec);
    let frames = tape.masks.len();
    let mse_scale = 2.0 * weights.mse / (frames * bins) as f64;
    let mut grad_y: Vec<Vec<f64>> = Vec::with_capacity(frames);
    for t in 0..frames {
        let mut g: Vec<f64> = (0..bins)
            .map(|f| {
                mse_scale
                    * (tape.masks[t][f] * dec.source_mag[t][f] - dec.clean_mag[t][f])
                    * dec.source_mag[t][f]
            })
            .collect();
        if let Some(ga) = &audio_grad {
            let h: Vec<f64> = (0..n)
                .map(|m| ga[t * hop + m] * codec.window()[m] / norm)
                .collect();
            let spectrum = codec.raw_forward(&h);
            for (f, gv) in g.iter_mut().enumerate() {
                let weight = if f == 0 || (n % 2 == 0 && f == n / 2) { 1.0 } else { 2.0 };
                *gv += weight / n as f64 * (dec.sources[t][f] * spectrum[f].conj()).re;
            }
        }
        grad_y.push(g);
    }

    let mut grads = Gradients::zeros(net);
    for (l, layer) in net.layers().iter().enumerate().rev() {
        let lt = &tape.layers[l];
        let (in_dim, out_dim) = (layer.in_dim(), layer.out_dim());
        let delays = layer.delays();
        let lg = &mut grads.layers[l];
        let mut grad_r = vec![vec![0.0; out_dim]; frames];
        for (t, gy) in grad_y.iter().enumerate() {
            for i in 0..out_dim {
                let tau = t as isize - isize::from(delays[i]);
                if tau >= 0 {
                    grad_r[tau as usize][i] += gy[i];
                }
                let slope = lt.reference(tau, i) - lt.reference(tau - 1, i);
                lg.delays[i] -= gy[i] * slope;
            }
        }
        let mut grad_u = vec![vec![0.0; in_dim]; frames];
        for t in 0..frames {
            for o in 0..out_dim {
                if lt.pre[t][o] <= 0.0 {
                    continue;
                }
                let gz = grad_r[t][o];
                if gz == 0.0 {
                    continue;
                }
                let row = &w[l][o * in_dim..(o + 1) * in_dim];
                let grow = &mut lg.weights[o * in_dim..(o + 1) * in_dim];
                for j in 0..in_dim {
                    grow[j] += gz * lt.inputs[t][j];
                    grad_u[t][j] += gz * row[j];
                }
            }
        }
        debug_assert_eq!(lt.out_dim, out_dim);
        grad_y = grad_u;
    }
    Ok((loss, grads))
}

/// Loss of explicit masks applied to a whole utterance.
#[cfg(test)]
pub(crate) fn masked_loss(
    codec: &FrameCodec,
    noisy: &[Vec<Complex64>],
    clean: &[Vec<Complex64>],
    masks: &[Vec<f64>],
    weights: &LossWeights,
) -> f64 {
    let seg = Segment {
        noisy,
        clean,
        start: 0,
        len: masks.len(),
    };
    segment_loss(&decode(codec, &seg, masks, weights.net_delay_steps), weights).0
}

/// Masks the unrolled graph produces for a segment (for consistency checks).
pub fn segment_masks(net: &SdnnNetwork, state: &StreamState, magnitudes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let w: Vec<Vec<f64>> = net.layers().iter().map(|l| l.weights().effective()).collect();
    run_network(net, &w, state, magnitudes).masks
}
