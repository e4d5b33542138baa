//! Epoch loop, validation, checkpoints and resumable state.

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::graph::{forward_backward, Gradients, Segment, StreamState};
use super::radam::{RadamState, StepKind};
use super::{ShadowParams, TrainConfig, TrainError};
use crate::metrics::{cap_db, si_snr};
use crate::sdnn::{denoise_with, save_model, SdnnNetwork, Weights};
use crate::stft::{stft_with, FrameCodec};
use crate::synth::{item_seed, Manifest};
use crate::AudioClip;

pub const CHECKPOINT_DIR: &str = "checkpoints";
pub const HISTORY_FILE: &str = "history.json";
pub const STATE_FILE: &str = "train_state.json";
pub const CONFIG_ECHO_FILE: &str = "train_config.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean loss over the optimizer steps of the epoch.
    pub train_loss: f64,
    pub val_si_snr_db: f64,
    pub val_noisy_si_snr_db: f64,
    pub val_si_snri_data_db: f64,
    pub steps: usize,
    pub skipped_steps: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub network: SdnnNetwork,
    pub history: TrainHistory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SavedState {
    config: TrainConfig,
    epochs_done: usize,
    shadow: ShadowParams,
    optimizer: RadamState,
    history: TrainHistory,
}

struct Session<'a> {
    manifest: &'a Manifest,
    cfg: TrainConfig,
    codec: FrameCodec,
    train_idx: Vec<usize>,
    val_idx: Vec<usize>,
    run_dir: Option<&'a Path>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> TrainError + '_ {
    move |source| TrainError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Trains `initial` on `manifest`. With a run directory, a checkpoint, the
/// history and the resumable state are written after every epoch.
pub fn train(
    initial: &SdnnNetwork,
    manifest: &Manifest,
    cfg: &TrainConfig,
    run_dir: Option<&Path>,
) -> Result<TrainOutcome, TrainError> {
    let session = Session::new(manifest, cfg, run_dir)?;
    let bins = cfg.stft.num_bins();
    if initial.input_dim() != bins || initial.output_dim() != bins {
        return Err(TrainError::Dimension(format!(
            "network {}->{} does not match {bins} STFT bins",
            initial.input_dim(),
            initial.output_dim()
        )));
    }
    if let Some(dir) = run_dir {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let echo = serde_json::to_string_pretty(cfg).expect("config serializes");
        let path = dir.join(CONFIG_ECHO_FILE);
        fs::write(&path, echo).map_err(io_err(&path))?;
    }
    let shadow = ShadowParams::from_network(initial);
    let optimizer = RadamState::new(shadow.flatten().len());
    let state = SavedState {
        config: cfg.clone(),
        epochs_done: 0,
        shadow,
        optimizer,
        history: TrainHistory::default(),
    };
    session.run(state, initial.clone())
}

/// Continues a run from the state saved in `run_dir`. Only `epochs` may
/// differ from the configuration the run started with.
pub fn resume(manifest: &Manifest, cfg: &TrainConfig, run_dir: &Path) -> Result<TrainOutcome, TrainError> {
    let path = run_dir.join(STATE_FILE);
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let mut state: SavedState = serde_json::from_str(&text).map_err(|e| TrainError::State {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let mut expected = state.config.clone();
    expected.epochs = cfg.epochs;
    if &expected != cfg {
        return Err(TrainError::ResumeMismatch(
            "configuration differs from the one the run started with".into(),
        ));
    }
    state.config = cfg.clone();
    let session = Session::new(manifest, cfg, Some(run_dir))?;
    let net = state.shadow.deploy()?;
    session.run(state, net)
}

/// Training and validation record indices: the last `fraction` of the
/// manifest validates. A single-record manifest validates on itself.
fn split(len: usize, fraction: f64) -> (Vec<usize>, Vec<usize>) {
    if len < 2 {
        return ((0..len).collect(), (0..len).collect());
    }
    let n_val = ((len as f64 * fraction).round() as usize).min(len - 1);
    if n_val == 0 {
        return ((0..len).collect(), (0..len).collect());
    }
    ((0..len - n_val).collect(), (len - n_val..len).collect())
}

struct Utterance {
    noisy: Vec<Vec<Complex64>>,
    clean: Vec<Vec<Complex64>>,
}

impl<'a> Session<'a> {
    fn new(manifest: &'a Manifest, cfg: &TrainConfig, run_dir: Option<&'a Path>) -> Result<Self, TrainError> {
        cfg.validate()?;
        if manifest.is_empty() {
            return Err(TrainError::EmptyManifest);
        }
        let (train_idx, val_idx) = split(manifest.len(), cfg.validation_fraction);
        Ok(Self {
            manifest,
            cfg: cfg.clone(),
            codec: FrameCodec::new(cfg.stft)?,
            train_idx,
            val_idx,
            run_dir,
        })
    }

    fn load(&self, index: usize) -> Result<(AudioClip, AudioClip), TrainError> {
        let t = self.manifest.load_triple(index)?;
        if t.noisy.sample_rate_hz() != self.cfg.stft.sample_rate_hz {
            return Err(TrainError::Dimension(format!(
                "record {index} is {} Hz, config expects {} Hz",
                t.noisy.sample_rate_hz(),
                self.cfg.stft.sample_rate_hz
            )));
        }
        Ok((t.noisy, t.clean))
    }

    fn utterance(&self, index: usize) -> Result<Utterance, TrainError> {
        let (noisy, clean) = self.load(index)?;
        Ok(Utterance {
            noisy: stft_with(&self.codec, &noisy)?.frames().to_vec(),
            clean: stft_with(&self.codec, &clean)?.frames().to_vec(),
        })
    }

    fn run(&self, mut state: SavedState, mut net: SdnnNetwork) -> Result<TrainOutcome, TrainError> {
        while state.epochs_done < self.cfg.epochs {
            let epoch = state.epochs_done;
            let mut order = self.train_idx.clone();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(item_seed(self.cfg.seed, epoch as u64)));
            let mut loss_sum = 0.0;
            let mut steps = 0usize;
            let mut skipped = 0usize;
            for batch in order.chunks(self.cfg.batch_size) {
                let utts = batch
                    .par_iter()
                    .map(|&i| self.utterance(i))
                    .collect::<Result<Vec<_>, _>>()?;
                let mut streams: Vec<StreamState> = utts.iter().map(|_| StreamState::new(&net)).collect();
                let longest = utts.iter().map(|u| u.noisy.len()).max().unwrap_or(0);
                let mut start = 0;
                while start < longest {
                    let results = utts
                        .par_iter()
                        .zip(streams.par_iter_mut())
                        .filter(|(u, _)| start < u.noisy.len())
                        .map(|(u, st)| {
                            let seg = Segment {
                                noisy: &u.noisy,
                                clean: &u.clean,
                                start,
                                len: self.cfg.bptt_len.min(u.noisy.len() - start),
                            };
                            forward_backward(&net, &self.codec, st, &seg, &self.cfg.loss_weights())
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    start += self.cfg.bptt_len;
                    let count = results.len() as f64;
                    let mut grads = Gradients::zeros(&net);
                    let mut step_loss = 0.0;
                    for (l, g) in &results {
                        step_loss += l;
                        grads.add_assign(g);
                    }
                    grads.scale(1.0 / count);
                    if let Some(clip) = self.cfg.grad_clip {
                        let norm = grads.norm();
                        if norm > clip {
                            grads.scale(clip / norm);
                        }
                    }
                    let mut values = state.shadow.flatten();
                    let flat: Vec<f64> = grads.iter().collect();
                    match state.optimizer.step(&mut values, &flat, self.cfg.learning_rate) {
                        StepKind::Skipped => skipped += 1,
                        _ => {
                            state.shadow.assign(&values);
                            net = state.shadow.deploy()?;
                            loss_sum += step_loss / count;
                            steps += 1;
                        }
                    }
                }
            }
            let (val_si_snr_db, val_noisy_si_snr_db) = self.validate(&net)?;
            state.history.epochs.push(EpochRecord {
                epoch,
                train_loss: if steps == 0 { f64::NAN } else { loss_sum / steps as f64 },
                val_si_snr_db,
                val_noisy_si_snr_db,
                val_si_snri_data_db: val_si_snr_db - val_noisy_si_snr_db,
                steps,
                skipped_steps: skipped,
            });
            state.epochs_done += 1;
            self.save(&state, &net)?;
        }
        Ok(TrainOutcome {
            network: net,
            history: state.history,
        })
    }

    /// Mean SI-SNR of the delay-aligned network output and of the noisy
    /// input, both against clean speech over the validation records.
    fn validate(&self, net: &SdnnNetwork) -> Result<(f64, f64), TrainError> {
        let shift = self.cfg.net_delay_steps * self.cfg.stft.hop_length;
        let scores = self
            .val_idx
            .par_iter()
            .map(|&i| {
                let (noisy, clean) = self.load(i)?;
                let (den, _) = denoise_with(&self.codec, &mut net.stream(), &noisy, self.cfg.net_delay_steps)?;
                let n = clean.len().saturating_sub(shift);
                if n == 0 {
                    return Err(TrainError::Dimension(format!("record {i} shorter than the network delay")));
                }
                let rate = clean.sample_rate_hz();
                let target = AudioClip::new(clean.samples()[..n].to_vec(), rate)?;
                let est = AudioClip::new(den.samples()[shift..shift + n].to_vec(), rate)?;
                let base = AudioClip::new(noisy.samples()[..n].to_vec(), rate)?;
                Ok((cap_db(si_snr(&est, &target)?), cap_db(si_snr(&base, &target)?)))
            })
            .collect::<Result<Vec<_>, TrainError>>()?;
        let n = scores.len() as f64;
        Ok((
            scores.iter().map(|s| s.0).sum::<f64>() / n,
            scores.iter().map(|s| s.1).sum::<f64>() / n,
        ))
    }

    fn save(&self, state: &SavedState, net: &SdnnNetwork) -> Result<(), TrainError> {
        let Some(dir) = self.run_dir else {
            return Ok(());
        };
        let ckpt_dir = dir.join(CHECKPOINT_DIR);
        fs::create_dir_all(&ckpt_dir).map_err(io_err(&ckpt_dir))?;
        if net.layers().iter().all(|l| matches!(l.weights(), Weights::Quantized { .. })) {
            save_model(net, checkpoint_path(dir, state.epochs_done))?;
        }
        let history = dir.join(HISTORY_FILE);
        let text = serde_json::to_string_pretty(&state.history).expect("history serializes");
        fs::write(&history, text).map_err(io_err(&history))?;
        // write-then-rename so an interrupted save never leaves a torn state
        let path = dir.join(STATE_FILE);
        let tmp = dir.join(format!("{STATE_FILE}.tmp"));
        fs::write(&tmp, serde_json::to_vec(state).expect("state serializes")).map_err(io_err(&tmp))?;
        fs::rename(&tmp, &path).map_err(io_err(&path))
    }
}

/// Path of the checkpoint written after `epochs_done` epochs.
pub fn checkpoint_path(run_dir: &Path, epochs_done: usize) -> PathBuf {
    run_dir.join(CHECKPOINT_DIR).join(format!("epoch_{epochs_done:04}.ndns"))
}
