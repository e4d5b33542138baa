//! Deterministic synthesis of (clean, noise, noisy) training triples and the
//! JSON-lines manifest that indexes them.
//!
//! Every random choice for item `i` comes from an RNG seeded by
//! `hash(seed, i)`, so output does not depend on scheduling order.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use walkdir::WalkDir;

use crate::audio::{read_wav, rms, write_wav, AudioClip, AudioError, DEFAULT_SAMPLE_RATE_HZ};

/// Mixtures whose peak exceeds this are scaled down jointly.
pub const PEAK_LIMIT: f64 = 0.99;
pub const MANIFEST_FILE: &str = "manifest.jsonl";

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synthesis config: {0}")]
    InvalidConfig(String),
    #[error("no WAV files found under {0}")]
    EmptySource(String),
    #[error("{0} signal is silent (zero RMS)")]
    SilentInput(&'static str),
    #[error("clean and noise differ: {0}")]
    Mismatch(String),
    #[error("source {path} has sample rate {found} Hz, expected {expected} Hz")]
    SourceRate {
        path: String,
        found: u32,
        expected: u32,
    },
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("manifest {path} line {line}: {message}")]
    Manifest {
        path: String,
        line: usize,
        message: String,
    },
    #[error("index {index} out of range for manifest of {len} records")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("triple {index} is inconsistent: {message}")]
    Inconsistent { index: usize, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> SynthError + '_ {
    move |source| SynthError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub snr_db_min: f64,
    pub snr_db_max: f64,
    pub segment_s: f64,
    pub sample_rate_hz: u32,
    pub count: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            snr_db_min: -5.0,
            snr_db_max: 20.0,
            segment_s: 30.0,
            sample_rate_hz: DEFAULT_SAMPLE_RATE_HZ,
            count: 1,
            seed: 0,
        }
    }
}

impl SynthConfig {
    /// Full-scale corpus preset: 500 hours of 30-second segments.
    pub fn full_corpus(seed: u64) -> Self {
        Self {
            count: 60_000,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if !(self.snr_db_min <= self.snr_db_max) || !self.snr_db_min.is_finite() || !self.snr_db_max.is_finite() {
            return Err(SynthError::InvalidConfig(format!(
                "SNR range [{}, {}] is empty",
                self.snr_db_min, self.snr_db_max
            )));
        }
        if !(self.segment_s > 0.0) {
            return Err(SynthError::InvalidConfig("segment length must be positive".into()));
        }
        if self.count == 0 {
            return Err(SynthError::InvalidConfig("count must be at least 1".into()));
        }
        if self.sample_rate_hz == 0 {
            return Err(SynthError::InvalidConfig("sample rate must be positive".into()));
        }
        Ok(())
    }

    pub fn segment_len(&self) -> usize {
        (self.segment_s * f64::from(self.sample_rate_hz)).round() as usize
    }
}

/// Result of additive mixing: `noisy = clean + noise` holds exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct Mixture {
    pub clean: AudioClip,
    /// The noise after gain and normalization.
    pub noise: AudioClip,
    pub noisy: AudioClip,
    /// Noise gain that sets the target SNR.
    pub gain: f64,
    /// Joint anti-clipping scale (1 when no clipping risk).
    pub normalization: f64,
}

/// Mixes `clean` and `noise` at `target_snr_db` (plain RMS levels).
pub fn mix_at_snr(clean: &AudioClip, noise: &AudioClip, target_snr_db: f64) -> Result<Mixture, SynthError> {
    if clean.len() != noise.len() {
        return Err(SynthError::Mismatch(format!(
            "lengths {} and {}",
            clean.len(),
            noise.len()
        )));
    }
    if clean.sample_rate_hz() != noise.sample_rate_hz() {
        return Err(SynthError::Mismatch(format!(
            "sample rates {} and {}",
            clean.sample_rate_hz(),
            noise.sample_rate_hz()
        )));
    }
    let clean_rms = clean.rms();
    let noise_rms = noise.rms();
    if clean_rms == 0.0 {
        return Err(SynthError::SilentInput("clean"));
    }
    if noise_rms == 0.0 {
        return Err(SynthError::SilentInput("noise"));
    }
    let gain = clean_rms / noise_rms * 10f64.powf(-target_snr_db / 20.0);
    let peak = clean
        .samples()
        .iter()
        .zip(noise.samples())
        .fold(0.0f64, |m, (c, n)| m.max((c + gain * n).abs()));
    let normalization = if peak > PEAK_LIMIT { PEAK_LIMIT / peak } else { 1.0 };
    let rate = clean.sample_rate_hz();
    let scaled_clean: Vec<f64> = clean.samples().iter().map(|c| c * normalization).collect();
    let scaled_noise: Vec<f64> = noise
        .samples()
        .iter()
        .map(|n| n * gain * normalization)
        .collect();
    let noisy: Vec<f64> = scaled_clean.iter().zip(&scaled_noise).map(|(c, n)| c + n).collect();
    Ok(Mixture {
        clean: AudioClip::new(scaled_clean, rate)?,
        noise: AudioClip::new(scaled_noise, rate)?,
        noisy: AudioClip::new(noisy, rate)?,
        gain,
        normalization,
    })
}

/// SNR in dB between two signals from their RMS levels.
pub fn realized_snr_db(clean: &[f64], noise: &[f64]) -> f64 {
    20.0 * (rms(clean) / rms(noise)).log10()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureRecord {
    pub index: usize,
    pub clean_path: String,
    pub noise_path: String,
    pub noisy_path: String,
    pub clean_source_id: String,
    pub noise_source_id: String,
    pub snr_db: f64,
    pub gain_applied: f64,
    pub normalization: f64,
}

/// Records plus the directory their relative paths resolve against.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub root: PathBuf,
    pub records: Vec<MixtureRecord>,
}

impl Manifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, SynthError> {
        let path = path.as_ref();
        let file = File::open(path).map_err(io_err(path))?;
        let mut records = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(io_err(path))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: MixtureRecord = serde_json::from_str(&line).map_err(|e| SynthError::Manifest {
                path: path.display().to_string(),
                line: i + 1,
                message: e.to_string(),
            })?;
            records.push(rec);
        }
        Ok(Self {
            root: path.parent().map(Path::to_path_buf).unwrap_or_default(),
            records,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), SynthError> {
        let path = path.as_ref();
        let mut out = String::new();
        for rec in &self.records {
            out.push_str(&serde_json::to_string(rec).expect("record serializes"));
            out.push('\n');
        }
        let mut f = File::create(path).map_err(io_err(path))?;
        f.write_all(out.as_bytes()).map_err(io_err(path))
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn resolve(&self, relative: &str) -> PathBuf {
        self.root.join(relative)
    }

    /// Loads one triple, checking that the three clips agree in length and rate.
    pub fn load_triple(&self, index: usize) -> Result<Triple, SynthError> {
        let record = self
            .records
            .get(index)
            .ok_or(SynthError::IndexOutOfRange {
                index,
                len: self.records.len(),
            })?
            .clone();
        let clean = read_wav(self.resolve(&record.clean_path))?;
        let noise = read_wav(self.resolve(&record.noise_path))?;
        let noisy = read_wav(self.resolve(&record.noisy_path))?;
        if clean.len() != noise.len() || clean.len() != noisy.len() {
            return Err(SynthError::Inconsistent {
                index,
                message: format!(
                    "lengths clean={} noise={} noisy={}",
                    clean.len(),
                    noise.len(),
                    noisy.len()
                ),
            });
        }
        if clean.sample_rate_hz() != noise.sample_rate_hz() || clean.sample_rate_hz() != noisy.sample_rate_hz() {
            return Err(SynthError::Inconsistent {
                index,
                message: "sample rates differ".into(),
            });
        }
        Ok(Triple {
            clean,
            noise,
            noisy,
            record,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Triple {
    pub clean: AudioClip,
    pub noise: AudioClip,
    pub noisy: AudioClip,
    pub record: MixtureRecord,
}

/// Lists WAV files under `dir` as sorted `/`-separated relative ids.
pub fn list_sources(dir: &Path) -> Result<Vec<String>, SynthError> {
    let mut ids = Vec::new();
    for entry in WalkDir::new(dir).sort_by_file_name() {
        let entry = entry.map_err(|e| SynthError::Io {
            path: dir.display().to_string(),
            source: e.into(),
        })?;
        let p = entry.path();
        let is_wav = p
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("wav"));
        if entry.file_type().is_file() && is_wav {
            let rel = p.strip_prefix(dir).expect("walkdir stays under root");
            let id = rel
                .components()
                .map(|c| c.as_os_str().to_string_lossy())
                .collect::<Vec<_>>()
                .join("/");
            ids.push(id);
        }
    }
    if ids.is_empty() {
        return Err(SynthError::EmptySource(dir.display().to_string()));
    }
    Ok(ids)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-item RNG seed derived from the run seed and item index.
pub fn item_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index))
}

/// Cuts `len` samples starting at `offset`, wrapping around short sources.
fn cycle_crop(source: &[f64], offset: usize, len: usize) -> Vec<f64> {
    (0..len).map(|j| source[(offset + j) % source.len()]).collect()
}

fn pick_offset(rng: &mut ChaCha8Rng, source_len: usize, len: usize) -> usize {
    if source_len > len {
        rng.gen_range(0..=source_len - len)
    } else {
        rng.gen_range(0..source_len)
    }
}

fn load_source(dir: &Path, id: &str, rate: u32) -> Result<AudioClip, SynthError> {
    let path = dir.join(id);
    let clip = read_wav(&path)?;
    if clip.sample_rate_hz() != rate {
        return Err(SynthError::SourceRate {
            path: path.display().to_string(),
            found: clip.sample_rate_hz(),
            expected: rate,
        });
    }
    if clip.is_empty() {
        return Err(SynthError::SilentInput("source"));
    }
    Ok(clip)
}

/// Draws and mixes item `index` entirely in memory.
pub fn synthesize_item(
    cfg: &SynthConfig,
    clean_dir: &Path,
    clean_ids: &[String],
    noise_dir: &Path,
    noise_ids: &[String],
    index: usize,
) -> Result<(Mixture, MixtureRecord), SynthError> {
    let mut rng = ChaCha8Rng::seed_from_u64(item_seed(cfg.seed, index as u64));
    let len = cfg.segment_len();
    let clean_id = &clean_ids[rng.gen_range(0..clean_ids.len())];
    let noise_id = &noise_ids[rng.gen_range(0..noise_ids.len())];
    let snr_db = if cfg.snr_db_min == cfg.snr_db_max {
        cfg.snr_db_min
    } else {
        rng.gen_range(cfg.snr_db_min..=cfg.snr_db_max)
    };
    let clean_src = load_source(clean_dir, clean_id, cfg.sample_rate_hz)?;
    let noise_src = load_source(noise_dir, noise_id, cfg.sample_rate_hz)?;
    let clean_off = pick_offset(&mut rng, clean_src.len(), len);
    let noise_off = pick_offset(&mut rng, noise_src.len(), len);
    let clean = AudioClip::new(cycle_crop(clean_src.samples(), clean_off, len), cfg.sample_rate_hz)?;
    let noise = AudioClip::new(cycle_crop(noise_src.samples(), noise_off, len), cfg.sample_rate_hz)?;
    let mix = mix_at_snr(&clean, &noise, snr_db)?;
    let additive = mix
        .noisy
        .samples()
        .iter()
        .zip(mix.clean.samples().iter().zip(mix.noise.samples()))
        .all(|(y, (x, n))| *y == x + n);
    if !additive {
        return Err(SynthError::Inconsistent {
            index,
            message: "noisy != clean + noise before quantization".into(),
        });
    }
    let record = MixtureRecord {
        index,
        clean_path: format!("clean/clean_{index:05}.wav"),
        noise_path: format!("noise/noise_{index:05}.wav"),
        noisy_path: format!("noisy/noisy_{index:05}.wav"),
        clean_source_id: clean_id.clone(),
        noise_source_id: noise_id.clone(),
        snr_db,
        gain_applied: mix.gain,
        normalization: mix.normalization,
    };
    Ok((mix, record))
}

/// Writes `cfg.count` triples under `out_dir` and returns their manifest,
/// which is also saved as `out_dir/manifest.jsonl`.
pub fn synthesize_dataset(
    cfg: &SynthConfig,
    clean_dir: &Path,
    noise_dir: &Path,
    out_dir: &Path,
) -> Result<Manifest, SynthError> {
    cfg.validate()?;
    let clean_ids = list_sources(clean_dir)?;
    let noise_ids = list_sources(noise_dir)?;
    for sub in ["clean", "noise", "noisy"] {
        let d = out_dir.join(sub);
        fs::create_dir_all(&d).map_err(io_err(&d))?;
    }
    let records = (0..cfg.count)
        .into_par_iter()
        .map(|index| {
            let (mix, record) = synthesize_item(cfg, clean_dir, &clean_ids, noise_dir, &noise_ids, index)?;
            write_wav(&mix.clean, out_dir.join(&record.clean_path))?;
            write_wav(&mix.noise, out_dir.join(&record.noise_path))?;
            write_wav(&mix.noisy, out_dir.join(&record.noisy_path))?;
            Ok(record)
        })
        .collect::<Result<Vec<_>, SynthError>>()?;
    let manifest = Manifest {
        root: out_dir.to_path_buf(),
        records,
    };
    manifest.save(out_dir.join(MANIFEST_FILE))?;
    Ok(manifest)
}
