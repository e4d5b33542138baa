//! Synthetic stand-ins for speech and noise corpora.

#![allow(dead_code)]

use std::f64::consts::TAU;
use std::path::Path;

use ndns_core::{write_wav, AudioClip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const RATE: u32 = 16_000;

/// Voiced "syllables": harmonic stacks on a gliding pitch, shaped by two
/// formant peaks, separated by short pauses.
pub fn speech_like(seconds: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = (seconds * f64::from(RATE)) as usize;
    let mut out = vec![0.0; n];
    let mut pos = rng.gen_range(0..1600);
    while pos < n {
        let len = rng.gen_range(2400..5600).min(n - pos);
        let f0_start = rng.gen_range(95.0..230.0);
        let f0_end = f0_start * rng.gen_range(0.8..1.25);
        let formants = [rng.gen_range(300.0..900.0), rng.gen_range(1000.0..2600.0)];
        let level = rng.gen_range(0.05..0.2);
        let mut phase = 0.0;
        for i in 0..len {
            let frac = i as f64 / len as f64;
            let f0 = f0_start + (f0_end - f0_start) * frac;
            phase += TAU * f0 / f64::from(RATE);
            let env = (std::f64::consts::PI * frac).sin().powf(0.7);
            let mut s = 0.0;
            for k in 1..=24 {
                let f = f0 * k as f64;
                if f > 7000.0 {
                    break;
                }
                let gain: f64 = formants
                    .iter()
                    .map(|fc| 1.0 / (1.0 + ((f - fc) / 180.0).powi(2)))
                    .sum::<f64>()
                    + 0.05;
                s += gain * (phase * k as f64).sin();
            }
            out[pos + i] += level * env * s / 4.0;
        }
        pos += len + rng.gen_range(800..4000);
    }
    out
}

/// Stationary noise of one of four colours chosen by `kind`.
pub fn noise_like(seconds: f64, kind: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = (seconds * f64::from(RATE)) as usize;
    let mut white = || rng.gen_range(-1.0..1.0f64);
    let mut state = 0.0;
    let raw: Vec<f64> = match kind % 4 {
        0 => (0..n).map(|_| white()).collect(),
        1 => (0..n)
            .map(|_| {
                state = 0.97 * state + 0.03 * white();
                state * 8.0
            })
            .collect(),
        2 => (0..n)
            .map(|i| {
                let t = i as f64 / f64::from(RATE);
                (1..6).map(|h| (TAU * 60.0 * h as f64 * t).sin() / h as f64).sum::<f64>() * 0.5 + 0.3 * white()
            })
            .collect(),
        _ => {
            let mut prev = 0.0;
            (0..n)
                .map(|_| {
                    let w = white();
                    let hp = w - prev;
                    prev = w;
                    hp
                })
                .collect()
        }
    };
    let peak = raw.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    raw.into_iter().map(|v| 0.3 * v / peak).collect()
}

/// Writes `clean` and `noise` source folders for the synthesizer.
pub fn write_sources(root: &Path, clean_count: usize, noise_count: usize, seconds: f64, seed: u64) {
    let clean = root.join("clean_src");
    let noise = root.join("noise_src");
    std::fs::create_dir_all(&clean).unwrap();
    std::fs::create_dir_all(&noise).unwrap();
    for i in 0..clean_count {
        let clip = AudioClip::new(speech_like(seconds, seed * 1000 + i as u64), RATE).unwrap();
        write_wav(&clip, clean.join(format!("talker_{i:02}.wav"))).unwrap();
    }
    for i in 0..noise_count {
        let clip = AudioClip::new(noise_like(seconds, i, seed * 1000 + 500 + i as u64), RATE).unwrap();
        write_wav(&clip, noise.join(format!("noise_{i:02}.wav"))).unwrap();
    }
}

pub fn random_clip(len: usize, seed: u64) -> AudioClip {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    AudioClip::new((0..len).map(|_| rng.gen_range(-0.5..0.5)).collect(), RATE).unwrap()
}
