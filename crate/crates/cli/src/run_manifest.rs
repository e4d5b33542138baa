use std::fs::File;
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::Context;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const RUN_MANIFEST_FILE: &str = "run.json";

#[derive(Debug, Serialize)]
pub struct InputHash {
    pub path: String,
    pub sha256: String,
}

/// Provenance record written once into every run directory.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub config: serde_json::Value,
    pub inputs: Vec<InputHash>,
    pub outputs: Vec<String>,
    pub started_unix_s: u64,
    pub wall_clock_s: f64,
    pub timings_s: Vec<(String, f64)>,
}

pub struct RunRecorder {
    manifest: RunManifest,
    start: Instant,
    phase_start: Instant,
}

pub fn sha256_file(path: &Path) -> anyhow::Result<String> {
    let mut reader = BufReader::new(File::open(path).with_context(|| format!("cannot open {}", path.display()))?);
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = reader.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(format!("{:x}", hasher.finalize()))
}

impl RunRecorder {
    pub fn start(command: &str, config: &impl Serialize) -> Self {
        let now = Instant::now();
        Self {
            manifest: RunManifest {
                command: command.into(),
                tool_version: env!("CARGO_PKG_VERSION").into(),
                config: serde_json::to_value(config).expect("config serializes"),
                inputs: Vec::new(),
                outputs: Vec::new(),
                started_unix_s: SystemTime::now()
                    .duration_since(UNIX_EPOCH)
                    .map(|d| d.as_secs())
                    .unwrap_or(0),
                wall_clock_s: 0.0,
                timings_s: Vec::new(),
            },
            start: now,
            phase_start: now,
        }
    }

    pub fn input(&mut self, path: &Path) -> anyhow::Result<()> {
        self.manifest.inputs.push(InputHash {
            path: path.display().to_string(),
            sha256: sha256_file(path)?,
        });
        Ok(())
    }

    pub fn output(&mut self, path: impl Into<PathBuf>) {
        self.manifest.outputs.push(path.into().display().to_string());
    }

    /// Closes the current timing phase under `name`.
    pub fn phase(&mut self, name: &str) {
        let now = Instant::now();
        self.manifest
            .timings_s
            .push((name.into(), (now - self.phase_start).as_secs_f64()));
        self.phase_start = now;
    }

    pub fn finish(mut self, dir: &Path) -> anyhow::Result<()> {
        self.manifest.wall_clock_s = self.start.elapsed().as_secs_f64();
        let path = dir.join(RUN_MANIFEST_FILE);
        let text = serde_json::to_string_pretty(&self.manifest)?;
        std::fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))
    }
}
