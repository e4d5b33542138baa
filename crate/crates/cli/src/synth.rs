use std::path::PathBuf;

use clap::Args;
use ndns_core::synth::{list_sources, synthesize_dataset, SynthConfig, MANIFEST_FILE};

use crate::run_manifest::RunRecorder;
use crate::{read_toml, CmdResult, Failure};

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Directory of clean speech WAV files (searched recursively).
    #[arg(long)]
    clean_dir: PathBuf,
    /// Directory of noise WAV files (searched recursively).
    #[arg(long)]
    noise_dir: PathBuf,
    /// Output directory for the triples and manifest.
    #[arg(long)]
    out: PathBuf,
    /// TOML file with synthesis settings; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Length of each triple in seconds.
    #[arg(long)]
    segment_s: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    snr_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    snr_max: Option<f64>,
}

pub fn run(args: SynthArgs) -> CmdResult {
    let mut cfg: SynthConfig = match &args.config {
        Some(p) => read_toml(p)?,
        None => SynthConfig::default(),
    };
    if let Some(v) = args.count {
        cfg.count = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.segment_s {
        cfg.segment_s = v;
    }
    if let Some(v) = args.snr_min {
        cfg.snr_db_min = v;
    }
    if let Some(v) = args.snr_max {
        cfg.snr_db_max = v;
    }
    cfg.validate().map_err(Failure::usage)?;

    let mut rec = RunRecorder::start("synth", &cfg);
    for dir in [&args.clean_dir, &args.noise_dir] {
        for id in list_sources(dir)? {
            rec.input(&dir.join(id))?;
        }
    }
    rec.phase("hash_inputs");
    let manifest = synthesize_dataset(&cfg, &args.clean_dir, &args.noise_dir, &args.out)?;
    rec.phase("synthesize");
    rec.output(args.out.join(MANIFEST_FILE));
    for r in &manifest.records {
        for p in [&r.clean_path, &r.noise_path, &r.noisy_path] {
            rec.output(args.out.join(p));
        }
    }
    rec.finish(&args.out)?;
    println!(
        "wrote {} triples to {}",
        manifest.len(),
        args.out.join(MANIFEST_FILE).display()
    );
    Ok(())
}
