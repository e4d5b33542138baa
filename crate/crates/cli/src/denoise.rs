use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::Args;
use ndns_core::sdnn::{denoise_with, load_model, ConstantMask, MaskSource, OpsCounter, SdnnNetwork};
use ndns_core::stft::{FrameCodec, StftConfig};
use ndns_core::synth::Manifest;
use ndns_core::{read_wav, write_wav};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::run_manifest::RunRecorder;
use crate::{CmdResult, Failure};

pub const OPS_FILE: &str = "ops.json";
pub const DEFAULT_NET_DELAY_STEPS: usize = 2;

/// Name of the enhanced clip written for manifest record `index`.
pub fn enhanced_name(index: usize) -> String {
    format!("enhanced_{index:05}.wav")
}

#[derive(Args, Debug)]
pub struct DenoiseArgs {
    /// Model file; not needed with --mask-bypass.
    #[arg(long, required_unless_present = "mask_bypass")]
    model: Option<PathBuf>,
    /// Single noisy WAV to process.
    #[arg(long, conflicts_with = "manifest", requires = "output")]
    input: Option<PathBuf>,
    #[arg(long, conflicts_with = "manifest")]
    output: Option<PathBuf>,
    /// Manifest whose noisy clips are all processed.
    #[arg(long, required_unless_present = "input", requires = "out_dir")]
    manifest: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Skip the network and apply a unit mask: the encode/decode-only path.
    #[arg(long)]
    mask_bypass: bool,
    /// Frames between an input frame and the output frame it masks
    /// (default 2 with a model, 0 with --mask-bypass).
    #[arg(long)]
    net_delay_steps: Option<usize>,
    /// Where to write the operation counts (single-file mode).
    #[arg(long)]
    ops_json: Option<PathBuf>,
    #[arg(long, default_value_t = 512)]
    window: usize,
    #[arg(long, default_value_t = 128)]
    hop: usize,
    #[arg(long, default_value_t = 16_000)]
    sample_rate: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelStats {
    pub weight_count: u64,
    pub param_count: u64,
    pub model_size_bytes: u64,
}

impl ModelStats {
    pub fn of(net: &SdnnNetwork) -> Self {
        Self {
            weight_count: net.weight_count(),
            param_count: net.count_params(),
            model_size_bytes: net.model_size_bytes(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtteranceOps {
    pub index: usize,
    #[serde(flatten)]
    pub ops: OpsCounter,
}

/// Operation counts and the settings that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpsReport {
    #[serde(flatten)]
    pub total: OpsCounter,
    pub mask_bypass: bool,
    pub net_delay_steps: usize,
    pub stft: StftConfig,
    pub model: Option<ModelStats>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub utterances: Vec<UtteranceOps>,
}

enum Masker {
    Network(SdnnNetwork),
    Bypass,
}

impl Masker {
    fn source(&self, bins: usize) -> Box<dyn MaskSource + '_> {
        match self {
            Masker::Network(net) => Box::new(net.stream()),
            Masker::Bypass => Box::new(ConstantMask { value: 1.0, dim: bins }),
        }
    }
}

fn process(codec: &FrameCodec, masker: &Masker, input: &Path, output: &Path, delay: usize) -> anyhow::Result<OpsCounter> {
    let noisy = read_wav(input)?;
    let (out, ops) = denoise_with(codec, masker.source(codec.config().num_bins()).as_mut(), &noisy, delay)
        .with_context(|| format!("denoising {}", input.display()))?;
    write_wav(&out, output)?;
    Ok(ops)
}

fn write_json(path: &Path, value: &impl Serialize) -> anyhow::Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)?).with_context(|| format!("cannot write {}", path.display()))
}

pub fn run(args: DenoiseArgs) -> CmdResult {
    let stft = StftConfig::new(args.window, args.hop, args.sample_rate).map_err(Failure::usage)?;
    let codec = FrameCodec::new(stft)?;
    if args.mask_bypass && args.model.is_some() {
        return Err(Failure::usage(anyhow!("--mask-bypass and --model are mutually exclusive")));
    }
    let masker = match &args.model {
        Some(p) => Masker::Network(load_model(p)?),
        None => Masker::Bypass,
    };
    if let Masker::Network(net) = &masker {
        if net.input_dim() != stft.num_bins() || net.output_dim() != stft.num_bins() {
            return Err(Failure::usage(anyhow!(
                "model is {}->{} but a {}-sample window has {} bins",
                net.input_dim(),
                net.output_dim(),
                stft.window_length,
                stft.num_bins()
            )));
        }
    }
    let delay = args
        .net_delay_steps
        .unwrap_or(if args.mask_bypass { 0 } else { DEFAULT_NET_DELAY_STEPS });
    let model = match &masker {
        Masker::Network(net) => Some(ModelStats::of(net)),
        Masker::Bypass => None,
    };
    let config = serde_json::json!({
        "model": args.model,
        "mask_bypass": args.mask_bypass,
        "net_delay_steps": delay,
        "stft": stft,
    });

    if let (Some(input), Some(output)) = (&args.input, &args.output) {
        let total = process(&codec, &masker, input, output, delay)?;
        let ops_path = args.ops_json.clone().unwrap_or_else(|| output.with_extension("ops.json"));
        let report = OpsReport {
            total,
            mask_bypass: args.mask_bypass,
            net_delay_steps: delay,
            stft,
            model,
            utterances: Vec::new(),
        };
        write_json(&ops_path, &report)?;
        println!("wrote {} and {}", output.display(), ops_path.display());
        return Ok(());
    }

    let manifest_path = args.manifest.as_ref().expect("clap enforces input or manifest");
    let out_dir = args.out_dir.as_ref().expect("clap enforces out_dir");
    let manifest = Manifest::load(manifest_path)?;
    std::fs::create_dir_all(out_dir).with_context(|| format!("cannot create {}", out_dir.display()))?;
    let mut rec = RunRecorder::start("denoise", &config);
    rec.input(manifest_path)?;
    if let Some(m) = &args.model {
        rec.input(m)?;
    }
    rec.phase("hash_inputs");
    let per: Vec<UtteranceOps> = manifest
        .records
        .par_iter()
        .map(|r| {
            let ops = process(
                &codec,
                &masker,
                &manifest.resolve(&r.noisy_path),
                &out_dir.join(enhanced_name(r.index)),
                delay,
            )?;
            Ok(UtteranceOps { index: r.index, ops })
        })
        .collect::<anyhow::Result<_>>()?;
    rec.phase("denoise");
    let mut total = OpsCounter::new(stft.timestep_s());
    for u in &per {
        total.merge(&u.ops);
        rec.output(out_dir.join(enhanced_name(u.index)));
    }
    let report = OpsReport {
        total,
        mask_bypass: args.mask_bypass,
        net_delay_steps: delay,
        stft,
        model,
        utterances: per,
    };
    write_json(&out_dir.join(OPS_FILE), &report)?;
    rec.output(out_dir.join(OPS_FILE));
    rec.finish(out_dir)?;
    println!("denoised {} clips into {}", manifest.len(), out_dir.display());
    Ok(())
}
