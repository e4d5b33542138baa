use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::Args;
use ndns_core::metrics::{
    buffer_latency, cap_db, measure_codec_latency, network_lag_samples, power_proxy, qualification, si_snr,
    Dnsmos, EvalReport, LatencyBreakdown, MetricsError, Qualification, UtteranceScore,
};
use ndns_core::synth::Manifest;
use ndns_core::{read_wav, AudioClip};
use rayon::prelude::*;
use serde::Serialize;

use crate::denoise::{enhanced_name, OpsReport, OPS_FILE};
use crate::run_manifest::RunRecorder;
use crate::{CmdResult, Failure};

const ENCDEC_RUNS: usize = 100;

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Directory written by `denoise --manifest` with the network.
    #[arg(long)]
    denoised: PathBuf,
    /// Directory written by `denoise --manifest --mask-bypass`.
    #[arg(long)]
    bypass: PathBuf,
    /// Operation counts of the network run (default: <denoised>/ops.json).
    #[arg(long)]
    ops: Option<PathBuf>,
    /// JSON file with externally computed {ovrl, sig, bak} scores.
    #[arg(long)]
    dnsmos: Option<PathBuf>,
    /// Row label in the report.
    #[arg(long, default_value = "SDNN")]
    name: String,
    /// Directory for report.json, report.csv and run.json.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Print the report as JSON instead of a table.
    #[arg(long)]
    json: bool,
}

#[derive(Serialize)]
struct EvalOutput<'a> {
    report: &'a EvalReport,
    qualification: &'a Qualification,
}

/// Lag of `out` behind `clean` in samples; a silent output has no
/// correlation peak and is scored unshifted.
fn lag_of(clean: &AudioClip, out: &AudioClip) -> Result<usize, MetricsError> {
    match network_lag_samples(clean, out) {
        Err(MetricsError::DegenerateSignal) => Ok(0),
        r => r,
    }
}

/// SI-SNR of `out` against `clean` after removing `lag` samples of delay.
fn aligned_si_snr(out: &AudioClip, clean: &AudioClip, lag: usize) -> anyhow::Result<f64> {
    let n = clean.len().min(out.len()).saturating_sub(lag);
    if n == 0 {
        return Err(anyhow!("output shorter than its delay"));
    }
    let rate = clean.sample_rate_hz();
    let est = AudioClip::new(out.samples()[lag..lag + n].to_vec(), rate)?;
    let target = AudioClip::new(clean.samples()[..n].to_vec(), rate)?;
    Ok(cap_db(si_snr(&est, &target)?))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("cannot parse {}", path.display()))
}

pub fn run(args: EvalArgs) -> CmdResult {
    let manifest = Manifest::load(&args.manifest)?;
    if manifest.is_empty() {
        return Err(Failure::usage(anyhow!("manifest {} is empty", args.manifest.display())));
    }
    let ops_path = args.ops.clone().unwrap_or_else(|| args.denoised.join(OPS_FILE));
    let ops: OpsReport = read_json(&ops_path)?;
    let dnsmos: Option<Dnsmos> = args.dnsmos.as_deref().map(read_json).transpose()?;
    let mut rec = RunRecorder::start(
        "eval",
        &serde_json::json!({
            "denoised": args.denoised,
            "bypass": args.bypass,
            "name": args.name,
        }),
    );
    rec.input(&args.manifest)?;
    rec.input(&ops_path)?;

    let scores: Vec<UtteranceScore> = manifest
        .records
        .par_iter()
        .enumerate()
        .map(|(pos, r)| {
            let triple = manifest.load_triple(pos)?;
            let den = read_wav(args.denoised.join(enhanced_name(r.index)))?;
            let byp = read_wav(args.bypass.join(enhanced_name(r.index)))?;
            let lag = lag_of(&triple.clean, &den)?;
            let byp_lag = lag_of(&triple.clean, &byp)?;
            Ok(UtteranceScore {
                index: r.index,
                si_snr_db: aligned_si_snr(&den, &triple.clean, lag)?,
                noisy_si_snr_db: aligned_si_snr(&triple.noisy, &triple.clean, 0)?,
                encdec_si_snr_db: aligned_si_snr(&byp, &triple.clean, byp_lag)?,
                network_latency_s: lag as f64 / f64::from(triple.clean.sample_rate_hz()),
            })
        })
        .collect::<anyhow::Result<_>>()?;
    rec.phase("score");

    let n = scores.len() as f64;
    let mean = |f: fn(&UtteranceScore) -> f64| scores.iter().map(f).sum::<f64>() / n;
    let full = mean(|s| s.si_snr_db);
    let sample = manifest.load_triple(0)?.noisy;
    let encdec_s = measure_codec_latency(&ops.stft, &sample, ENCDEC_RUNS)?;
    rec.phase("encdec_latency");
    let latency = LatencyBreakdown::new(buffer_latency(&ops.stft), encdec_s, mean(|s| s.network_latency_s));
    let power = power_proxy(&ops.total)?;
    let model = ops.model.unwrap_or(crate::denoise::ModelStats {
        weight_count: 0,
        param_count: 0,
        model_size_bytes: 0,
    });
    let mut report = EvalReport::new(
        args.name.clone(),
        full,
        full - mean(|s| s.noisy_si_snr_db),
        full - mean(|s| s.encdec_si_snr_db),
        latency,
        power,
        model.weight_count,
        model.model_size_bytes,
    );
    report.dnsmos = dnsmos;
    report.utterances = scores;
    let qual = qualification(&report);

    let output = EvalOutput {
        report: &report,
        qualification: &qual,
    };
    if args.json {
        println!("{}", serde_json::to_string_pretty(&output)?);
    } else {
        print!("{}", report.to_table());
        if qual.passed {
            println!("qualification: PASS");
        } else {
            println!("qualification: FAIL");
            for f in &qual.failures {
                println!("  - {f}");
            }
        }
    }
    if let Some(dir) = &args.out_dir {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        let json_path = dir.join("report.json");
        std::fs::write(&json_path, serde_json::to_string_pretty(&output)?)?;
        let csv_path = dir.join("report.csv");
        std::fs::write(&csv_path, report.to_csv()?)?;
        rec.output(json_path);
        rec.output(csv_path);
        rec.finish(dir)?;
    }
    Ok(())
}
