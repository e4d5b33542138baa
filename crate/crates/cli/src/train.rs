use std::path::PathBuf;

use anyhow::{anyhow, Context};
use clap::Args;
use ndns_core::sdnn::{load_model, save_model, SdnnNetwork, Topology};
use ndns_core::synth::Manifest;
use ndns_core::train::{resume, train, TrainConfig, HISTORY_FILE, STATE_FILE};

use crate::model::parse_dims;
use crate::run_manifest::RunRecorder;
use crate::{read_toml, CmdResult, Failure};

pub const FINAL_MODEL_FILE: &str = "model.ndns";

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Run directory for checkpoints, history and the final model.
    #[arg(long)]
    run_dir: PathBuf,
    /// TOML training config; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Start from this model instead of a random one.
    #[arg(long, conflicts_with = "dims")]
    init: Option<PathBuf>,
    /// Layer sizes of a fresh network, e.g. 257,64,64,257.
    #[arg(long)]
    dims: Option<String>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Continue the run saved in --run-dir.
    #[arg(long, conflicts_with = "init")]
    resume: bool,
}

pub fn run(args: TrainArgs) -> CmdResult {
    let mut cfg: TrainConfig = match &args.config {
        Some(p) => read_toml(p)?,
        None => TrainConfig::default(),
    };
    if let Some(v) = args.epochs {
        cfg.epochs = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.learning_rate {
        cfg.learning_rate = v;
    }
    cfg.validate().map_err(Failure::usage)?;
    let manifest = Manifest::load(&args.manifest)?;
    if manifest.is_empty() {
        return Err(Failure::usage(anyhow!("manifest {} is empty", args.manifest.display())));
    }
    std::fs::create_dir_all(&args.run_dir).with_context(|| format!("cannot create {}", args.run_dir.display()))?;

    let mut rec = RunRecorder::start("train", &cfg);
    rec.input(&args.manifest)?;
    let outcome = if args.resume {
        if !args.run_dir.join(STATE_FILE).exists() {
            return Err(Failure::usage(anyhow!(
                "nothing to resume: {} has no {STATE_FILE}",
                args.run_dir.display()
            )));
        }
        resume(&manifest, &cfg, &args.run_dir)?
    } else {
        let initial = match (&args.init, &args.dims) {
            (Some(p), _) => {
                rec.input(p)?;
                load_model(p)?
            }
            (None, dims) => {
                let dims = match dims {
                    Some(d) => parse_dims(d).map_err(Failure::usage)?,
                    None => Topology::default().dims,
                };
                let topo = Topology {
                    dims,
                    ..Topology::default()
                };
                SdnnNetwork::random(&topo, cfg.seed).map_err(Failure::usage)?
            }
        };
        train(&initial, &manifest, &cfg, Some(&args.run_dir))?
    };
    rec.phase("train");
    let model_path = args.run_dir.join(FINAL_MODEL_FILE);
    save_model(&outcome.network, &model_path)?;
    rec.output(&model_path);
    rec.output(args.run_dir.join(HISTORY_FILE));
    rec.finish(&args.run_dir)?;
    for e in &outcome.history.epochs {
        println!(
            "epoch {:>3}  loss {:>9.4}  val SI-SNR {:>7.2} dB  SI-SNRi {:>6.2} dB",
            e.epoch, e.train_loss, e.val_si_snr_db, e.val_si_snri_data_db
        );
    }
    println!("wrote {}", model_path.display());
    Ok(())
}
