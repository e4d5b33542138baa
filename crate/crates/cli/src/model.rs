use std::path::PathBuf;

use anyhow::anyhow;
use clap::Args;
use ndns_core::sdnn::{load_model, save_model, SdnnNetwork, Topology, Weights};
use serde::Serialize;

use crate::{read_toml, CmdResult, Failure};

#[derive(Args, Debug)]
pub struct ModelInfoArgs {
    model: PathBuf,
    /// Emit JSON instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
pub struct InitArgs {
    /// Output model file.
    #[arg(long)]
    out: PathBuf,
    /// TOML topology file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Layer sizes, input first, e.g. 257,512,512,257.
    #[arg(long)]
    dims: Option<String>,
    #[arg(long)]
    weight_bits: Option<u8>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Serialize)]
struct ModelInfo {
    dims: Vec<usize>,
    params: u64,
    delays: u64,
    thresholds: u64,
    total_params: u64,
    weight_bits: Vec<u8>,
    model_size_bytes: u64,
    max_delay: u8,
    input_threshold: f64,
    layer_thresholds: Vec<f64>,
}

pub fn parse_dims(text: &str) -> anyhow::Result<Vec<usize>> {
    let dims = text
        .split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|e| anyhow!("bad layer size {t:?}: {e}")))
        .collect::<anyhow::Result<Vec<_>>>()?;
    if dims.len() < 2 || dims.contains(&0) {
        return Err(anyhow!("need at least two nonzero layer sizes"));
    }
    Ok(dims)
}

fn describe(net: &SdnnNetwork) -> ModelInfo {
    let layers = net.layers();
    ModelInfo {
        dims: net.dims(),
        params: net.weight_count(),
        delays: layers.iter().map(|l| l.delays().len() as u64).sum(),
        thresholds: layers.len() as u64,
        total_params: net.count_params(),
        weight_bits: layers.iter().map(|l| l.weights().bits()).collect(),
        model_size_bytes: net.model_size_bytes(),
        max_delay: layers.iter().map(|l| l.max_delay()).max().unwrap_or(0),
        input_threshold: net.input_threshold(),
        layer_thresholds: layers.iter().map(|l| l.threshold()).collect(),
    }
}

pub fn info(args: ModelInfoArgs) -> CmdResult {
    let net = load_model(&args.model)?;
    let i = describe(&net);
    if args.json {
        println!("{}", serde_json::to_string_pretty(&i)?);
        return Ok(());
    }
    let dims: Vec<String> = i.dims.iter().map(ToString::to_string).collect();
    println!("topology: {}", dims.join(" -> "));
    println!("params: {}", i.params);
    println!("delays: {}", i.delays);
    println!("thresholds: {}", i.thresholds);
    println!("total parameters: {}", i.total_params);
    let bits: Vec<String> = i.weight_bits.iter().map(ToString::to_string).collect();
    println!("weight bits: {}", bits.join(", "));
    println!("model size: {} bytes ({:.0} kB)", i.model_size_bytes, i.model_size_bytes as f64 / 1e3);
    println!("max delay: {}", i.max_delay);
    Ok(())
}

pub fn init(args: InitArgs) -> CmdResult {
    let mut topo: Topology = match &args.config {
        Some(p) => read_toml(p)?,
        None => Topology::default(),
    };
    if let Some(d) = &args.dims {
        topo.dims = parse_dims(d).map_err(Failure::usage)?;
    }
    if let Some(b) = args.weight_bits {
        topo.weight_bits = Some(b);
    }
    if let Some(t) = args.threshold {
        topo.threshold = t;
    }
    if topo.weight_bits.is_none() {
        return Err(Failure::usage(anyhow!("model files store quantized weights; set weight_bits")));
    }
    let net = SdnnNetwork::random(&topo, args.seed).map_err(Failure::usage)?;
    debug_assert!(net.layers().iter().all(|l| matches!(l.weights(), Weights::Quantized { .. })));
    save_model(&net, &args.out)?;
    println!("wrote {} ({} weights)", args.out.display(), net.weight_count());
    Ok(())
}
