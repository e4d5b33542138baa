//! `ndns`: dataset synthesis, denoising, evaluation and training of
//! sigma-delta speech denoisers.

mod denoise;
mod eval;
mod model;
mod run_manifest;
mod synth;
mod train;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Process exit status paired with the error that caused it.
pub struct Failure {
    code: u8,
    error: anyhow::Error,
}

pub const EXIT_RUNTIME: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

impl Failure {
    /// Bad flags, flag combinations or configuration files.
    pub fn usage(error: impl Into<anyhow::Error>) -> Self {
        Self {
            code: EXIT_USAGE,
            error: error.into(),
        }
    }
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(error: E) -> Self {
        Self {
            code: EXIT_RUNTIME,
            error: error.into(),
        }
    }
}

pub type CmdResult = Result<(), Failure>;

#[derive(Parser, Debug)]
#[command(name = "ndns", version, about = "Neuromorphic speech denoising toolkit")]
struct Cli {
    /// Worker threads for per-utterance parallelism (default: all cores).
    #[arg(long, global = true, env = "NDNS_JOBS")]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Mix clean speech and noise into (clean, noise, noisy) triples.
    Synth(synth::SynthArgs),
    /// Denoise a WAV file or every noisy clip of a manifest.
    Denoise(denoise::DenoiseArgs),
    /// Score denoised outputs against a manifest and check the gates.
    Eval(eval::EvalArgs),
    /// Train a network on a manifest.
    Train(train::TrainArgs),
    /// Print parameter count, model size and topology of a model file.
    ModelInfo(model::ModelInfoArgs),
    /// Write a randomly initialized model file.
    Init(model::InitArgs),
}

fn run(cli: Cli) -> CmdResult {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(Failure::usage(anyhow::anyhow!("--jobs must be at least 1")));
        }
        rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global()?;
    }
    match cli.command {
        Command::Synth(a) => synth::run(a),
        Command::Denoise(a) => denoise::run(a),
        Command::Eval(a) => eval::run(a),
        Command::Train(a) => train::run(a),
        Command::ModelInfo(a) => model::info(a),
        Command::Init(a) => model::init(a),
    }
}

/// Joins the error chain, skipping causes already quoted by their parent.
fn describe(error: &anyhow::Error) -> String {
    let mut text = String::new();
    for cause in error.chain() {
        let msg = cause.to_string();
        if !text.contains(&msg) {
            if !text.is_empty() {
                text.push_str(": ");
            }
            text.push_str(&msg);
        }
    }
    text
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", describe(&f.error));
            ExitCode::from(f.code)
        }
    }
}

/// Reads a TOML config file; parse errors (with their location) are usage errors.
pub fn read_toml<T: serde::de::DeserializeOwned>(path: &PathBuf) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::usage(anyhow::anyhow!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Failure::usage(anyhow::anyhow!("invalid config {}: {e}", path.display())))
}
