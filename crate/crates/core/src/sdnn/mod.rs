//! Sigma-delta ReLU denoising network with axonal delays.

mod delta;
mod layer;
mod model_file;
mod network;
mod ops;
pub mod quant;

use thiserror::Error;

pub use delta::{DeltaEncoder, SigmaDecoder, SparseEvents};
pub use layer::{LayerState, SdnnLayer, Weights, MAX_DELAY};
pub use model_file::{from_bytes, load_model, save_model, to_bytes, FORMAT_VERSION, MAGIC};
pub use network::{
    denoise, denoise_with, ConstantMask, MaskSource, NetworkState, SdnnNetwork, SdnnStream,
    Topology, DELAY_BITS, THRESHOLD_BITS,
};
pub use ops::OpsCounter;

use crate::stft::StftError;

#[derive(Debug, Error)]
pub enum SdnnError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid layer: {0}")]
    InvalidLayer(String),
    #[error("not an NDNS model file (bad magic)")]
    BadMagic,
    #[error("model format version {found} is newer than supported version {supported}")]
    UnsupportedVersion { found: u16, supported: u16 },
    #[error("model file truncated at byte {offset} (needed {wanted} more)")]
    Truncated { offset: usize, wanted: usize },
    #[error("model format error: {0}")]
    Format(String),
    #[error("layer {layer} has full-precision weights; quantize before saving")]
    Unquantized { layer: usize },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Stft(#[from] StftError),
}
