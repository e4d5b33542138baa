//! Binary model format.
//!
//! ```text
//! magic "NDNS" | version u16 | layer count u16 | input threshold f64
//! per layer: in u32 | out u32 | weight_bits u8 | scale_exp i8
//!            | weights i8[out*in] row-major | delays u8[out] | threshold f64
//! ```
//! All multi-byte fields are little-endian.

use std::path::Path;

use super::layer::{SdnnLayer, Weights};
use super::network::SdnnNetwork;
use super::SdnnError;

pub const MAGIC: &[u8; 4] = b"NDNS";
pub const FORMAT_VERSION: u16 = 1;

pub fn to_bytes(net: &SdnnNetwork) -> Result<Vec<u8>, SdnnError> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    let count = u16::try_from(net.layers().len())
        .map_err(|_| SdnnError::Format("too many layers".into()))?;
    out.extend_from_slice(&count.to_le_bytes());
    out.extend_from_slice(&net.input_threshold().to_le_bytes());
    for (i, layer) in net.layers().iter().enumerate() {
        let Weights::Quantized {
            codes,
            bits,
            scale_exp,
        } = layer.weights()
        else {
            return Err(SdnnError::Unquantized { layer: i });
        };
        out.extend_from_slice(&(layer.in_dim() as u32).to_le_bytes());
        out.extend_from_slice(&(layer.out_dim() as u32).to_le_bytes());
        out.push(*bits);
        out.push(*scale_exp as u8);
        out.extend(codes.iter().map(|&c| c as u8));
        out.extend_from_slice(layer.delays());
        out.extend_from_slice(&layer.threshold().to_le_bytes());
    }
    Ok(out)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], SdnnError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or(
            SdnnError::Truncated {
                offset: self.pos,
                wanted: n,
            },
        )?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, SdnnError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, SdnnError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, SdnnError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, SdnnError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn from_bytes(buf: &[u8]) -> Result<SdnnNetwork, SdnnError> {
    let mut r = Reader { buf, pos: 0 };
    let magic = r.take(4).map_err(|_| SdnnError::BadMagic)?;
    if magic != MAGIC {
        return Err(SdnnError::BadMagic);
    }
    let version = r.u16()?;
    if version != FORMAT_VERSION {
        return Err(SdnnError::UnsupportedVersion {
            found: version,
            supported: FORMAT_VERSION,
        });
    }
    let count = r.u16()?;
    let input_threshold = r.f64()?;
    let mut layers = Vec::with_capacity(usize::from(count));
    for _ in 0..count {
        let in_dim = r.u32()? as usize;
        let out_dim = r.u32()? as usize;
        let bits = r.u8()?;
        let scale_exp = r.u8()? as i8;
        let n = in_dim
            .checked_mul(out_dim)
            .ok_or_else(|| SdnnError::Format("layer size overflow".into()))?;
        let codes = r.take(n)?.iter().map(|&b| b as i8).collect();
        let delays = r.take(out_dim)?.to_vec();
        let threshold = r.f64()?;
        layers.push(SdnnLayer::new(
            in_dim,
            out_dim,
            Weights::Quantized {
                codes,
                bits,
                scale_exp,
            },
            delays,
            threshold,
        )?);
    }
    if r.pos != buf.len() {
        return Err(SdnnError::Format(format!(
            "{} trailing bytes after last layer",
            buf.len() - r.pos
        )));
    }
    SdnnNetwork::new(input_threshold, layers)
}

pub fn save_model(net: &SdnnNetwork, path: impl AsRef<Path>) -> Result<(), SdnnError> {
    let bytes = to_bytes(net)?;
    std::fs::write(path.as_ref(), bytes).map_err(|source| SdnnError::Io {
        path: path.as_ref().display().to_string(),
        source,
    })
}

pub fn load_model(path: impl AsRef<Path>) -> Result<SdnnNetwork, SdnnError> {
    let bytes = std::fs::read(path.as_ref()).map_err(|source| SdnnError::Io {
        path: path.as_ref().display().to_string(),
        source,
    })?;
    from_bytes(&bytes)
}
