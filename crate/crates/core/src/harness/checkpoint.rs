//! Encoder weights on disk: the 8-byte magic, a u32 LE header length, a JSON
//! header describing the layer shapes, then every weight matrix as row-major
//! f32 LE values.

use std::fs;
use std::path::Path;

use super::HarnessError;
use crate::diffmath::DenseMatrix;
use crate::encoder::EncoderParams;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"NS4GCKPT";
const CHECKPOINT_VERSION: u32 = 1;

#[derive(serde::Serialize, serde::Deserialize)]
struct Header {
    format_version: u32,
    layers: Vec<(usize, usize)>,
}

pub fn save_checkpoint(path: &Path, params: &EncoderParams) -> Result<(), HarnessError> {
    let header = Header {
        format_version: CHECKPOINT_VERSION,
        layers: params.weights.iter().map(|w| w.shape()).collect(),
    };
    let json = serde_json::to_vec(&header)?;
    let mut bytes = Vec::with_capacity(12 + json.len());
    bytes.extend_from_slice(CHECKPOINT_MAGIC);
    bytes.extend_from_slice(&(json.len() as u32).to_le_bytes());
    bytes.extend_from_slice(&json);
    for w in &params.weights {
        bytes.extend(w.data().iter().flat_map(|&v| (v as f32).to_le_bytes()));
    }
    fs::write(path, bytes).map_err(|e| HarnessError::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<EncoderParams, HarnessError> {
    let bytes = fs::read(path).map_err(|e| HarnessError::io(path, e))?;
    let bad = |m: &str| HarnessError::Checkpoint(format!("{}: {m}", path.display()));
    if bytes.len() < 12 || &bytes[..8] != CHECKPOINT_MAGIC {
        return Err(bad("missing magic"));
    }
    let header_len = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
    let body_start = 12 + header_len;
    let header: Header = serde_json::from_slice(bytes.get(12..body_start).ok_or_else(|| bad("truncated header"))?)?;
    if header.format_version != CHECKPOINT_VERSION {
        return Err(bad(&format!("unsupported version {}", header.format_version)));
    }
    let expected: usize = header.layers.iter().map(|(r, c)| r * c * 4).sum();
    if bytes.len() - body_start != expected {
        return Err(bad("weight payload size"));
    }
    let mut values = bytes[body_start..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64);
    let weights = header
        .layers
        .iter()
        .map(|&(r, c)| {
            DenseMatrix::from_vec(r, c, values.by_ref().take(r * c).collect())
                .map_err(|e| bad(&e.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EncoderParams { weights })
}
