//! Per-packet body compression with stored-raw fallback.
//!
//! A compressed body is `original_len(2, big-endian) || lz4 block`. It is only
//! emitted when strictly shorter than the input; anything else travels raw.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest body the compressor accepts; bigger inputs always travel raw.
pub const MAX_INPUT_LEN: usize = 65535;
const LEN_PREFIX: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompFlag {
    Raw,
    Compressed,
}

impl CompFlag {
    pub fn to_byte(self) -> u8 {
        match self {
            CompFlag::Raw => 0x00,
            CompFlag::Compressed => 0x01,
        }
    }

    pub fn from_byte(b: u8) -> Option<Self> {
        match b {
            0x00 => Some(CompFlag::Raw),
            0x01 => Some(CompFlag::Compressed),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompressedBody {
    pub flag: CompFlag,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum DecompressError {
    #[error("malformed compressed stream")]
    Malformed,
    #[error("decompressed size {0} exceeds cap {1}")]
    ExceedsCap(usize, usize),
}

pub fn compress_body(body: &[u8]) -> CompressedBody {
    if body.is_empty() || body.len() > MAX_INPUT_LEN {
        return CompressedBody { flag: CompFlag::Raw, bytes: body.to_vec() };
    }
    let block = lz4_flex::block::compress(body);
    if LEN_PREFIX + block.len() >= body.len() {
        return CompressedBody { flag: CompFlag::Raw, bytes: body.to_vec() };
    }
    let mut bytes = Vec::with_capacity(LEN_PREFIX + block.len());
    bytes.extend_from_slice(&(body.len() as u16).to_be_bytes());
    bytes.extend_from_slice(&block);
    CompressedBody { flag: CompFlag::Compressed, bytes }
}

pub fn decompress_body(flag: CompFlag, bytes: &[u8], cap: usize) -> Result<Vec<u8>, DecompressError> {
    match flag {
        CompFlag::Raw => Ok(bytes.to_vec()),
        CompFlag::Compressed => {
            if bytes.len() <= LEN_PREFIX {
                return Err(DecompressError::Malformed);
            }
            let declared = u16::from_be_bytes([bytes[0], bytes[1]]) as usize;
            if declared > cap {
                return Err(DecompressError::ExceedsCap(declared, cap));
            }
            let mut out = vec![0u8; declared];
            let n = lz4_flex::block::decompress_into(&bytes[LEN_PREFIX..], &mut out)
                .map_err(|_| DecompressError::Malformed)?;
            if n != declared {
                return Err(DecompressError::Malformed);
            }
            Ok(out)
        }
    }
}
