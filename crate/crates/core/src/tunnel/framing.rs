//! Stream framing for TCP transport: each wire packet is preceded by its
//! length as a 2-byte big-endian integer.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("packet of {0} bytes does not fit a 16-bit length prefix")]
pub struct FrameTooLarge(pub usize);

pub fn encode_frame(wire: &[u8]) -> Result<Vec<u8>, FrameTooLarge> {
    let len = u16::try_from(wire.len()).map_err(|_| FrameTooLarge(wire.len()))?;
    let mut out = Vec::with_capacity(2 + wire.len());
    out.extend_from_slice(&len.to_be_bytes());
    out.extend_from_slice(wire);
    Ok(out)
}

/// Reassembles length-prefixed packets from arbitrary stream chunks.
#[derive(Debug, Default)]
pub struct FrameDecoder {
    buf: Vec<u8>,
}

impl FrameDecoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, chunk: &[u8]) {
        self.buf.extend_from_slice(chunk);
    }

    pub fn next_frame(&mut self) -> Option<Vec<u8>> {
        if self.buf.len() < 2 {
            return None;
        }
        let len = u16::from_be_bytes([self.buf[0], self.buf[1]]) as usize;
        if self.buf.len() < 2 + len {
            return None;
        }
        let frame = self.buf[2..2 + len].to_vec();
        self.buf.drain(..2 + len);
        Some(frame)
    }

    pub fn buffered(&self) -> usize {
        self.buf.len()
    }
}
