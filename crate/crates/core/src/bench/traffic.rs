//! Constant-bit-rate frame schedules.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::{L2_OVERHEAD, MIN_FRAME_BYTES};

pub const MAX_FRAME_BYTES: u32 = 1518;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeaderKind {
    UdpLike,
    TcpLike,
}

impl HeaderKind {
    pub fn name(self) -> &'static str {
        match self {
            HeaderKind::UdpLike => "udp_like",
            HeaderKind::TcpLike => "tcp_like",
        }
    }

    /// IPv4 + transport header bytes at the front of every payload.
    pub fn header_len(self) -> usize {
        match self {
            HeaderKind::UdpLike => 28,
            HeaderKind::TcpLike => 40,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Fill {
    Zeros,
    Increment,
    Random { seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficSpec {
    pub header_kind: HeaderKind,
    /// Full layer-2 frame, FCS included.
    pub frame_bytes: u32,
    pub offered_bps: f64,
    pub duration_s: f64,
    pub fill: Fill,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecError {
    #[error("offered rate must be positive, got {0}")]
    Rate(f64),
    #[error("frame size {0} outside {MIN_FRAME_BYTES}..={MAX_FRAME_BYTES}")]
    FrameSize(u32),
    #[error("duration must be positive, got {0}")]
    Duration(f64),
}

impl TrafficSpec {
    pub fn validate(&self) -> Result<(), SpecError> {
        if !(self.offered_bps > 0.0 && self.offered_bps.is_finite()) {
            return Err(SpecError::Rate(self.offered_bps));
        }
        if !(MIN_FRAME_BYTES..=MAX_FRAME_BYTES).contains(&self.frame_bytes) {
            return Err(SpecError::FrameSize(self.frame_bytes));
        }
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return Err(SpecError::Duration(self.duration_s));
        }
        Ok(())
    }

    pub fn with_rate(&self, offered_bps: f64) -> Self {
        Self { offered_bps, ..self.clone() }
    }

    /// Layer-3 packet length carried by one frame.
    pub fn payload_len(&self) -> usize {
        self.frame_bytes as usize - L2_OVERHEAD
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameSchedule {
    spec: TrafficSpec,
    count: u64,
    gap_s: f64,
}

pub fn generate_stream(spec: &TrafficSpec) -> Result<FrameSchedule, SpecError> {
    spec.validate()?;
    let bits = 8.0 * f64::from(spec.frame_bytes);
    // tolerate representation error when the product is a whole number
    let count = (spec.duration_s * spec.offered_bps / bits * (1.0 + 1e-12)).floor() as u64;
    Ok(FrameSchedule { spec: spec.clone(), count, gap_s: bits / spec.offered_bps })
}

const SRC_ADDR: [u8; 4] = [20, 20, 20, 1];
const DST_ADDR: [u8; 4] = [20, 20, 20, 2];
const SRC_PORT: u16 = 5001;
const DST_PORT: u16 = 5002;

impl FrameSchedule {
    pub fn spec(&self) -> &TrafficSpec {
        &self.spec
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn gap_s(&self) -> f64 {
        self.gap_s
    }

    pub fn tx_time(&self, seq: u64) -> f64 {
        seq as f64 * self.gap_s
    }

    /// Layer-3 image of frame `seq`: header stamp followed by the fill.
    pub fn payload(&self, seq: u64) -> Vec<u8> {
        let len = self.spec.payload_len();
        let kind = self.spec.header_kind;
        let mut p = vec![0u8; len];
        let hlen = kind.header_len().min(len);
        let mut hdr = [0u8; 40];
        write_header(&mut hdr, kind, len, seq);
        p[..hlen].copy_from_slice(&hdr[..hlen]);
        let body = &mut p[hlen..];
        match self.spec.fill {
            Fill::Zeros => {}
            Fill::Increment => body.iter_mut().enumerate().for_each(|(i, b)| *b = i as u8),
            Fill::Random { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(seq);
                rng.fill_bytes(body);
            }
        }
        p
    }
}

fn write_header(h: &mut [u8; 40], kind: HeaderKind, total_len: usize, seq: u64) {
    let (proto, l4_len) = match kind {
        HeaderKind::UdpLike => (17u8, 8usize),
        HeaderKind::TcpLike => (6u8, 20usize),
    };
    h[0] = 0x45;
    h[2..4].copy_from_slice(&(total_len as u16).to_be_bytes());
    h[4..6].copy_from_slice(&(seq as u16).to_be_bytes());
    h[6] = 0x40; // DF
    h[8] = 64;
    h[9] = proto;
    h[12..16].copy_from_slice(&SRC_ADDR);
    h[16..20].copy_from_slice(&DST_ADDR);
    let csum = ipv4_checksum(&h[..20]);
    h[10..12].copy_from_slice(&csum.to_be_bytes());
    let l4 = &mut h[20..20 + l4_len];
    l4[0..2].copy_from_slice(&SRC_PORT.to_be_bytes());
    l4[2..4].copy_from_slice(&DST_PORT.to_be_bytes());
    match kind {
        HeaderKind::UdpLike => l4[4..6].copy_from_slice(&((total_len - 20) as u16).to_be_bytes()),
        HeaderKind::TcpLike => {
            l4[4..8].copy_from_slice(&(seq as u32).to_be_bytes());
            l4[12] = 5 << 4;
            l4[13] = 0x18; // PSH | ACK
            l4[14..16].copy_from_slice(&u16::MAX.to_be_bytes());
        }
    }
}

fn ipv4_checksum(header: &[u8]) -> u16 {
    let mut sum: u32 = header.chunks(2).map(|c| u32::from(u16::from_be_bytes([c[0], c[1]]))).sum();
    while sum > 0xffff {
        sum = (sum & 0xffff) + (sum >> 16);
    }
    !(sum as u16)
}
