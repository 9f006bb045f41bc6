use thiserror::Error;

use crate::codec::{self, CodecError, Iv, MsgType, StaticKey};
use crate::compress::{self, CompFlag, DecompressError};
use crate::replay::{ReplayState, ReplayVerdict};
use crate::tunnel::config::TunnelConfig;

/// Largest payload accepted from (and delivered to) the virtual interface.
pub const TUN_MTU: usize = 1500;

/// Seconds on whatever clock drives the endpoint (virtual or wall).
pub type Timestamp = f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum TunnelError {
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error("replayed packet ({0:?})")]
    Replay(ReplayVerdict),
    #[error(transparent)]
    Decompress(#[from] DecompressError),
    #[error("send sequence space exhausted, restart required")]
    SeqExhausted,
    #[error("payload of {0} bytes exceeds the tunnel MTU")]
    PayloadTooLarge(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PeerStatus {
    Alive,
    TimedOut,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KeepaliveAction {
    SendPing,
    DeclareTimeout,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Delivery {
    Payload(Vec<u8>),
    Ping,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Encapsulated {
    pub wire: Vec<u8>,
    pub comp_flag: CompFlag,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EndpointState {
    pub send_seq: u32,
    pub replay: ReplayState,
    pub last_send_ts: Timestamp,
    pub last_recv_ts: Timestamp,
    pub peer_status: PeerStatus,
}

impl EndpointState {
    pub fn new(now: Timestamp) -> Self {
        Self {
            send_seq: 1,
            replay: ReplayState::new(),
            last_send_ts: now,
            last_recv_ts: now,
            peer_status: PeerStatus::Alive,
        }
    }
}

/// One end of the tunnel. Processes exactly one event at a time; callers
/// with several producers serialize them before reaching the endpoint.
#[derive(Debug, Clone)]
pub struct Endpoint {
    cfg: TunnelConfig,
    key: StaticKey,
    state: EndpointState,
}

impl Endpoint {
    pub fn new(cfg: TunnelConfig, key: StaticKey, now: Timestamp) -> Self {
        Self { cfg, key, state: EndpointState::new(now) }
    }

    pub fn config(&self) -> &TunnelConfig {
        &self.cfg
    }

    pub fn state(&self) -> &EndpointState {
        &self.state
    }

    fn next_seq(&mut self) -> Result<u32, TunnelError> {
        let seq = self.state.send_seq;
        if seq == u32::MAX {
            return Err(TunnelError::SeqExhausted);
        }
        self.state.send_seq += 1;
        Ok(seq)
    }

    fn send_record(&mut self, msg_type: MsgType, flag: CompFlag, body: &[u8], iv: &Iv, now: Timestamp) -> Result<Vec<u8>, TunnelError> {
        let seq = self.next_seq()?;
        let wire = codec::seal_parts(msg_type, seq, flag, body, &self.key, iv)?;
        self.state.last_send_ts = now;
        Ok(wire)
    }

    /// compress (when configured) -> seal, consuming one sequence number.
    pub fn encapsulate(&mut self, payload: &[u8], iv: &Iv, now: Timestamp) -> Result<Encapsulated, TunnelError> {
        if payload.len() > TUN_MTU {
            return Err(TunnelError::PayloadTooLarge(payload.len()));
        }
        let compressed = self.cfg.compression.then(|| compress::compress_body(payload));
        let (comp_flag, body) = match &compressed {
            Some(c) => (c.flag, c.bytes.as_slice()),
            None => (CompFlag::Raw, payload),
        };
        let wire = self.send_record(MsgType::Data, comp_flag, body, iv, now)?;
        Ok(Encapsulated { wire, comp_flag })
    }

    pub fn ping(&mut self, iv: &Iv, now: Timestamp) -> Result<Vec<u8>, TunnelError> {
        self.send_record(MsgType::Ping, CompFlag::Raw, &codec::PING_MAGIC, iv, now)
    }

    /// open -> replay check -> decompress. Only packets that authenticate and
    /// pass the replay window refresh peer liveness.
    pub fn decapsulate(&mut self, wire: &[u8], now: Timestamp) -> Result<Delivery, TunnelError> {
        let record = codec::open(wire, &self.key)?;
        match self.state.replay.check_and_update(record.seq) {
            ReplayVerdict::Accept => {}
            verdict => return Err(TunnelError::Replay(verdict)),
        }
        self.state.last_recv_ts = now;
        self.state.peer_status = PeerStatus::Alive;
        match record.msg_type {
            MsgType::Ping => Ok(Delivery::Ping),
            MsgType::Data if record.comp_flag == CompFlag::Raw => Ok(Delivery::Payload(record.body)),
            MsgType::Data => Ok(Delivery::Payload(compress::decompress_body(record.comp_flag, &record.body, TUN_MTU)?)),
        }
    }

    /// Keepalive timers. A timeout is declared once per silent spell and
    /// restarts the session: fresh replay window and send sequence.
    pub fn tick(&mut self, now: Timestamp) -> Vec<KeepaliveAction> {
        let Some(ka) = self.cfg.keepalive else {
            return Vec::new();
        };
        let mut actions = Vec::new();
        if now - self.state.last_send_ts >= f64::from(ka.ping_s) {
            actions.push(KeepaliveAction::SendPing);
        }
        if now - self.state.last_recv_ts > f64::from(ka.timeout_s) && self.state.peer_status == PeerStatus::Alive {
            self.state.peer_status = PeerStatus::TimedOut;
            self.state.replay = ReplayState::new();
            self.state.send_seq = 1;
            actions.push(KeepaliveAction::DeclareTimeout);
        }
        actions
    }
}
