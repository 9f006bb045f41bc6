//! One measurement trial in virtual time.
//!
//! Baseline frames go straight onto the channel. Tunnel frames visit three
//! FIFO servers in tandem: the sending endpoint's CPU (compress + seal, with
//! a bounded queue standing in for the tun txqueue), the channel, and the
//! receiving endpoint's CPU (open + decompress). `tx_ts` is the generation
//! instant and `rx_ts` the hand-off to the far-side packet boundary.

use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bench::traffic::{generate_stream, FrameSchedule, SpecError, TrafficSpec};
use crate::codec::{fresh_iv, StaticKey};
use crate::compress::CompFlag;
use crate::sim::{
    EndpointModel, EventKind, EventQueue, FifoServer, LinkChannel, LinkError, LinkParams, Side, SimEvent, Stage,
    Transmission, L2_OVERHEAD,
};
use crate::tunnel::{Delivery, Endpoint, KeepaliveAction, TunnelConfig, TunnelError, LAPTOP1_CONFIG};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Baseline,
    Tunnel,
    TunnelComp,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::Baseline, Scenario::Tunnel, Scenario::TunnelComp];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Baseline => "baseline",
            Scenario::Tunnel => "tunnel",
            Scenario::TunnelComp => "tunnel_comp",
        }
    }

    pub fn is_tunnel(self) -> bool {
        self != Scenario::Baseline
    }
}

/// Everything a tunnel scenario needs beyond the channel.
#[derive(Debug, Clone)]
pub struct TunnelSetup {
    pub key: StaticKey,
    /// Endpoint A's configuration; B runs the mirrored one. The scenario
    /// decides compression regardless of `comp-lzo`.
    pub config: TunnelConfig,
    pub model: EndpointModel,
}

impl TunnelSetup {
    pub fn new(key: StaticKey, config: TunnelConfig, model: EndpointModel) -> Self {
        Self { key, config, model }
    }

    /// Laptop-1 configuration, a key derived from `key_seed`, and the
    /// fitted endpoint costs.
    pub fn paper2011(key_seed: u64) -> Self {
        let config = TunnelConfig::parse(LAPTOP1_CONFIG).expect("bundled config parses");
        Self::new(key_from_seed(key_seed), config, EndpointModel::paper2011())
    }
}

pub fn key_from_seed(seed: u64) -> StaticKey {
    StaticKey::generate(&mut ChaCha20Rng::seed_from_u64(seed))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub seq: u64,
    pub tx_ts: f64,
    pub rx_ts: f64,
    /// Size of the frame that crossed the channel.
    pub link_bytes: u32,
}

impl Sample {
    pub fn delay(&self) -> f64 {
        self.rx_ts - self.tx_ts
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrialResult {
    pub tx_count: u64,
    pub rx_count: u64,
    /// Delivered frames in sent order.
    pub samples: Vec<Sample>,
    pub dropped_seqs: Vec<u64>,
    /// Stopped early once the loss threshold was certainly exceeded.
    pub aborted: bool,
    pub timeouts: u32,
    pub events: Vec<SimEvent>,
}

impl TrialResult {
    pub fn from_samples(tx_count: u64, samples: Vec<Sample>) -> Self {
        let mut seen = vec![false; tx_count as usize];
        for s in &samples {
            seen[s.seq as usize] = true;
        }
        let dropped_seqs = (0..tx_count).filter(|&i| !seen[i as usize]).collect();
        Self { tx_count, rx_count: samples.len() as u64, samples, dropped_seqs, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOptions {
    /// How long after the last scheduled send the receiver keeps counting.
    pub settle_s: f64,
    /// Stop once drops exceed this fraction of the scheduled frames.
    pub abort_loss_above: Option<f64>,
    pub record_events: bool,
}

pub const DEFAULT_SETTLE_S: f64 = 0.02;

impl Default for TrialOptions {
    fn default() -> Self {
        Self { settle_s: DEFAULT_SETTLE_S, abort_loss_above: None, record_events: false }
    }
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Link(#[from] LinkError),
    #[error("tunnel scenario {0:?} needs a key and configuration")]
    MissingTunnel(Scenario),
    #[error("endpoint failed on frame {seq}: {source}")]
    Tunnel { seq: u64, source: TunnelError },
    #[error("frame {0} arrived altered")]
    Corrupted(u64),
    #[error("no probe rate passed (lowest probe {min_bps} bps)")]
    Search { min_bps: f64 },
    #[error("invalid search settings: {0}")]
    SearchConfig(String),
    #[error(transparent)]
    Empty(#[from] crate::bench::metrics::EmptyError),
}

const PING_ID: u64 = 1 << 63;
const REVERSE_ID: u64 = 1 << 62;
const REVERSE_SEED: u64 = 0x9e37_79b9_7f4a_7c15;
const TICK_S: f64 = 1.0;

struct Packet {
    wire: Vec<u8>,
    comp_flag: CompFlag,
    payload: Option<Vec<u8>>,
}

struct Tunnel<'a> {
    model: &'a EndpointModel,
    a: Endpoint,
    b: Endpoint,
    a_cpu: FifoServer,
    b_cpu: FifoServer,
    reverse: LinkChannel,
    iv_rng: ChaCha20Rng,
    compress: bool,
    pings: u64,
}

struct Engine<'a> {
    schedule: FrameSchedule,
    channel: LinkChannel,
    tunnel: Option<Tunnel<'a>>,
    queue: EventQueue,
    in_flight: HashMap<u64, Packet>,
    samples: Vec<Sample>,
    drops: u64,
    abort_at: Option<f64>,
    events: Option<Vec<SimEvent>>,
    timeouts: u32,
}

pub fn run_trial(
    scenario: Scenario,
    link: &LinkParams,
    spec: &TrafficSpec,
    tunnel: Option<&TunnelSetup>,
    opts: &TrialOptions,
) -> Result<TrialResult, BenchError> {
    let schedule = generate_stream(spec)?;
    let channel = LinkChannel::new(link.clone())?;
    let tunnel = if scenario.is_tunnel() {
        let setup = tunnel.ok_or(BenchError::MissingTunnel(scenario))?;
        let mut cfg = setup.config.clone();
        cfg.compression = scenario == Scenario::TunnelComp;
        let peer = cfg.mirrored("a.sim");
        let mut reverse = link.clone();
        reverse.seed ^= REVERSE_SEED;
        let mut iv_rng = ChaCha20Rng::seed_from_u64(link.seed);
        iv_rng.set_stream(1);
        Some(Tunnel {
            model: &setup.model,
            compress: cfg.compression,
            a: Endpoint::new(cfg, setup.key.clone(), 0.0),
            b: Endpoint::new(peer, setup.key.clone(), 0.0),
            a_cpu: FifoServer::new(Some(setup.model.queue_cap.max(1))),
            b_cpu: FifoServer::new(None),
            reverse: LinkChannel::new(reverse)?,
            iv_rng,
            pings: 0,
        })
    } else {
        None
    };
    let abort_at = opts.abort_loss_above.map(|t| t * schedule.count() as f64);
    let mut engine = Engine {
        schedule,
        channel,
        tunnel,
        queue: EventQueue::new(),
        in_flight: HashMap::new(),
        samples: Vec::new(),
        drops: 0,
        abort_at,
        events: opts.record_events.then(Vec::new),
        timeouts: 0,
    };
    let aborted = engine.run(spec.duration_s + opts.settle_s)?;
    let tx_count = engine.schedule.count();
    let mut samples = engine.samples;
    samples.sort_by_key(|s| s.seq);
    let mut result = TrialResult::from_samples(tx_count, samples);
    result.aborted = aborted;
    result.timeouts = engine.timeouts;
    result.events = engine.events.unwrap_or_default();
    Ok(result)
}

impl Engine<'_> {
    fn push(&mut self, time: f64, kind: EventKind, frame_id: u64) {
        self.queue.push(SimEvent { time, kind, frame_id });
    }

    fn entry_stage(&self) -> Stage {
        if self.tunnel.is_some() {
            Stage::Sender
        } else {
            Stage::Link
        }
    }

    /// Returns whether the trial was aborted.
    fn run(&mut self, close: f64) -> Result<bool, BenchError> {
        if self.schedule.count() > 0 {
            self.push(0.0, EventKind::FrameArrival(self.entry_stage()), 0);
        }
        if self.tunnel.is_some() {
            self.push(TICK_S, EventKind::EndpointTick(Side::A), 0);
            self.push(TICK_S, EventKind::EndpointTick(Side::B), 0);
        }
        while let Some(ev) = self.queue.pop() {
            if ev.time > close {
                break;
            }
            if let Some(log) = &mut self.events {
                log.push(ev);
            }
            let t = ev.time;
            let id = ev.frame_id;
            match ev.kind {
                EventKind::FrameArrival(stage) => {
                    if id & PING_ID == 0 && id + 1 < self.schedule.count() {
                        self.push(self.schedule.tx_time(id + 1), EventKind::FrameArrival(stage), id + 1);
                    }
                    match stage {
                        Stage::Link => self.link_arrival(t, id, self.schedule.spec().frame_bytes as usize),
                        _ => self.sender_arrival(t, id)?,
                    }
                }
                EventKind::FrameDeparture(Stage::Sender) => {
                    let bytes = L2_OVERHEAD + self.in_flight[&id].wire.len();
                    self.link_arrival(t, id, bytes);
                }
                EventKind::FrameDeparture(Stage::Link) => {
                    if self.tunnel.is_some() {
                        self.receiver_arrival(t, id)?;
                    } else {
                        self.deliver(t, id, self.schedule.spec().frame_bytes);
                    }
                }
                EventKind::FrameDeparture(Stage::Receiver) => {
                    let bytes = L2_OVERHEAD + self.in_flight.remove(&id).map_or(0, |p| p.wire.len());
                    self.deliver(t, id, bytes as u32);
                }
                EventKind::EndpointTick(side) => self.tick(t, side)?,
            }
            if self.abort_at.is_some_and(|limit| self.drops as f64 > limit) {
                return Ok(true);
            }
        }
        Ok(false)
    }

    fn drop_frame(&mut self, id: u64) {
        self.in_flight.remove(&id);
        if id & (PING_ID | REVERSE_ID) == 0 {
            self.drops += 1;
        }
    }

    fn deliver(&mut self, t: f64, id: u64, link_bytes: u32) {
        if id & (PING_ID | REVERSE_ID) == 0 {
            self.samples.push(Sample { seq: id, tx_ts: self.schedule.tx_time(id), rx_ts: t, link_bytes });
        }
    }

    fn link_arrival(&mut self, t: f64, id: u64, bytes: usize) {
        match self.channel.transmit(bytes, t) {
            Transmission::Delivered { at } => self.push(at, EventKind::FrameDeparture(Stage::Link), id),
            Transmission::Dropped => self.drop_frame(id),
        }
    }

    fn sender_arrival(&mut self, t: f64, id: u64) -> Result<(), BenchError> {
        let tun = self.tunnel.as_mut().expect("tunnel stage without tunnel");
        let Some(start) = tun.a_cpu.admit(t) else {
            self.drop_frame(id);
            return Ok(());
        };
        let iv = fresh_iv(&mut tun.iv_rng);
        let (packet, service) = if id & PING_ID != 0 {
            let wire = tun.a.ping(&iv, start).map_err(|source| BenchError::Tunnel { seq: id, source })?;
            let service = tun.model.seal.time(wire.len());
            (Packet { wire, comp_flag: CompFlag::Raw, payload: None }, service)
        } else {
            let payload = self.schedule.payload(id);
            let out = tun.a.encapsulate(&payload, &iv, start).map_err(|source| BenchError::Tunnel { seq: id, source })?;
            let mut service = tun.model.seal.time(out.wire.len());
            if tun.compress {
                service += tun.model.compress.time(payload.len());
            }
            (Packet { wire: out.wire, comp_flag: out.comp_flag, payload: Some(payload) }, service)
        };
        tun.a_cpu.commit(start + service);
        self.in_flight.insert(id, packet);
        self.push(start + service, EventKind::FrameDeparture(Stage::Sender), id);
        Ok(())
    }

    fn receiver_arrival(&mut self, t: f64, id: u64) -> Result<(), BenchError> {
        let tun = self.tunnel.as_mut().expect("tunnel stage without tunnel");
        if id & REVERSE_ID != 0 {
            // B's keepalive reaching A; its cost is not on the measured path
            let packet = self.in_flight.remove(&id).expect("reverse packet in flight");
            tun.a.decapsulate(&packet.wire, t).map_err(|source| BenchError::Tunnel { seq: id, source })?;
            return Ok(());
        }
        let start = tun.b_cpu.admit(t).expect("receiver queue is unbounded");
        let packet = self.in_flight.get_mut(&id).expect("packet in flight");
        let delivery = tun.b.decapsulate(&packet.wire, start).map_err(|source| BenchError::Tunnel { seq: id, source })?;
        let mut service = tun.model.open.time(packet.wire.len());
        match delivery {
            Delivery::Payload(p) => {
                if packet.payload.as_deref() != Some(p.as_slice()) {
                    return Err(BenchError::Corrupted(id));
                }
                if packet.comp_flag == CompFlag::Compressed {
                    service += tun.model.decompress.time(p.len());
                }
                packet.payload = None;
                tun.b_cpu.commit(start + service);
                self.push(start + service, EventKind::FrameDeparture(Stage::Receiver), id);
            }
            Delivery::Ping => {
                tun.b_cpu.commit(start + service);
                self.in_flight.remove(&id);
            }
        }
        Ok(())
    }

    fn tick(&mut self, t: f64, side: Side) -> Result<(), BenchError> {
        let tun = self.tunnel.as_mut().expect("tick without tunnel");
        let endpoint = match side {
            Side::A => &mut tun.a,
            Side::B => &mut tun.b,
        };
        for action in endpoint.tick(t) {
            match action {
                KeepaliveAction::DeclareTimeout => self.timeouts += 1,
                KeepaliveAction::SendPing => {
                    let id = PING_ID | tun.pings;
                    tun.pings += 1;
                    match side {
                        Side::A => self.queue.push(SimEvent { time: t, kind: EventKind::FrameArrival(Stage::Sender), frame_id: id }),
                        Side::B => {
                            let iv = fresh_iv(&mut tun.iv_rng);
                            let wire = tun.b.ping(&iv, t).map_err(|source| BenchError::Tunnel { seq: id, source })?;
                            let id = id | REVERSE_ID;
                            if let Transmission::Delivered { at } = tun.reverse.transmit(L2_OVERHEAD + wire.len(), t) {
                                self.in_flight.insert(id, Packet { wire, comp_flag: CompFlag::Raw, payload: None });
                                self.queue.push(SimEvent { time: at, kind: EventKind::FrameDeparture(Stage::Link), frame_id: id });
                            }
                        }
                    }
                }
            }
        }
        self.push(t + TICK_S, EventKind::EndpointTick(side), 0);
        Ok(())
    }
}

/// Deterministic per-repetition seed.
pub fn mix_seed(base: u64, rep: u64) -> u64 {
    let mut z = base ^ rep.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

