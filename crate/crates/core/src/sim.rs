//! Deterministic discrete-event model of the laptop -> AP -> laptop channel.
//!
//! The whole two-hop path is one FIFO server with a drop-tail queue. A frame's
//! service time is `fixed_overhead + 8 * bytes / capacity + draw * jitter`
//! with `draw` uniform in [-1, 1]. When contention modelling is enabled, a
//! frame that reaches the head of the queue within `contention_window_s` of
//! the previous transmission finishing also defers for a uniform random time
//! in `[0, contention_backoff_s]`, the way a DCF station backs off after a
//! busy medium.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec;

/// Smallest frame a traffic spec may describe.
pub const MIN_FRAME_BYTES: u32 = 64;
/// Layer-2 bytes around every layer-3 packet (Ethernet header + FCS).
pub const L2_OVERHEAD: usize = 18;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinkError {
    #[error("invalid link parameters: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalibrationError {
    #[error("calibration needs at least two distinct frame sizes")]
    Underdetermined,
    #[error("fit produced a non-physical value: {0}")]
    NonPhysical(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkParams {
    pub capacity_bps: f64,
    pub fixed_overhead_s: f64,
    pub jitter_s: f64,
    pub prop_delay_s: f64,
    pub queue_cap: usize,
    pub seed: u64,
    #[serde(default)]
    pub contention_window_s: f64,
    #[serde(default)]
    pub contention_backoff_s: f64,
}

impl LinkParams {
    /// Least-squares fit of the baseline UDP throughput column
    /// (512/1024/1280/1518 B -> 3.847/5.429/6.062/6.906 Mbps).
    pub fn paper2011() -> Self {
        Self::analytic(PAPER2011_CAPACITY_BPS, PAPER2011_OVERHEAD_S, 50)
    }

    /// Jitter-free, contention-free link.
    pub fn analytic(capacity_bps: f64, fixed_overhead_s: f64, queue_cap: usize) -> Self {
        Self {
            capacity_bps,
            fixed_overhead_s,
            jitter_s: 0.0,
            prop_delay_s: 0.0,
            queue_cap,
            seed: 0,
            contention_window_s: 0.0,
            contention_backoff_s: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), LinkError> {
        let bad = |m: &str| Err(LinkError::Invalid(m.to_string()));
        if !(self.capacity_bps > 0.0 && self.capacity_bps.is_finite()) {
            return bad("capacity_bps must be positive");
        }
        if self.queue_cap < 1 {
            return bad("queue_cap must be at least 1");
        }
        for (name, v) in [
            ("fixed_overhead_s", self.fixed_overhead_s),
            ("jitter_s", self.jitter_s),
            ("prop_delay_s", self.prop_delay_s),
            ("contention_window_s", self.contention_window_s),
            ("contention_backoff_s", self.contention_backoff_s),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(LinkError::Invalid(format!("{name} must be a non-negative number")));
            }
        }
        let floor = self.fixed_overhead_s + 8.0 * f64::from(MIN_FRAME_BYTES) / self.capacity_bps;
        if self.jitter_s >= floor {
            return bad("jitter_s must stay below the smallest frame's service time");
        }
        Ok(())
    }

    pub fn service_time(&self, frame_bytes: usize, jitter_draw: f64) -> f64 {
        service_time(self, frame_bytes, jitter_draw)
    }

    /// Frame time with no jitter or contention.
    pub fn nominal_service_time(&self, frame_bytes: usize) -> f64 {
        service_time(self, frame_bytes, 0.0)
    }
}

pub const PAPER2011_CAPACITY_BPS: f64 = 11_215_213.328_222_514;
pub const PAPER2011_OVERHEAD_S: f64 = 0.000_732_456_665_634_364_3;

pub fn service_time(params: &LinkParams, frame_bytes: usize, jitter_draw: f64) -> f64 {
    params.fixed_overhead_s + 8.0 * frame_bytes as f64 / params.capacity_bps + jitter_draw * params.jitter_s
}

/// Fixed-plus-per-byte processing cost of one pipeline stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageCost {
    pub fixed_s: f64,
    pub per_byte_s: f64,
}

impl StageCost {
    pub const ZERO: StageCost = StageCost { fixed_s: 0.0, per_byte_s: 0.0 };

    pub fn time(&self, bytes: usize) -> f64 {
        self.fixed_s + self.per_byte_s * bytes as f64
    }
}

/// CPU model of a tunnel endpoint. Each endpoint is a FIFO server: the
/// sender runs compress + seal per packet, the receiver open + decompress.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointModel {
    /// Packets the sending endpoint may hold before it drops (tun txqueue).
    pub queue_cap: usize,
    pub compress: StageCost,
    pub seal: StageCost,
    pub open: StageCost,
    pub decompress: StageCost,
}

impl EndpointModel {
    /// Costs fitted to the tunnel-without-compression UDP column on top of
    /// [`LinkParams::paper2011`]; compression stage costs are fixed estimates.
    pub fn paper2011() -> Self {
        let crypto = StageCost { fixed_s: PAPER2011_SEAL_FIXED_S, per_byte_s: PAPER2011_SEAL_PER_BYTE_S };
        Self {
            queue_cap: 100,
            compress: DEFAULT_COMPRESS_COST,
            seal: crypto,
            open: crypto,
            decompress: DEFAULT_DECOMPRESS_COST,
        }
    }

    pub fn free() -> Self {
        Self {
            queue_cap: 100,
            compress: StageCost::ZERO,
            seal: StageCost::ZERO,
            open: StageCost::ZERO,
            decompress: StageCost::ZERO,
        }
    }
}

pub const PAPER2011_SEAL_FIXED_S: f64 = 0.000_719_807_001_916_698_5;
pub const PAPER2011_SEAL_PER_BYTE_S: f64 = 8.804_774_051_501_024e-7;
pub const DEFAULT_COMPRESS_COST: StageCost = StageCost { fixed_s: 5e-6, per_byte_s: 1.5e-8 };
pub const DEFAULT_DECOMPRESS_COST: StageCost = StageCost { fixed_s: 3e-6, per_byte_s: 5e-9 };

/// Ordinary least squares for `y = a + b x`.
fn fit_line(points: &[(f64, f64)]) -> Result<(f64, f64), CalibrationError> {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= 0.0 {
        return Err(CalibrationError::Underdetermined);
    }
    let b = sxy / sxx;
    Ok((my - b * mx, b))
}

fn distinct_sizes(targets: &[(u32, f64)]) -> usize {
    let mut sizes: Vec<u32> = targets.iter().map(|t| t.0).collect();
    sizes.sort_unstable();
    sizes.dedup();
    sizes.len()
}

/// Fits `(fixed_overhead_s, capacity_bps)` so that the per-frame time
/// `8 * bytes / throughput` matches `fixed_overhead + 8 * bytes / capacity`.
pub fn calibrate_link(targets: &[(u32, f64)]) -> Result<LinkParams, CalibrationError> {
    if distinct_sizes(targets) < 2 {
        return Err(CalibrationError::Underdetermined);
    }
    if let Some(t) = targets.iter().find(|t| !(t.1 > 0.0)) {
        return Err(CalibrationError::NonPhysical(format!("throughput {} at {} bytes", t.1, t.0)));
    }
    let points: Vec<(f64, f64)> = targets
        .iter()
        .map(|&(bytes, bps)| {
            let bits = 8.0 * f64::from(bytes);
            (bits, bits / bps)
        })
        .collect();
    let (overhead, inv_capacity) = fit_line(&points)?;
    if inv_capacity <= 0.0 {
        return Err(CalibrationError::NonPhysical(format!("capacity {}", 1.0 / inv_capacity)));
    }
    if overhead < 0.0 {
        return Err(CalibrationError::NonPhysical(format!("fixed overhead {overhead}")));
    }
    Ok(LinkParams::analytic(1.0 / inv_capacity, overhead, 50))
}

/// Wire packet size for a tunnelled frame of `frame_bytes` that travels
/// uncompressed.
pub fn raw_tunnel_wire_len(frame_bytes: u32) -> usize {
    codec::sealed_len(frame_bytes as usize - L2_OVERHEAD)
}

/// Fits the seal/open cost line to tunnel-without-compression throughput
/// targets, taking the sending endpoint as the bottleneck: per-frame time
/// `8 * bytes / throughput = seal.fixed + seal.per_byte * wire_len`.
pub fn calibrate_endpoint(link: &LinkParams, targets: &[(u32, f64)]) -> Result<EndpointModel, CalibrationError> {
    if distinct_sizes(targets) < 2 {
        return Err(CalibrationError::Underdetermined);
    }
    if let Some(t) = targets.iter().find(|t| !(t.1 > 0.0) || (t.0 as usize) <= L2_OVERHEAD) {
        return Err(CalibrationError::NonPhysical(format!("target {} bytes at {} bps", t.0, t.1)));
    }
    let points: Vec<(f64, f64)> = targets
        .iter()
        .map(|&(bytes, bps)| (raw_tunnel_wire_len(bytes) as f64, 8.0 * f64::from(bytes) / bps))
        .collect();
    let (fixed_s, per_byte_s) = fit_line(&points)?;
    if fixed_s < 0.0 || per_byte_s < 0.0 {
        return Err(CalibrationError::NonPhysical(format!("seal cost {fixed_s} s + {per_byte_s} s/B")));
    }
    let seal = StageCost { fixed_s, per_byte_s };
    for &(bytes, _) in targets {
        let wire = raw_tunnel_wire_len(bytes);
        if seal.time(wire) < link.nominal_service_time(wire + L2_OVERHEAD) {
            return Err(CalibrationError::NonPhysical(format!(
                "at {bytes} bytes the link, not the endpoint, would be the bottleneck"
            )));
        }
    }
    Ok(EndpointModel { seal, open: seal, ..EndpointModel::paper2011() })
}

/// Single FIFO server holding at most `cap` frames, the one in service
/// included. Arrivals must be offered in nondecreasing time order.
#[derive(Debug, Clone)]
pub struct FifoServer {
    cap: Option<usize>,
    departures: VecDeque<f64>,
    last_departure: f64,
}

impl FifoServer {
    pub fn new(cap: Option<usize>) -> Self {
        Self { cap, departures: VecDeque::new(), last_departure: f64::NEG_INFINITY }
    }

    pub fn occupancy(&mut self, now: f64) -> usize {
        while self.departures.front().is_some_and(|&d| d <= now) {
            self.departures.pop_front();
        }
        self.departures.len()
    }

    /// Service start for a frame arriving at `now`, or `None` when full.
    /// Follow with [`FifoServer::commit`].
    pub fn admit(&mut self, now: f64) -> Option<f64> {
        let occ = self.occupancy(now);
        if self.cap.is_some_and(|c| occ >= c) {
            return None;
        }
        Some(now.max(self.last_departure))
    }

    /// Time since the server last went idle, as seen by a frame starting at `start`.
    pub fn idle_before(&self, start: f64) -> f64 {
        start - self.last_departure
    }

    pub fn commit(&mut self, departure: f64) {
        self.departures.push_back(departure);
        self.last_departure = departure;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Transmission {
    Delivered { at: f64 },
    Dropped,
}

/// The simulated channel itself.
#[derive(Debug, Clone)]
pub struct LinkChannel {
    params: LinkParams,
    rng: ChaCha8Rng,
    server: FifoServer,
}

impl LinkChannel {
    pub fn new(params: LinkParams) -> Result<Self, LinkError> {
        params.validate()?;
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(params.seed),
            server: FifoServer::new(Some(params.queue_cap)),
            params,
        })
    }

    pub fn params(&self) -> &LinkParams {
        &self.params
    }

    pub fn transmit(&mut self, frame_bytes: usize, now: f64) -> Transmission {
        let Some(start) = self.server.admit(now) else {
            return Transmission::Dropped;
        };
        let draw = if self.params.jitter_s > 0.0 { self.rng.random_range(-1.0..=1.0) } else { 0.0 };
        let mut service = service_time(&self.params, frame_bytes, draw);
        if self.params.contention_backoff_s > 0.0 && self.server.idle_before(start) < self.params.contention_window_s {
            service += self.rng.random_range(0.0..=self.params.contention_backoff_s);
        }
        let done = start + service;
        self.server.commit(done);
        Transmission::Delivered { at: done + self.params.prop_delay_s }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Sender,
    Link,
    Receiver,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    FrameArrival(Stage),
    FrameDeparture(Stage),
    EndpointTick(Side),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimEvent {
    pub time: f64,
    pub kind: EventKind,
    pub frame_id: u64,
}

struct Queued {
    event: SimEvent,
    order: u64,
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Queued {}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Queued {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other.event.time.total_cmp(&self.event.time).then_with(|| other.order.cmp(&self.order))
    }
}

/// Time-ordered event queue; simultaneous events pop in insertion order.
#[derive(Default)]
pub struct EventQueue {
    heap: BinaryHeap<Queued>,
    inserted: u64,
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, event: SimEvent) {
        self.heap.push(Queued { event, order: self.inserted });
        self.inserted += 1;
    }

    pub fn pop(&mut self) -> Option<SimEvent> {
        self.heap.pop().map(|q| q.event)
    }

    pub fn peek_time(&self) -> Option<f64> {
        self.heap.peek().map(|q| q.event.time)
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}
