//! Drives one endpoint over a real UDP or TCP socket.

use std::io::{self, ErrorKind, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, UdpSocket};
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{Duration, Instant};

use log::{debug, warn};
use rand::{CryptoRng, RngCore};

use crate::codec::fresh_iv;
use crate::tunnel::endpoint::{Delivery, Endpoint, KeepaliveAction, TunnelError};
use crate::tunnel::framing::{encode_frame, FrameDecoder};
use crate::tunnel::io::PacketIo;

const POLL_INTERVAL: Duration = Duration::from_millis(20);
const TICK_INTERVAL: Duration = Duration::from_secs(1);

pub enum Transport {
    Udp { socket: UdpSocket, peer: SocketAddr },
    Tcp { stream: TcpStream, decoder: FrameDecoder },
}

impl Transport {
    pub fn udp(bind: SocketAddr, peer: SocketAddr) -> io::Result<Self> {
        let socket = UdpSocket::bind(bind)?;
        socket.set_read_timeout(Some(POLL_INTERVAL))?;
        Ok(Transport::Udp { socket, peer })
    }

    /// Dials `peer`; when nothing listens there, waits for the peer to dial
    /// `bind` instead.
    pub fn tcp(bind: SocketAddr, peer: SocketAddr) -> io::Result<Self> {
        let stream = match TcpStream::connect_timeout(&peer, Duration::from_secs(2)) {
            Ok(s) => s,
            Err(_) => TcpListener::bind(bind)?.accept()?.0,
        };
        Self::from_tcp_stream(stream)
    }

    pub fn from_tcp_stream(stream: TcpStream) -> io::Result<Self> {
        stream.set_read_timeout(Some(POLL_INTERVAL))?;
        stream.set_nodelay(true)?;
        Ok(Transport::Tcp { stream, decoder: FrameDecoder::new() })
    }

    fn send(&mut self, wire: &[u8]) -> io::Result<()> {
        match self {
            Transport::Udp { socket, peer } => socket.send_to(wire, *peer).map(|_| ()),
            Transport::Tcp { stream, .. } => {
                let framed = encode_frame(wire).map_err(|e| io::Error::new(ErrorKind::InvalidInput, e))?;
                stream.write_all(&framed)
            }
        }
    }

    /// Waits up to the poll interval for one wire packet.
    fn recv(&mut self) -> io::Result<Option<Vec<u8>>> {
        let mut buf = vec![0u8; 65536];
        let timed_out = |e: &io::Error| matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut);
        match self {
            Transport::Udp { socket, peer } => match socket.recv_from(&mut buf) {
                Ok((n, from)) if from == *peer => {
                    buf.truncate(n);
                    Ok(Some(buf))
                }
                Ok((_, from)) => {
                    debug!("ignoring datagram from unexpected source {from}");
                    Ok(None)
                }
                Err(e) if timed_out(&e) => Ok(None),
                Err(e) => Err(e),
            },
            Transport::Tcp { stream, decoder } => {
                if let Some(frame) = decoder.next_frame() {
                    return Ok(Some(frame));
                }
                match stream.read(&mut buf) {
                    Ok(0) => Err(io::Error::new(ErrorKind::UnexpectedEof, "peer closed the connection")),
                    Ok(n) => {
                        decoder.push(&buf[..n]);
                        Ok(decoder.next_frame())
                    }
                    Err(e) if timed_out(&e) => Ok(None),
                    Err(e) => Err(e),
                }
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunStats {
    pub sent: u64,
    pub delivered: u64,
    pub pings_sent: u64,
    pub pings_received: u64,
    pub rejected: u64,
    pub timeouts: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Tunnel(#[from] TunnelError),
}

pub struct Runner<I, R> {
    endpoint: Endpoint,
    transport: Transport,
    io: I,
    rng: R,
    start: Instant,
}

impl<I: PacketIo, R: RngCore + CryptoRng> Runner<I, R> {
    pub fn new(endpoint: Endpoint, transport: Transport, io: I, rng: R) -> Self {
        Self { endpoint, transport, io, rng, start: Instant::now() }
    }

    pub fn endpoint(&self) -> &Endpoint {
        &self.endpoint
    }

    fn now(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }

    /// Runs until `stop` is raised or `limit` elapses. All events are handled
    /// on this thread, one at a time.
    pub fn run(&mut self, stop: &AtomicBool, limit: Option<Duration>) -> Result<RunStats, RunError> {
        let mut stats = RunStats::default();
        let mut next_tick = TICK_INTERVAL;
        while !stop.load(Ordering::Relaxed) && limit.is_none_or(|l| self.start.elapsed() < l) {
            while let Some(payload) = self.io.try_recv()? {
                let iv = fresh_iv(&mut self.rng);
                let out = match self.endpoint.encapsulate(&payload, &iv, self.now()) {
                    Ok(out) => out,
                    Err(TunnelError::PayloadTooLarge(n)) => {
                        warn!("dropping {n}-byte payload above the tunnel MTU");
                        continue;
                    }
                    Err(e) => return Err(e.into()),
                };
                self.transport.send(&out.wire)?;
                stats.sent += 1;
            }
            if let Some(wire) = self.transport.recv()? {
                match self.endpoint.decapsulate(&wire, self.now()) {
                    Ok(Delivery::Payload(p)) => {
                        self.io.deliver(&p)?;
                        stats.delivered += 1;
                    }
                    Ok(Delivery::Ping) => stats.pings_received += 1,
                    Err(e) => {
                        debug!("rejected packet: {e}");
                        stats.rejected += 1;
                    }
                }
            }
            if self.start.elapsed() >= next_tick {
                next_tick += TICK_INTERVAL;
                for action in self.endpoint.tick(self.now()) {
                    match action {
                        KeepaliveAction::SendPing => {
                            let iv = fresh_iv(&mut self.rng);
                            let wire = self.endpoint.ping(&iv, self.now())?;
                            self.transport.send(&wire)?;
                            stats.pings_sent += 1;
                        }
                        KeepaliveAction::DeclareTimeout => {
                            warn!("peer silent for longer than the keepalive timeout, restarting session");
                            stats.timeouts += 1;
                            if !self.endpoint.config().persist_tun {
                                self.io.reopen()?;
                            }
                        }
                    }
                }
            }
        }
        Ok(stats)
    }
}
