//! One VPN endpoint: configuration, the encapsulate/decapsulate pipeline,
//! keepalive timers and the transports that carry wire packets.

pub mod config;
pub mod endpoint;
pub mod framing;
pub mod io;
pub mod runner;

pub use config::{Keepalive, Proto, TunnelConfig, LAPTOP1_CONFIG};
pub use endpoint::{Delivery, Encapsulated, Endpoint, EndpointState, KeepaliveAction, PeerStatus, Timestamp, TunnelError, TUN_MTU};
pub use io::{MemoryIo, PacketIo};
