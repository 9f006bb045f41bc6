use std::fmt;
use std::net::Ipv4Addr;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SUPPORTED_CIPHER: &str = "AES-128-CBC";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Proto {
    Udp,
    Tcp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Keepalive {
    pub ping_s: u32,
    pub timeout_s: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TunnelConfig {
    pub port: u16,
    pub proto: Proto,
    pub dev_name: String,
    pub remote_addr: String,
    pub vpn_local: Option<Ipv4Addr>,
    pub vpn_remote: Option<Ipv4Addr>,
    pub cipher_id: String,
    pub secret_path: PathBuf,
    pub compression: bool,
    pub keepalive: Option<Keepalive>,
    pub persist_tun: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {reason}")]
pub struct ConfigError {
    /// 1-based; 0 when the problem is not tied to a line (missing directive).
    pub line: usize,
    pub reason: String,
}

impl ConfigError {
    fn at(line: usize, reason: impl fmt::Display) -> Self {
        Self { line, reason: reason.to_string() }
    }
}

/// The Laptop-1 configuration used for the tunnel experiments.
pub const LAPTOP1_CONFIG: &str = "\
Port 5002
Proto udp
Dev tun0
Remote 192.168.1.102
Ifconfig 20.20.20.1 20.20.20.2
Cipher AES-128-CBC
Secret static.key
Comp-lzo
Keepalive 5 20
Persist-tun
";

impl TunnelConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut port = None;
        let mut proto = None;
        let mut dev = None;
        let mut remote = None;
        let mut ifconfig = None;
        let mut cipher = None;
        let mut secret = None;
        let mut compression = false;
        let mut keepalive = None;
        let mut persist_tun = false;
        let mut seen: Vec<String> = Vec::new();

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("");
            let mut tokens = line.split_whitespace();
            let Some(name) = tokens.next() else { continue };
            let name = name.to_ascii_lowercase();
            let args: Vec<&str> = tokens.collect();
            if seen.contains(&name) {
                return Err(ConfigError::at(line_no, format!("duplicate directive '{name}'")));
            }
            let want = |n: usize| -> Result<(), ConfigError> {
                if args.len() == n {
                    Ok(())
                } else {
                    Err(ConfigError::at(line_no, format!("'{name}' takes {n} argument(s), got {}", args.len())))
                }
            };
            match name.as_str() {
                "port" => {
                    want(1)?;
                    let p: u16 = args[0]
                        .parse()
                        .ok()
                        .filter(|&p| p != 0)
                        .ok_or_else(|| ConfigError::at(line_no, format!("invalid port '{}'", args[0])))?;
                    port = Some(p);
                }
                "proto" => {
                    want(1)?;
                    proto = Some(match args[0].to_ascii_lowercase().as_str() {
                        "udp" => Proto::Udp,
                        "tcp" => Proto::Tcp,
                        other => return Err(ConfigError::at(line_no, format!("unknown proto '{other}'"))),
                    });
                }
                "dev" => {
                    want(1)?;
                    dev = Some(args[0].to_string());
                }
                "remote" => {
                    want(1)?;
                    remote = Some(args[0].to_string());
                }
                "ifconfig" => {
                    want(2)?;
                    let parse = |s: &str| {
                        s.parse::<Ipv4Addr>()
                            .map_err(|_| ConfigError::at(line_no, format!("invalid address '{s}'")))
                    };
                    ifconfig = Some((parse(args[0])?, parse(args[1])?));
                }
                "cipher" => {
                    want(1)?;
                    if !args[0].eq_ignore_ascii_case(SUPPORTED_CIPHER) {
                        return Err(ConfigError::at(line_no, format!("unsupported cipher '{}'", args[0])));
                    }
                    cipher = Some(SUPPORTED_CIPHER.to_string());
                }
                "secret" => {
                    want(1)?;
                    secret = Some(PathBuf::from(args[0]));
                }
                "comp-lzo" => {
                    want(0)?;
                    compression = true;
                }
                "persist-tun" => {
                    want(0)?;
                    persist_tun = true;
                }
                "keepalive" => {
                    want(2)?;
                    let parse = |s: &str| {
                        s.parse::<u32>()
                            .map_err(|_| ConfigError::at(line_no, format!("invalid keepalive value '{s}'")))
                    };
                    let (ping_s, timeout_s) = (parse(args[0])?, parse(args[1])?);
                    if ping_s == 0 || timeout_s <= ping_s {
                        return Err(ConfigError::at(line_no, "keepalive needs 0 < ping < timeout"));
                    }
                    keepalive = Some(Keepalive { ping_s, timeout_s });
                }
                other => return Err(ConfigError::at(line_no, format!("unknown directive '{other}'"))),
            }
            seen.push(name);
        }

        let missing = |what: &str| ConfigError::at(0, format!("missing mandatory directive '{what}'"));
        Ok(TunnelConfig {
            port: port.ok_or_else(|| missing("port"))?,
            proto: proto.ok_or_else(|| missing("proto"))?,
            remote_addr: remote.ok_or_else(|| missing("remote"))?,
            secret_path: secret.ok_or_else(|| missing("secret"))?,
            dev_name: dev.unwrap_or_else(|| "tun0".to_string()),
            vpn_local: ifconfig.map(|(l, _)| l),
            vpn_remote: ifconfig.map(|(_, r)| r),
            cipher_id: cipher.unwrap_or_else(|| SUPPORTED_CIPHER.to_string()),
            compression,
            keepalive,
            persist_tun,
        })
    }

    /// The matching configuration for the far end of the tunnel: tunnel
    /// addresses swapped, `remote` pointing back at `local_addr`.
    pub fn mirrored(&self, local_addr: &str) -> Self {
        let mut peer = self.clone();
        peer.remote_addr = local_addr.to_string();
        peer.vpn_local = self.vpn_remote;
        peer.vpn_remote = self.vpn_local;
        peer
    }
}
