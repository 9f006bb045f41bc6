//! The packet-I/O boundary standing in for the virtual interface: payloads
//! are injected on one side and delivered on the other.

use std::collections::VecDeque;
use std::io;
use std::sync::{Arc, Mutex};

pub trait PacketIo {
    /// Next payload waiting to enter the tunnel, without blocking.
    fn try_recv(&mut self) -> io::Result<Option<Vec<u8>>>;
    /// Hands a decapsulated payload to the local side.
    fn deliver(&mut self, payload: &[u8]) -> io::Result<()>;
    /// Called when the session restarts without `persist-tun`.
    fn reopen(&mut self) -> io::Result<()> {
        Ok(())
    }
}

#[derive(Debug, Default)]
struct Queues {
    inject: VecDeque<Vec<u8>>,
    delivered: Vec<Vec<u8>>,
}

/// In-process binding: a pair of queues shared with a handle.
#[derive(Debug, Clone, Default)]
pub struct MemoryIo {
    queues: Arc<Mutex<Queues>>,
}

impl MemoryIo {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn inject(&self, payload: Vec<u8>) {
        self.queues.lock().expect("poisoned").inject.push_back(payload);
    }

    pub fn take_delivered(&self) -> Vec<Vec<u8>> {
        std::mem::take(&mut self.queues.lock().expect("poisoned").delivered)
    }

    pub fn pending(&self) -> usize {
        self.queues.lock().expect("poisoned").inject.len()
    }
}

impl PacketIo for MemoryIo {
    fn try_recv(&mut self) -> io::Result<Option<Vec<u8>>> {
        Ok(self.queues.lock().expect("poisoned").inject.pop_front())
    }

    fn deliver(&mut self, payload: &[u8]) -> io::Result<()> {
        self.queues.lock().expect("poisoned").delivered.push(payload.to_vec());
        Ok(())
    }

    fn reopen(&mut self) -> io::Result<()> {
        self.queues.lock().expect("poisoned").inject.clear();
        Ok(())
    }
}

#[cfg(target_os = "linux")]
pub use linux::TunDevice;

#[cfg(target_os = "linux")]
mod linux {
    use super::PacketIo;
    use std::fs::{File, OpenOptions};
    use std::io::{self, Read, Write};
    use std::os::unix::fs::OpenOptionsExt;
    use std::os::unix::io::AsRawFd;

    const IFF_TUN: libc::c_short = 0x0001;
    const IFF_NO_PI: libc::c_short = 0x1000;
    const TUNSETIFF: libc::c_ulong = 0x4004_54ca;

    #[repr(C)]
    struct IfReq {
        name: [libc::c_char; libc::IFNAMSIZ],
        flags: libc::c_short,
        _pad: [u8; 22],
    }

    /// Layer-3 TUN device (`/dev/net/tun`, no packet-info header).
    /// Needs CAP_NET_ADMIN; addresses and routes are left to the operator.
    pub struct TunDevice {
        file: File,
        name: String,
    }

    impl TunDevice {
        pub fn open(name: &str) -> io::Result<Self> {
            if name.len() >= libc::IFNAMSIZ {
                return Err(io::Error::new(io::ErrorKind::InvalidInput, "interface name too long"));
            }
            let file = OpenOptions::new()
                .read(true)
                .write(true)
                .custom_flags(libc::O_NONBLOCK)
                .open("/dev/net/tun")?;
            let mut req = IfReq { name: [0; libc::IFNAMSIZ], flags: IFF_TUN | IFF_NO_PI, _pad: [0; 22] };
            for (dst, src) in req.name.iter_mut().zip(name.bytes()) {
                *dst = src as libc::c_char;
            }
            // SAFETY: the fd is open and `req` is a properly laid out ifreq.
            let rc = unsafe { libc::ioctl(file.as_raw_fd(), TUNSETIFF as _, &mut req as *mut IfReq) };
            if rc < 0 {
                return Err(io::Error::last_os_error());
            }
            let end = req.name.iter().position(|&c| c == 0).unwrap_or(req.name.len());
            let name = req.name[..end].iter().map(|&c| c as u8 as char).collect();
            Ok(Self { file, name })
        }

        pub fn name(&self) -> &str {
            &self.name
        }
    }

    impl PacketIo for TunDevice {
        fn try_recv(&mut self) -> io::Result<Option<Vec<u8>>> {
            let mut buf = vec![0u8; 65536];
            match self.file.read(&mut buf) {
                Ok(n) => {
                    buf.truncate(n);
                    Ok(Some(buf))
                }
                Err(e) if e.kind() == io::ErrorKind::WouldBlock => Ok(None),
                Err(e) => Err(e),
            }
        }

        fn deliver(&mut self, payload: &[u8]) -> io::Result<()> {
            self.file.write_all(payload)
        }
    }
}
