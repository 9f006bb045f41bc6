//! Sliding-window anti-replay check (RFC 4303 style, 64-entry bitmap).

pub const WINDOW_SIZE: u32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReplayVerdict {
    Accept,
    Duplicate,
    Stale,
}

/// Per-direction receive state. Bit `i` of `window` is set when
/// `highest_seq - i` has been accepted.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ReplayState {
    highest_seq: u32,
    window: u64,
}

impl ReplayState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn highest_seq(&self) -> u32 {
        self.highest_seq
    }

    pub fn window(&self) -> u64 {
        self.window
    }

    /// Only mutates state on [`ReplayVerdict::Accept`].
    pub fn check_and_update(&mut self, seq: u32) -> ReplayVerdict {
        if seq == 0 {
            return ReplayVerdict::Stale;
        }
        if seq > self.highest_seq {
            let shift = seq - self.highest_seq;
            self.window = if shift >= WINDOW_SIZE { 1 } else { (self.window << shift) | 1 };
            self.highest_seq = seq;
            return ReplayVerdict::Accept;
        }
        let age = self.highest_seq - seq;
        if age >= WINDOW_SIZE {
            return ReplayVerdict::Stale;
        }
        let bit = 1u64 << age;
        if self.window & bit != 0 {
            return ReplayVerdict::Duplicate;
        }
        self.window |= bit;
        ReplayVerdict::Accept
    }
}
