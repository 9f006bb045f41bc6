//! Reference implementations used as independent oracles. Written from the
//! algorithm definitions and sharing no code with the crate.
#![allow(dead_code)]

use std::collections::HashSet;
use std::sync::{Mutex, MutexGuard};

/// Serializes timed tests so their wall-clock budgets are not shared.
pub fn exclusive() -> MutexGuard<'static, ()> {
    static LOCK: Mutex<()> = Mutex::new(());
    LOCK.lock().unwrap_or_else(|e| e.into_inner())
}

fn gf_mul(mut a: u8, mut b: u8) -> u8 {
    let mut p = 0u8;
    while b != 0 {
        if b & 1 != 0 {
            p ^= a;
        }
        let hi = a & 0x80;
        a <<= 1;
        if hi != 0 {
            a ^= 0x1b;
        }
        b >>= 1;
    }
    p
}

fn sbox() -> [u8; 256] {
    let mut s = [0u8; 256];
    for x in 0..=255u8 {
        // multiplicative inverse by exhaustion, 0 maps to 0
        let inv = (1..=255u8).find(|&y| gf_mul(x, y) == 1).unwrap_or(0);
        let mut b = inv;
        let mut out = 0x63u8;
        for _ in 0..5 {
            out ^= b;
            b = b.rotate_left(1);
        }
        s[x as usize] = out;
    }
    s
}

pub struct RefAes128 {
    round_keys: [[u8; 16]; 11],
    sbox: [u8; 256],
}

impl RefAes128 {
    pub fn new(key: &[u8; 16]) -> Self {
        let sbox = sbox();
        let mut w = [[0u8; 4]; 44];
        for i in 0..4 {
            w[i].copy_from_slice(&key[4 * i..4 * i + 4]);
        }
        let mut rcon = 1u8;
        for i in 4..44 {
            let mut t = w[i - 1];
            if i % 4 == 0 {
                t = [sbox[t[1] as usize] ^ rcon, sbox[t[2] as usize], sbox[t[3] as usize], sbox[t[0] as usize]];
                rcon = gf_mul(rcon, 2);
            }
            for j in 0..4 {
                w[i][j] = w[i - 4][j] ^ t[j];
            }
        }
        let mut round_keys = [[0u8; 16]; 11];
        for (r, rk) in round_keys.iter_mut().enumerate() {
            for c in 0..4 {
                rk[4 * c..4 * c + 4].copy_from_slice(&w[4 * r + c]);
            }
        }
        Self { round_keys, sbox }
    }

    pub fn encrypt_block(&self, input: &[u8; 16]) -> [u8; 16] {
        // state[r + 4c], column-major like the input
        let mut s = *input;
        let add = |s: &mut [u8; 16], k: &[u8; 16]| s.iter_mut().zip(k).for_each(|(a, b)| *a ^= b);
        add(&mut s, &self.round_keys[0]);
        for round in 1..=10 {
            for b in s.iter_mut() {
                *b = self.sbox[*b as usize];
            }
            let t = s;
            for r in 1..4 {
                for c in 0..4 {
                    s[r + 4 * c] = t[r + 4 * ((c + r) % 4)];
                }
            }
            if round != 10 {
                for c in 0..4 {
                    let col = [s[4 * c], s[4 * c + 1], s[4 * c + 2], s[4 * c + 3]];
                    for r in 0..4 {
                        s[4 * c + r] = gf_mul(col[r], 2)
                            ^ gf_mul(col[(r + 1) % 4], 3)
                            ^ col[(r + 2) % 4]
                            ^ col[(r + 3) % 4];
                    }
                }
            }
            add(&mut s, &self.round_keys[round]);
        }
        s
    }

    /// CBC with PKCS#7 padding.
    pub fn cbc_encrypt(&self, iv: &[u8; 16], plain: &[u8]) -> Vec<u8> {
        let pad = 16 - plain.len() % 16;
        let mut data = plain.to_vec();
        data.extend(std::iter::repeat_n(pad as u8, pad));
        let mut prev = *iv;
        let mut out = Vec::with_capacity(data.len());
        for chunk in data.chunks(16) {
            let mut block = [0u8; 16];
            for i in 0..16 {
                block[i] = chunk[i] ^ prev[i];
            }
            prev = self.encrypt_block(&block);
            out.extend_from_slice(&prev);
        }
        out
    }
}

pub fn sha1(msg: &[u8]) -> [u8; 20] {
    let mut h: [u32; 5] = [0x6745_2301, 0xefcd_ab89, 0x98ba_dcfe, 0x1032_5476, 0xc3d2_e1f0];
    let mut data = msg.to_vec();
    data.push(0x80);
    while data.len() % 64 != 56 {
        data.push(0);
    }
    data.extend_from_slice(&((msg.len() as u64) * 8).to_be_bytes());
    for block in data.chunks(64) {
        let mut w = [0u32; 80];
        for i in 0..16 {
            w[i] = u32::from_be_bytes([block[4 * i], block[4 * i + 1], block[4 * i + 2], block[4 * i + 3]]);
        }
        for i in 16..80 {
            w[i] = (w[i - 3] ^ w[i - 8] ^ w[i - 14] ^ w[i - 16]).rotate_left(1);
        }
        let [mut a, mut b, mut c, mut d, mut e] = h;
        for (i, &wi) in w.iter().enumerate() {
            let (f, k) = match i {
                0..=19 => ((b & c) | (!b & d), 0x5a82_7999),
                20..=39 => (b ^ c ^ d, 0x6ed9_eba1),
                40..=59 => ((b & c) | (b & d) | (c & d), 0x8f1b_bcdc),
                _ => (b ^ c ^ d, 0xca62_c1d6),
            };
            let t = a.rotate_left(5).wrapping_add(f).wrapping_add(e).wrapping_add(k).wrapping_add(wi);
            e = d;
            d = c;
            c = b.rotate_left(30);
            b = a;
            a = t;
        }
        for (x, y) in h.iter_mut().zip([a, b, c, d, e]) {
            *x = x.wrapping_add(y);
        }
    }
    let mut out = [0u8; 20];
    for (i, v) in h.iter().enumerate() {
        out[4 * i..4 * i + 4].copy_from_slice(&v.to_be_bytes());
    }
    out
}

pub fn hmac_sha1(key: &[u8], msg: &[u8]) -> [u8; 20] {
    let mut k = if key.len() > 64 { sha1(key).to_vec() } else { key.to_vec() };
    k.resize(64, 0);
    let inner: Vec<u8> = k.iter().map(|b| b ^ 0x36).chain(msg.iter().copied()).collect();
    let ih = sha1(&inner);
    let outer: Vec<u8> = k.iter().map(|b| b ^ 0x5c).chain(ih).collect();
    sha1(&outer)
}

/// Complete sealed packet built from the definitions alone.
pub fn reference_seal(cipher_key: &[u8; 16], auth_key: &[u8; 20], iv: &[u8; 16], msg_type: u8, seq: u32, flag: u8, body: &[u8]) -> Vec<u8> {
    let mut record = vec![msg_type];
    record.extend_from_slice(&seq.to_be_bytes());
    record.push(flag);
    record.extend_from_slice(body);
    let ct = RefAes128::new(cipher_key).cbc_encrypt(iv, &record);
    let mut signed = iv.to_vec();
    signed.extend_from_slice(&ct);
    let mut out = hmac_sha1(auth_key, &signed).to_vec();
    out.extend_from_slice(&signed);
    out
}

/// Brute-force replay oracle: remembers every accepted sequence number.
#[derive(Default)]
pub struct HorizonOracle {
    accepted: HashSet<u32>,
    highest: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleVerdict {
    Accept,
    Duplicate,
    Stale,
}

impl HorizonOracle {
    pub fn check(&mut self, seq: u32) -> OracleVerdict {
        if seq == 0 || (seq <= self.highest && self.highest - seq >= 64) {
            return OracleVerdict::Stale;
        }
        if !self.accepted.insert(seq) {
            return OracleVerdict::Duplicate;
        }
        self.highest = self.highest.max(seq);
        OracleVerdict::Accept
    }
}

fn hex(s: &str) -> Vec<u8> {
    (0..s.len()).step_by(2).map(|i| u8::from_str_radix(&s[i..i + 2], 16).unwrap()).collect()
}

/// RFC 2202 HMAC-SHA1 cases: (key, data, digest).
pub fn rfc2202_cases() -> Vec<(Vec<u8>, Vec<u8>, Vec<u8>)> {
    vec![
        (vec![0x0b; 20], b"Hi There".to_vec(), hex("b617318655057264e28bc0b6fb378c8ef146be00")),
        (b"Jefe".to_vec(), b"what do ya want for nothing?".to_vec(), hex("effcdf6ae5eb2fa2d27416d5f184df9c259a7c79")),
        (vec![0xaa; 20], vec![0xdd; 50], hex("125d7342b9ac11cd91a39af48aa17b4f63f175d3")),
        (
            hex("0102030405060708090a0b0c0d0e0f10111213141516171819"),
            vec![0xcd; 50],
            hex("4c9007f4026250c6bc8414f9bf50c86c2d7235da"),
        ),
        (vec![0x0c; 20], b"Test With Truncation".to_vec(), hex("4c1a03424b55e07fe7f27be1d58bb9324a9a5a04")),
        (
            vec![0xaa; 80],
            b"Test Using Larger Than Block-Size Key - Hash Key First".to_vec(),
            hex("aa4ae5e15272d00e95705637ce8a3b55ed402112"),
        ),
        (
            vec![0xaa; 80],
            b"Test Using Larger Than Block-Size Key and Larger Than One Block-Size Data".to_vec(),
            hex("e8e99d0f45237d786d6bbaa7965c7808bbff1a91"),
        ),
    ]
}

pub const FIPS197_KEY: [u8; 16] = [0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15];
pub const FIPS197_PLAIN: [u8; 16] = [0x00, 0x11, 0x22, 0x33, 0x44, 0x55, 0x66, 0x77, 0x88, 0x99, 0xaa, 0xbb, 0xcc, 0xdd, 0xee, 0xff];
pub const FIPS197_CIPHER: [u8; 16] = [0x69, 0xc4, 0xe0, 0xd8, 0x6a, 0x7b, 0x04, 0x30, 0xd8, 0xcd, 0xb7, 0x80, 0x70, 0xb4, 0xc5, 0x5a];

/// Sustainable frame rate of a jitter-free link, in bits per second of
/// `frame_bytes` frames.
pub fn closed_form_rate(fixed_overhead_s: f64, capacity_bps: f64, frame_bytes: u32) -> f64 {
    let bits = 8.0 * f64::from(frame_bytes);
    bits / (fixed_overhead_s + bits / capacity_bps)
}

/// One line per criterion, in a fixed format. Written to the stderr handle
/// directly so it shows without `--nocapture`.
pub fn report(criterion: u32, name: &str, pass: bool, detail: &str) {
    use std::io::Write;
    let line = format!("criterion {criterion:>2} [{}] {name}: {detail}\n", if pass { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().write_all(line.as_bytes());
}
