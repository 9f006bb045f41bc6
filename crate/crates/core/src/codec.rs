//! Tunnel packet sealing and opening.
//!
//! A sealed packet on the wire is `tag(20) || iv(16) || ciphertext(16n)`.
//! The ciphertext is AES-128-CBC over the PKCS#7 padded record
//! `msg_type(1) || seq(4, big-endian) || comp_flag(1) || body`, and the tag is
//! HMAC-SHA1 over `iv || ciphertext`. The tag is always verified before any
//! decryption output is looked at.

use std::fmt;

use aes::cipher::{block_padding::Pkcs7, BlockDecryptMut, BlockEncrypt, BlockEncryptMut, InnerIvInit, KeyInit};
use hmac::{Hmac, Mac};
use rand::{CryptoRng, RngCore};
use sha1::Sha1;
use thiserror::Error;

use crate::compress::CompFlag;

type Aes128CbcEnc = cbc::Encryptor<aes::Aes128>;
type Aes128CbcDec = cbc::Decryptor<aes::Aes128>;
type HmacSha1 = Hmac<Sha1>;

pub const CIPHER_KEY_LEN: usize = 16;
pub const AUTH_KEY_LEN: usize = 20;
pub const BLOCK_LEN: usize = 16;
pub const IV_LEN: usize = BLOCK_LEN;
pub const TAG_LEN: usize = 20;
/// `msg_type || seq || comp_flag`.
pub const RECORD_HEADER_LEN: usize = 6;
pub const MIN_WIRE_LEN: usize = TAG_LEN + IV_LEN + BLOCK_LEN;
pub const MAX_CIPHERTEXT_LEN: usize = 65535;
pub const MAX_BODY_LEN: usize = 65535;
/// Number of hex digits in a key file.
pub const KEY_FILE_HEX_LEN: usize = 2 * (CIPHER_KEY_LEN + AUTH_KEY_LEN);
/// Body carried by every keepalive ping.
pub const PING_MAGIC: [u8; 16] = [0x2a; 16];

pub type Iv = [u8; IV_LEN];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("malformed packet")]
    Format,
    #[error("packet authentication failed")]
    Auth,
    #[error("invalid padding on authenticated packet")]
    Padding,
    #[error("record too large for a single packet")]
    Size,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KeyFileError {
    #[error("key file must hold exactly {KEY_FILE_HEX_LEN} hex digits, found {0}")]
    Length(usize),
    #[error("invalid character {0:?} in key file")]
    NonHex(char),
}

/// Pre-shared key material, used in both directions.
#[derive(Clone)]
pub struct StaticKey {
    cipher_key: [u8; CIPHER_KEY_LEN],
    auth_key: [u8; AUTH_KEY_LEN],
    // expanded once per key
    cipher: aes::Aes128,
    mac: HmacSha1,
}

impl PartialEq for StaticKey {
    fn eq(&self, other: &Self) -> bool {
        self.cipher_key == other.cipher_key && self.auth_key == other.auth_key
    }
}

impl Eq for StaticKey {}

impl fmt::Debug for StaticKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("StaticKey(..)")
    }
}

impl StaticKey {
    pub fn new(cipher_key: [u8; CIPHER_KEY_LEN], auth_key: [u8; AUTH_KEY_LEN]) -> Self {
        Self {
            cipher_key,
            auth_key,
            cipher: aes::Aes128::new(&cipher_key.into()),
            mac: <HmacSha1 as Mac>::new_from_slice(&auth_key).expect("hmac accepts any key size"),
        }
    }

    pub fn generate<R: RngCore + CryptoRng>(rng: &mut R) -> Self {
        let mut cipher_key = [0u8; CIPHER_KEY_LEN];
        let mut auth_key = [0u8; AUTH_KEY_LEN];
        rng.fill_bytes(&mut cipher_key);
        rng.fill_bytes(&mut auth_key);
        Self::new(cipher_key, auth_key)
    }

    pub fn cipher_key(&self) -> &[u8; CIPHER_KEY_LEN] {
        &self.cipher_key
    }

    pub fn auth_key(&self) -> &[u8; AUTH_KEY_LEN] {
        &self.auth_key
    }

    /// Parses a key file: 72 hex digits, whitespace anywhere, and lines
    /// starting with `#` ignored.
    pub fn parse_key_file(text: &str) -> Result<Self, KeyFileError> {
        let mut digits = Vec::with_capacity(KEY_FILE_HEX_LEN);
        for line in text.lines() {
            if line.trim_start().starts_with('#') {
                continue;
            }
            for c in line.chars().filter(|c| !c.is_whitespace()) {
                let v = c.to_digit(16).ok_or(KeyFileError::NonHex(c))?;
                digits.push(v as u8);
            }
        }
        if digits.len() != KEY_FILE_HEX_LEN {
            return Err(KeyFileError::Length(digits.len()));
        }
        let bytes: Vec<u8> = digits.chunks(2).map(|p| (p[0] << 4) | p[1]).collect();
        let mut cipher_key = [0u8; CIPHER_KEY_LEN];
        let mut auth_key = [0u8; AUTH_KEY_LEN];
        cipher_key.copy_from_slice(&bytes[..CIPHER_KEY_LEN]);
        auth_key.copy_from_slice(&bytes[CIPHER_KEY_LEN..]);
        Ok(Self::new(cipher_key, auth_key))
    }

    /// Renders the key in the format accepted by [`StaticKey::parse_key_file`].
    pub fn to_key_file(&self) -> String {
        let mut out = String::from("# vtunnel static key (AES-128-CBC cipher key, HMAC-SHA1 auth key)\n");
        let hex = format!("{}{}", hex::encode(self.cipher_key), hex::encode(self.auth_key));
        for chunk in hex.as_bytes().chunks(36) {
            out.push_str(std::str::from_utf8(chunk).expect("hex is ascii"));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MsgType {
    Data,
    Ping,
}

impl MsgType {
    pub fn to_byte(self) -> u8 {
        match self {
            MsgType::Data => 0x00,
            MsgType::Ping => 0x01,
        }
    }

    pub fn from_byte(b: u8) -> Option<Self> {
        match b {
            0x00 => Some(MsgType::Data),
            0x01 => Some(MsgType::Ping),
            _ => None,
        }
    }
}

/// The authenticated plaintext carried inside one packet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlainRecord {
    pub msg_type: MsgType,
    pub seq: u32,
    pub comp_flag: CompFlag,
    pub body: Vec<u8>,
}

impl PlainRecord {
    pub fn data(seq: u32, comp_flag: CompFlag, body: Vec<u8>) -> Self {
        Self { msg_type: MsgType::Data, seq, comp_flag, body }
    }

    pub fn ping(seq: u32) -> Self {
        Self { msg_type: MsgType::Ping, seq, comp_flag: CompFlag::Raw, body: PING_MAGIC.to_vec() }
    }

    fn deserialize(mut plain: Vec<u8>) -> Result<Self, CodecError> {
        if plain.len() < RECORD_HEADER_LEN {
            return Err(CodecError::Format);
        }
        let msg_type = MsgType::from_byte(plain[0]).ok_or(CodecError::Format)?;
        let seq = u32::from_be_bytes([plain[1], plain[2], plain[3], plain[4]]);
        let comp_flag = CompFlag::from_byte(plain[5]).ok_or(CodecError::Format)?;
        plain.drain(..RECORD_HEADER_LEN);
        if msg_type == MsgType::Ping && (comp_flag != CompFlag::Raw || plain != PING_MAGIC) {
            return Err(CodecError::Format);
        }
        Ok(Self { msg_type, seq, comp_flag, body: plain })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WirePacket {
    pub tag: [u8; TAG_LEN],
    pub iv: Iv,
    pub ciphertext: Vec<u8>,
}

impl WirePacket {
    pub fn len(&self) -> usize {
        TAG_LEN + IV_LEN + self.ciphertext.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.len());
        out.extend_from_slice(&self.tag);
        out.extend_from_slice(&self.iv);
        out.extend_from_slice(&self.ciphertext);
        out
    }

    /// Splits raw bytes into their parts, checking only the length structure.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CodecError> {
        if bytes.len() < MIN_WIRE_LEN {
            return Err(CodecError::Format);
        }
        let ciphertext = &bytes[TAG_LEN + IV_LEN..];
        if !ciphertext.len().is_multiple_of(BLOCK_LEN) || ciphertext.len() > MAX_CIPHERTEXT_LEN {
            return Err(CodecError::Format);
        }
        let mut tag = [0u8; TAG_LEN];
        let mut iv = [0u8; IV_LEN];
        tag.copy_from_slice(&bytes[..TAG_LEN]);
        iv.copy_from_slice(&bytes[TAG_LEN..TAG_LEN + IV_LEN]);
        Ok(Self { tag, iv, ciphertext: ciphertext.to_vec() })
    }
}

/// Ciphertext length for a record whose body is `body_len` bytes.
pub fn ciphertext_len(body_len: usize) -> usize {
    (RECORD_HEADER_LEN + body_len) / BLOCK_LEN * BLOCK_LEN + BLOCK_LEN
}

/// Total sealed size on the wire for a record whose body is `body_len` bytes.
pub fn sealed_len(body_len: usize) -> usize {
    TAG_LEN + IV_LEN + ciphertext_len(body_len)
}

fn tag_of(key: &StaticKey, iv_and_ciphertext: &[u8]) -> HmacSha1 {
    let mut mac = key.mac.clone();
    mac.update(iv_and_ciphertext);
    mac
}

/// Seals a record given by parts straight into wire bytes.
pub fn seal_parts(
    msg_type: MsgType,
    seq: u32,
    comp_flag: CompFlag,
    body: &[u8],
    key: &StaticKey,
    iv: &Iv,
) -> Result<Vec<u8>, CodecError> {
    let ct_len = ciphertext_len(body.len());
    if body.len() > MAX_BODY_LEN || ct_len > MAX_CIPHERTEXT_LEN {
        return Err(CodecError::Size);
    }
    let head = TAG_LEN + IV_LEN;
    let mut out = Vec::with_capacity(head + ct_len);
    out.extend_from_slice(&[0u8; TAG_LEN]);
    out.extend_from_slice(iv);
    out.push(msg_type.to_byte());
    out.extend_from_slice(&seq.to_be_bytes());
    out.push(comp_flag.to_byte());
    out.extend_from_slice(body);
    let msg_len = out.len() - head;
    out.resize(head + ct_len, 0);
    Aes128CbcEnc::inner_iv_init(key.cipher.clone(), iv.into())
        .encrypt_padded_mut::<Pkcs7>(&mut out[head..], msg_len)
        .expect("buffer sized for padding");
    let tag = tag_of(key, &out[TAG_LEN..]).finalize().into_bytes();
    out[..TAG_LEN].copy_from_slice(&tag);
    Ok(out)
}

pub fn seal(record: &PlainRecord, key: &StaticKey, iv: &Iv) -> Result<WirePacket, CodecError> {
    let wire = seal_parts(record.msg_type, record.seq, record.comp_flag, &record.body, key, iv)?;
    WirePacket::from_bytes(&wire)
}

pub fn open(packet: &[u8], key: &StaticKey) -> Result<PlainRecord, CodecError> {
    if packet.len() < MIN_WIRE_LEN {
        return Err(CodecError::Format);
    }
    let ciphertext = &packet[TAG_LEN + IV_LEN..];
    if !ciphertext.len().is_multiple_of(BLOCK_LEN) || ciphertext.len() > MAX_CIPHERTEXT_LEN {
        return Err(CodecError::Format);
    }
    // verify_slice compares in constant time
    tag_of(key, &packet[TAG_LEN..]).verify_slice(&packet[..TAG_LEN]).map_err(|_| CodecError::Auth)?;
    let iv: &Iv = packet[TAG_LEN..TAG_LEN + IV_LEN].try_into().expect("iv slice");
    let mut plain = ciphertext.to_vec();
    let n = Aes128CbcDec::inner_iv_init(key.cipher.clone(), iv.into())
        .decrypt_padded_mut::<Pkcs7>(&mut plain)
        .map_err(|_| CodecError::Padding)?
        .len();
    plain.truncate(n);
    PlainRecord::deserialize(plain)
}

/// Raw single-block AES-128 encryption, exposed for known-answer testing.
pub fn aes128_encrypt_block(key: &[u8; 16], block: &[u8; 16]) -> [u8; 16] {
    let cipher = aes::Aes128::new(key.into());
    let mut b = (*block).into();
    cipher.encrypt_block(&mut b);
    b.into()
}

/// HMAC-SHA1 of `data`, exposed for known-answer testing.
pub fn hmac_sha1(key: &[u8], data: &[u8]) -> [u8; 20] {
    let mut mac = <HmacSha1 as Mac>::new_from_slice(key).expect("hmac accepts any key size");
    mac.update(data);
    mac.finalize().into_bytes().into()
}

/// Draws a fresh IV from `rng`.
pub fn fresh_iv<R: RngCore + CryptoRng>(rng: &mut R) -> Iv {
    let mut iv = [0u8; IV_LEN];
    rng.fill_bytes(&mut iv);
    iv
}
