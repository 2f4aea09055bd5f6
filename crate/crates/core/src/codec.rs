//! Packlets and signaling packets.
//!
//! A packlet is laid out like a complete IEEE 802.15.4 PHY frame:
//!
//! ```text
//! | preamble (0x00 x P) | SFD | length | payload (counter, ...) | FCS hi | FCS lo |
//! ```
//!
//! A signaling packet is `n_tx` packlets sent back to back in a single
//! transmission. In [`TxMode::Looping`] every length field is the packlet
//! length; in [`TxMode::Buffered`] the first length field carries the
//! length of the whole frame and the radio appends a trailing footer.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::error::{Error, Result};
use crate::time::Nanos;

pub const DEFAULT_SFD: u8 = 0xA7;
pub const PREAMBLE_BYTE: u8 = 0x00;
pub const FCS_LEN: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PackletConfig {
    /// Preamble length in bytes, 1..=8.
    pub preamble_len: u8,
    pub sfd: u8,
    /// Payload length in bytes; the first payload byte is the counter.
    pub payload_len: u8,
    /// Bits per second.
    pub bitrate: u32,
}

impl Default for PackletConfig {
    fn default() -> Self {
        PackletConfig {
            preamble_len: 2,
            sfd: DEFAULT_SFD,
            payload_len: 1,
            bitrate: 250_000,
        }
    }
}

impl PackletConfig {
    /// The 4-byte preamble used by standard-compliant radios.
    pub fn compliant() -> Self {
        PackletConfig {
            preamble_len: 4,
            ..Self::default()
        }
    }

    pub fn with_preamble(mut self, preamble_len: u8) -> Self {
        self.preamble_len = preamble_len;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=8).contains(&self.preamble_len) {
            return Err(Error::InvalidConfig("preamble_len must be in 1..=8"));
        }
        if self.payload_len == 0 {
            return Err(Error::InvalidConfig("payload_len must be at least 1"));
        }
        if self.bitrate == 0 {
            return Err(Error::InvalidConfig("bitrate must be positive"));
        }
        Ok(())
    }

    /// Preamble + SFD + length + payload + FCS.
    pub fn packlet_size_bytes(&self) -> usize {
        self.preamble_len as usize + 1 + 1 + self.payload_len as usize + FCS_LEN
    }

    /// Value of a regular length field: payload plus FCS.
    pub fn packlet_length_field(&self) -> u8 {
        self.payload_len + FCS_LEN as u8
    }

    /// Offset of the length field inside a packlet.
    fn header_len(&self) -> usize {
        self.preamble_len as usize + 2
    }

    /// Air time of `bytes` bytes.
    pub fn bytes_duration(&self, bytes: usize) -> Nanos {
        let bits = bytes as u128 * 8;
        Nanos(((bits * 1_000_000_000) / self.bitrate as u128) as i64)
    }

    pub fn byte_time(&self) -> Nanos {
        self.bytes_duration(1)
    }

    /// How late after a packlet's first bit a receiver may start listening
    /// and still catch one full preamble byte before the SFD.
    pub fn lock_slack(&self) -> Nanos {
        self.bytes_duration(self.preamble_len as usize - 1)
    }
}

/// Air time of one packlet, `packlet_size_bytes * 8 / bitrate`.
pub fn packlet_duration(config: &PackletConfig) -> Nanos {
    config.bytes_duration(config.packlet_size_bytes())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TxMode {
    /// TXFIFO looping: length fields are ignored by the transmitter.
    Looping,
    /// Buffered: the first length field covers the whole frame and the
    /// hardware appends a footer.
    Buffered,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Packlet {
    pub counter: u8,
    pub length_field: u8,
    pub fcs: u16,
    pub payload: Vec<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SignalingPacket {
    pub config: PackletConfig,
    pub n_tx: u32,
    pub start_counter: u32,
    pub mode: TxMode,
}

impl SignalingPacket {
    pub fn new(config: PackletConfig, n_tx: u32, start_counter: u32, mode: TxMode) -> Result<Self> {
        config.validate()?;
        if n_tx == 0 {
            return Err(Error::InvalidConfig("n_tx must be at least 1"));
        }
        if start_counter + n_tx > 256 {
            return Err(Error::CounterOverflow {
                start: start_counter,
                count: n_tx,
            });
        }
        let packet = SignalingPacket {
            config,
            n_tx,
            start_counter,
            mode,
        };
        if mode == TxMode::Buffered && packet.frame_length() > u8::MAX as usize {
            return Err(Error::InvalidConfig(
                "buffered frame length does not fit the length field",
            ));
        }
        Ok(packet)
    }

    /// Total on-air bytes, including the buffered-mode footer.
    pub fn encoded_len(&self) -> usize {
        let body = self.n_tx as usize * self.config.packlet_size_bytes();
        match self.mode {
            TxMode::Looping => body,
            TxMode::Buffered => body + FCS_LEN,
        }
    }

    /// Bytes following the first length field: what a buffered-mode
    /// length field announces.
    pub fn frame_length(&self) -> usize {
        self.encoded_len() - self.config.header_len()
    }

    pub fn duration(&self) -> Nanos {
        self.config.bytes_duration(self.encoded_len())
    }

    pub fn encode(&self) -> Vec<u8> {
        let cfg = &self.config;
        let mut out = Vec::with_capacity(self.encoded_len());
        for k in 0..self.n_tx {
            let counter = (self.start_counter + k) as u8;
            let length = if k == 0 && self.mode == TxMode::Buffered {
                self.frame_length() as u8
            } else {
                cfg.packlet_length_field()
            };
            encode_packlet_into(cfg, counter, length, &mut out);
        }
        if self.mode == TxMode::Buffered {
            // Footer computed by the radio over everything after the first
            // length field.
            let fcs = compute_fcs(&out[cfg.header_len()..]);
            out.extend_from_slice(&fcs.to_be_bytes());
        }
        out
    }
}

fn packlet_payload(cfg: &PackletConfig, counter: u8) -> impl Iterator<Item = u8> {
    core::iter::once(counter).chain(core::iter::repeat_n(0, cfg.payload_len as usize - 1))
}

fn encode_packlet_into(cfg: &PackletConfig, counter: u8, length: u8, out: &mut Vec<u8>) {
    out.extend(core::iter::repeat_n(PREAMBLE_BYTE, cfg.preamble_len as usize));
    out.push(cfg.sfd);
    out.push(length);
    let start = out.len();
    out.extend(packlet_payload(cfg, counter));
    let fcs = compute_fcs(&out[start..]);
    out.extend_from_slice(&fcs.to_be_bytes());
}

/// Serializes one signaling packet.
pub fn build_signaling_packet(config: PackletConfig, n_tx: u32, start_counter: u32, mode: TxMode) -> Result<Vec<u8>> {
    Ok(SignalingPacket::new(config, n_tx, start_counter, mode)?.encode())
}

const FCS_TABLE: [u16; 256] = {
    // CRC-16/ITU-T (x^16 + x^12 + x^5 + 1), reflected.
    let mut table = [0u16; 256];
    let mut i = 0;
    while i < 256 {
        let mut crc = i as u16;
        let mut bit = 0;
        while bit < 8 {
            crc = if crc & 1 != 0 { (crc >> 1) ^ 0x8408 } else { crc >> 1 };
            bit += 1;
        }
        table[i] = crc;
        i += 1;
    }
    table
};

/// 802.15.4 FCS: ITU-T CRC-16, initial value 0, LSB-first bit order.
pub fn compute_fcs(payload: &[u8]) -> u16 {
    payload.iter().fold(0u16, |crc, &b| {
        (crc >> 8) ^ FCS_TABLE[((crc ^ b as u16) & 0xff) as usize]
    })
}

/// Reads eight bits starting at `bit`, least-significant bit first, the
/// order in which bytes go on air.
fn byte_at_bit(stream: &[u8], bit: usize) -> Option<u8> {
    if bit + 8 > stream.len() * 8 {
        return None;
    }
    let (idx, shift) = (bit / 8, bit % 8);
    if shift == 0 {
        return Some(stream[idx]);
    }
    let lo = stream[idx] >> shift;
    let hi = stream[idx + 1] << (8 - shift);
    Some(lo | hi)
}

/// Finds the first packlet whose preamble byte and SFD start at or after
/// `start_bit_offset` and whose length and FCS check out.
///
/// Candidates with a wrong length field or a bad FCS are skipped, so a
/// corrupted packlet behaves like a dropped one and scanning carries on
/// with the next boundary. Returns the packlet and the bit offset just
/// past its FCS.
pub fn scan_for_packlet(config: &PackletConfig, stream: &[u8], start_bit_offset: usize) -> Option<(Packlet, usize)> {
    let payload_len = config.payload_len as usize;
    let total_bits = stream.len() * 8;
    let mut bit = start_bit_offset;
    while bit + 8 * (3 + payload_len + FCS_LEN) <= total_bits {
        if byte_at_bit(stream, bit) == Some(PREAMBLE_BYTE) && byte_at_bit(stream, bit + 8) == Some(config.sfd) {
            if let Some(found) = decode_after_sfd(config, stream, bit + 16) {
                return Some(found);
            }
        }
        bit += 1;
    }
    None
}

fn decode_after_sfd(config: &PackletConfig, stream: &[u8], bit: usize) -> Option<(Packlet, usize)> {
    let length = byte_at_bit(stream, bit)?;
    if length != config.packlet_length_field() {
        return None;
    }
    let mut payload = Vec::with_capacity(config.payload_len as usize);
    let mut cursor = bit + 8;
    for _ in 0..config.payload_len {
        payload.push(byte_at_bit(stream, cursor)?);
        cursor += 8;
    }
    let hi = byte_at_bit(stream, cursor)?;
    let lo = byte_at_bit(stream, cursor + 8)?;
    let fcs = u16::from_be_bytes([hi, lo]);
    if fcs != compute_fcs(&payload) {
        return None;
    }
    let packlet = Packlet {
        counter: payload[0],
        length_field: length,
        fcs,
        payload,
    };
    Some((packlet, cursor + 16))
}

/// Decodes a byte-aligned packlet image as a receiver locked on its
/// preamble would: preamble, SFD, packlet-sized length field, valid FCS.
pub fn decode_packlet(config: &PackletConfig, bytes: &[u8]) -> Option<Packlet> {
    let header = config.header_len();
    if bytes.len() != config.packlet_size_bytes()
        || bytes[..config.preamble_len as usize]
            .iter()
            .any(|&b| b != PREAMBLE_BYTE)
        || bytes[header - 2] != config.sfd
    {
        return None;
    }
    decode_after_sfd(config, bytes, (header - 1) * 8).map(|(p, _)| p)
}

/// Lowercase, space-separated hex with one packlet per line; a buffered
/// footer gets a line of its own.
pub fn hex_dump(config: &PackletConfig, stream: &[u8]) -> String {
    let mut out = String::new();
    let size = config.packlet_size_bytes();
    for chunk in stream.chunks(size) {
        for (i, b) in chunk.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{b:02x}");
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_packlet_is_seven_bytes_and_224_us() {
        let cfg = PackletConfig::default();
        assert_eq!(cfg.packlet_size_bytes(), 7);
        assert_eq!(packlet_duration(&cfg), Nanos::from_us(224));
        assert_eq!(packlet_duration(&PackletConfig::compliant()), Nanos::from_us(288));
        let two = PackletConfig { payload_len: 2, ..cfg };
        assert_eq!(packlet_duration(&two), Nanos::from_us(256));
    }

    #[test]
    fn config_validation() {
        assert!(PackletConfig {
            payload_len: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(PackletConfig::default().with_preamble(0).validate().is_err());
        assert!(PackletConfig::default().with_preamble(9).validate().is_err());
        assert!(PackletConfig {
            bitrate: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn looping_stream_layout() {
        let cfg = PackletConfig::default();
        let s = build_signaling_packet(cfg, 3, 0, TxMode::Looping).unwrap();
        assert_eq!(s.len(), 21);
        for k in 0..3 {
            let p = &s[k * 7..(k + 1) * 7];
            assert_eq!(&p[..4], &[0x00, 0x00, 0xA7, 0x03]);
            assert_eq!(p[4], k as u8);
        }
    }

    #[test]
    fn counter_overflow_is_rejected() {
        let cfg = PackletConfig::default();
        assert!(build_signaling_packet(cfg, 1, 255, TxMode::Looping).is_ok());
        assert_eq!(
            build_signaling_packet(cfg, 2, 255, TxMode::Looping),
            Err(Error::CounterOverflow { start: 255, count: 2 })
        );
        assert!(build_signaling_packet(cfg, 0, 0, TxMode::Looping).is_err());
    }

    #[test]
    fn buffered_first_length_covers_frame() {
        let p = SignalingPacket::new(PackletConfig::compliant(), 14, 0, TxMode::Buffered).unwrap();
        let s = p.encode();
        assert_eq!(s.len(), 14 * 9 + 2);
        assert_eq!(p.frame_length(), 122);
        assert_eq!(s[5], 122);
        assert_eq!(s[9 + 5], 3);
    }

    #[test]
    fn scan_skips_mid_packlet_start() {
        let cfg = PackletConfig::default();
        let s = build_signaling_packet(cfg, 3, 0, TxMode::Looping).unwrap();
        let (p, next) = scan_for_packlet(&cfg, &s, 0).unwrap();
        assert_eq!(p.counter, 0);
        assert_eq!(next, 56);
        let (p, _) = scan_for_packlet(&cfg, &s, 24).unwrap();
        assert_eq!(p.counter, 1);
        // One preamble byte before the SFD is enough.
        assert_eq!(scan_for_packlet(&cfg, &s, 15 * 8).unwrap().0.counter, 2);
        assert!(scan_for_packlet(&cfg, &s, 15 * 8 + 1).is_none());
    }

    #[test]
    fn scan_rejects_buffered_first_packlet() {
        let cfg = PackletConfig::compliant();
        let s = build_signaling_packet(cfg, 4, 0, TxMode::Buffered).unwrap();
        let (p, _) = scan_for_packlet(&cfg, &s, 0).unwrap();
        assert_eq!(p.counter, 1);
    }

    #[test]
    fn decode_packlet_checks_every_field() {
        let cfg = PackletConfig::default();
        let s = build_signaling_packet(cfg, 1, 9, TxMode::Looping).unwrap();
        assert_eq!(decode_packlet(&cfg, &s).unwrap().counter, 9);
        for i in 0..s.len() {
            let mut bad = s.clone();
            bad[i] ^= 0x10;
            assert!(decode_packlet(&cfg, &bad).is_none(), "byte {i}");
        }
        assert!(decode_packlet(&cfg, &s[..6]).is_none());
    }

    #[test]
    fn hex_dump_one_packlet_per_line() {
        let cfg = PackletConfig::default();
        let s = build_signaling_packet(cfg, 2, 0, TxMode::Looping).unwrap();
        let dump = hex_dump(&cfg, &s);
        let lines: Vec<&str> = dump.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[1].starts_with("00 00 a7 03 01 "));
        assert_eq!(lines[0].split(' ').count(), 7);
    }
}
