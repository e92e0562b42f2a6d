//! Bit-packed streams with an explicit bit count.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Raw bytes plus the number of valid bits, MSB-first within each byte.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bitstream {
    bytes: Vec<u8>,
    bit_len: usize,
}

impl Bitstream {
    pub fn from_parts(bytes: Vec<u8>, bit_len: usize) -> Result<Self> {
        if bit_len > bytes.len() * 8 {
            return Err(Error::TruncatedBitstream {
                declared: bit_len,
                available: bytes.len() * 8,
            });
        }
        Ok(Bitstream { bytes, bit_len })
    }

    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn bit_len(&self) -> usize {
        self.bit_len
    }
}

impl Serialize for Bitstream {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr<'a> {
            bits: usize,
            hex: &'a str,
        }
        let hex: String = self.bytes.iter().map(|b| format!("{b:02x}")).collect();
        Repr {
            bits: self.bit_len,
            hex: &hex,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Bitstream {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            bits: usize,
            hex: String,
        }
        let repr = Repr::deserialize(deserializer)?;
        if repr.hex.len() % 2 != 0 {
            return Err(serde::de::Error::custom("odd hex length"));
        }
        let bytes = (0..repr.hex.len() / 2)
            .map(|i| u8::from_str_radix(&repr.hex[2 * i..2 * i + 2], 16))
            .collect::<std::result::Result<Vec<u8>, _>>()
            .map_err(serde::de::Error::custom)?;
        Bitstream::from_parts(bytes, repr.bits).map_err(serde::de::Error::custom)
    }
}

/// Accumulates bits MSB-first.
#[derive(Debug, Default)]
pub(crate) struct BitWriter {
    bytes: Vec<u8>,
    bit_len: usize,
}

impl BitWriter {
    pub(crate) fn new() -> Self {
        Self::default()
    }

    pub(crate) fn push(&mut self, bit: bool) {
        let byte_idx = self.bit_len / 8;
        if byte_idx == self.bytes.len() {
            self.bytes.push(0);
        }
        if bit {
            self.bytes[byte_idx] |= 1 << (7 - self.bit_len % 8);
        }
        self.bit_len += 1;
    }

    pub(crate) fn finish(self) -> Bitstream {
        Bitstream {
            bytes: self.bytes,
            bit_len: self.bit_len,
        }
    }
}

/// Reads bits MSB-first; positions past the declared length read as 0, which
/// matches the encoder's zero-extension convention.
#[derive(Debug)]
pub(crate) struct BitReader<'a> {
    stream: &'a Bitstream,
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub(crate) fn new(stream: &'a Bitstream) -> Self {
        BitReader { stream, pos: 0 }
    }

    pub(crate) fn next(&mut self) -> bool {
        if self.pos >= self.stream.bit_len {
            self.pos += 1;
            return false;
        }
        let byte = self.stream.bytes[self.pos / 8];
        let bit = byte >> (7 - self.pos % 8) & 1 == 1;
        self.pos += 1;
        bit
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writes_and_reads_back() {
        let mut w = BitWriter::new();
        for &b in &[true, false, true, true, false, false, false, true, true, false] {
            w.push(b);
        }
        let s = w.finish();
        assert_eq!(s.bit_len(), 10);
        let mut r = BitReader::new(&s);
        let got: Vec<bool> = (0..10).map(|_| r.next()).collect();
        assert_eq!(got, vec![true, false, true, true, false, false, false, true, true, false]);
        // Past the end reads zero.
        assert!(!r.next());
    }

    #[test]
    fn rejects_declared_length_beyond_bytes() {
        assert!(Bitstream::from_parts(vec![0xff], 9).is_err());
        assert!(Bitstream::from_parts(vec![0xff], 8).is_ok());
    }

    #[test]
    fn serde_roundtrip() {
        let s = Bitstream::from_parts(vec![0xde, 0xad], 13).unwrap();
        let json = serde_json::to_string(&s).unwrap();
        let back: Bitstream = serde_json::from_str(&json).unwrap();
        assert_eq!(s, back);
    }
}
