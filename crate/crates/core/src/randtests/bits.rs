//! Bit extraction from records and the packed bitfile format.
//!
//! Bitfile layout: an 8-byte little-endian bit count, then the bits packed
//! most significant bit first, with the trailing partial byte zero-padded.

use std::io::{self, Read, Write};
use std::str::FromStr;

use crate::model::Sign;
use crate::sampler::Record;

use super::RandTestError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BitPolicy {
    /// One bit per record from `a`.
    Left,
    /// One bit per record from `b`.
    Right,
    /// `a` then `b`, two bits per record.
    Interleaved,
    /// 1 when `a · b = −1`.
    Xor,
}

impl BitPolicy {
    pub const ALL: [BitPolicy; 4] = [
        BitPolicy::Left,
        BitPolicy::Right,
        BitPolicy::Interleaved,
        BitPolicy::Xor,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BitPolicy::Left => "left",
            BitPolicy::Right => "right",
            BitPolicy::Interleaved => "interleaved",
            BitPolicy::Xor => "xor",
        }
    }
}

impl FromStr for BitPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BitPolicy::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown bit policy {s:?}; expected left, right, interleaved or xor"))
    }
}

/// A sequence of bits, one `bool` per bit.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BitStream(Vec<bool>);

impl BitStream {
    pub fn new(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn ones(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![false; n])
    }

    /// `0101…` of length `n`.
    pub fn alternating(n: usize) -> Self {
        Self((0..n).map(|k| k % 2 == 1).collect())
    }

    pub fn write_packed<W: Write>(&self, mut out: W) -> io::Result<()> {
        out.write_all(&(self.0.len() as u64).to_le_bytes())?;
        let packed: Vec<u8> = self
            .0
            .chunks(8)
            .map(|chunk| {
                chunk
                    .iter()
                    .enumerate()
                    .fold(0u8, |byte, (k, &bit)| byte | (u8::from(bit) << (7 - k)))
            })
            .collect();
        out.write_all(&packed)
    }

    pub fn read_packed<R: Read>(mut input: R) -> Result<Self, RandTestError> {
        let mut header = [0u8; 8];
        input
            .read_exact(&mut header)
            .map_err(|e| RandTestError::BitFile(format!("missing bit-count header: {e}")))?;
        let n = u64::from_le_bytes(header);
        let mut body = Vec::new();
        input.read_to_end(&mut body)?;
        let need = n.div_ceil(8);
        if body.len() as u64 != need {
            return Err(RandTestError::BitFile(format!(
                "header declares {n} bits ({need} bytes) but body has {} bytes",
                body.len()
            )));
        }
        let n = n as usize;
        let bits = (0..n).map(|k| body[k / 8] & (0x80 >> (k % 8)) != 0).collect();
        Ok(Self(bits))
    }
}

impl FromStr for BitStream {
    type Err = String;

    /// Parses a string of `0` and `1` characters.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(format!("invalid bit character {other:?}")),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Self)
    }
}

impl std::fmt::Display for BitStream {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

fn sign_bit(s: Sign) -> bool {
    s == Sign::Plus
}

pub fn extract_bits<'a>(records: impl IntoIterator<Item = &'a Record>, policy: BitPolicy) -> BitStream {
    let mut out = Vec::new();
    for r in records {
        match policy {
            BitPolicy::Left => out.push(sign_bit(r.a)),
            BitPolicy::Right => out.push(sign_bit(r.b)),
            BitPolicy::Interleaved => {
                out.push(sign_bit(r.a));
                out.push(sign_bit(r.b));
            }
            BitPolicy::Xor => out.push(r.a != r.b),
        }
    }
    BitStream(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SettingIndex::One;
    use crate::model::Sign::{Minus, Plus};

    #[test]
    fn extraction_policies() {
        let rs = [Record::new(Plus, Minus, One, One)];
        assert_eq!(extract_bits(&rs, BitPolicy::Left).to_string(), "1");
        assert_eq!(extract_bits(&rs, BitPolicy::Right).to_string(), "0");
        assert_eq!(extract_bits(&rs, BitPolicy::Interleaved).to_string(), "10");
        assert_eq!(extract_bits(&rs, BitPolicy::Xor).to_string(), "1");
        let rs = [Record::new(Minus, Minus, One, One)];
        assert_eq!(extract_bits(&rs, BitPolicy::Xor).to_string(), "0");
    }

    #[test]
    fn packed_layout_is_msb_first_with_count_header() {
        let bits: BitStream = "1011000011".parse().unwrap();
        let mut buf = Vec::new();
        bits.write_packed(&mut buf).unwrap();
        assert_eq!(buf, [10, 0, 0, 0, 0, 0, 0, 0, 0b1011_0000, 0b1100_0000]);
        assert_eq!(BitStream::read_packed(&buf[..]).unwrap(), bits);
    }

    #[test]
    fn packed_rejects_bad_lengths() {
        assert!(BitStream::read_packed(&[1u8, 0, 0][..]).is_err());
        assert!(BitStream::read_packed(&[9u8, 0, 0, 0, 0, 0, 0, 0, 0xff][..]).is_err());
        let empty = [0u8; 8];
        assert!(BitStream::read_packed(&empty[..]).unwrap().is_empty());
    }
}
