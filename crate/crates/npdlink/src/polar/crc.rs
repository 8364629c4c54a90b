//! Cyclic redundancy checks used for list-decoder path selection.
//!
//! Bits are processed MSB-first with a zero initial register and no
//! reflection or final XOR: the checksum of `data` is the remainder of
//! `data(x) * x^len` divided by the generator polynomial over GF(2).

use crate::bits::Bits;

/// The 11-bit generator from 3GPP TS 38.212 (gCRC11):
/// `x^11 + x^10 + x^9 + x^5 + 1`, low terms `0x621`.
pub const CRC11_POLY: u16 = 0x621;

/// The 6-bit generator from 3GPP TS 38.212 (gCRC6): `x^6 + x^5 + 1`.
pub const CRC6_POLY: u16 = 0x21;

/// A CRC over GF(2) with up to 16 check bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Crc {
    /// Generator with the leading `x^len` term dropped.
    poly: u16,
    len: u32,
}

impl Crc {
    pub fn new(poly: u16, len: u32) -> Self {
        assert!((1..=16).contains(&len));
        assert!(len == 16 || poly < (1 << len), "poly wider than CRC length");
        Crc { poly, len }
    }

    /// The generator for a supported CRC length (the lengths understood by
    /// code designs and configs: 6 or 11 check bits).
    pub fn for_len(len: usize) -> Option<Crc> {
        match len {
            6 => Some(Crc::new(CRC6_POLY, 6)),
            11 => Some(Crc::new(CRC11_POLY, 11)),
            _ => None,
        }
    }

    /// Number of check bits (never zero, so no `is_empty` counterpart).
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.len as usize
    }

    /// Checksum of `data`, MSB (highest power) first.
    pub fn compute(&self, data: &Bits) -> Bits {
        let mask = if self.len == 16 { u16::MAX } else { (1 << self.len) - 1 };
        let mut reg: u16 = 0;
        for i in 0..data.len() {
            let feedback = data[i] ^ ((reg >> (self.len - 1)) as u8 & 1);
            reg = (reg << 1) & mask;
            if feedback == 1 {
                reg ^= self.poly;
            }
        }
        (0..self.len).map(|b| ((reg >> (self.len - 1 - b)) & 1) as u8).collect()
    }

    /// Appends the checksum to `payload`.
    pub fn attach(&self, payload: &Bits) -> Bits {
        payload.concat(&self.compute(payload))
    }

    /// Verifies a `payload ++ checksum` block.
    pub fn check(&self, block: &Bits) -> bool {
        if block.len() < self.len as usize {
            return false;
        }
        let split = block.len() - self.len as usize;
        let payload: Bits = (0..split).map(|i| block[i]).collect();
        let expected = self.compute(&payload);
        (0..self.len as usize).all(|i| block[split + i] == expected[i])
    }
}
