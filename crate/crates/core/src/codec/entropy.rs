//! MSB-first bit I/O with order-0 Exp-Golomb codes.

use crate::error::{Error, Result};

#[derive(Clone, Debug, Default)]
pub struct BitWriter {
    bytes: Vec<u8>,
    cur: u8,
    used: u8,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bit_len(&self) -> usize {
        self.bytes.len() * 8 + self.used as usize
    }

    pub fn write_bit(&mut self, bit: bool) {
        self.cur = (self.cur << 1) | bit as u8;
        self.used += 1;
        if self.used == 8 {
            self.bytes.push(self.cur);
            self.cur = 0;
            self.used = 0;
        }
    }

    /// Writes the low `n` bits of `value`, most significant first.
    pub fn write_bits(&mut self, value: u64, n: u32) {
        for i in (0..n).rev() {
            self.write_bit((value >> i) & 1 == 1);
        }
    }

    pub fn write_ue(&mut self, v: u32) {
        let x = v as u64 + 1;
        let len = 64 - x.leading_zeros();
        self.write_bits(0, len - 1);
        self.write_bits(x, len);
    }

    /// `v` must not be `i32::MIN`, which has no 32-bit codeword.
    pub fn write_se(&mut self, v: i32) {
        debug_assert!(v != i32::MIN);
        self.write_ue(se_to_ue(v));
    }

    /// Zero-pads to the next byte boundary.
    pub fn align(&mut self) {
        while self.used != 0 {
            self.write_bit(false);
        }
    }

    pub fn write_bytes(&mut self, b: &[u8]) {
        if self.used == 0 {
            self.bytes.extend_from_slice(b);
        } else {
            b.iter().for_each(|&x| self.write_bits(x as u64, 8));
        }
    }

    pub fn append(&mut self, other: &BitWriter) {
        self.write_bytes(&other.bytes);
        self.write_bits(other.cur as u64, other.used as u32);
    }

    /// Flushes a trailing partial byte (zero-padded).
    pub fn finish(mut self) -> Vec<u8> {
        self.align();
        self.bytes
    }
}

fn se_to_ue(v: i32) -> u32 {
    if v > 0 {
        (2 * v as i64 - 1) as u32
    } else {
        (-2 * v as i64) as u32
    }
}

pub fn ue_len(v: u32) -> usize {
    let x = v as u64 + 1;
    2 * (63 - x.leading_zeros() as usize) + 1
}

pub fn se_len(v: i32) -> usize {
    ue_len(se_to_ue(v))
}

/// Codeword as a '0'/'1' string.
pub fn ue_bits(v: u32) -> String {
    let mut w = BitWriter::new();
    w.write_ue(v);
    bit_string(&w)
}

pub fn se_bits(v: i32) -> String {
    let mut w = BitWriter::new();
    w.write_se(v);
    bit_string(&w)
}

fn bit_string(w: &BitWriter) -> String {
    let n = w.bit_len();
    let bytes = w.clone().finish();
    (0..n).map(|i| if bytes[i / 8] >> (7 - i % 8) & 1 == 1 { '1' } else { '0' }).collect()
}

pub struct BitReader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(data: &'a [u8]) -> Self {
        BitReader { data, pos: 0 }
    }

    /// Position in bits from the start of `data`.
    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn remaining_bits(&self) -> usize {
        self.data.len() * 8 - self.pos
    }

    pub fn error(&self, msg: impl Into<String>) -> Error {
        Error::Bitstream { bit: self.pos, msg: msg.into() }
    }

    pub fn read_bit(&mut self) -> Result<bool> {
        if self.pos >= self.data.len() * 8 {
            return Err(self.error("unexpected end of stream"));
        }
        let b = self.data[self.pos / 8] >> (7 - self.pos % 8) & 1;
        self.pos += 1;
        Ok(b == 1)
    }

    pub fn read_bits(&mut self, n: u32) -> Result<u64> {
        let mut v = 0u64;
        for _ in 0..n {
            v = (v << 1) | self.read_bit()? as u64;
        }
        Ok(v)
    }

    pub fn read_ue(&mut self) -> Result<u32> {
        let start = self.pos;
        let mut zeros = 0u32;
        while !self.read_bit()? {
            zeros += 1;
            if zeros > 32 {
                return Err(Error::Bitstream { bit: start, msg: "Exp-Golomb prefix longer than 32 bits".into() });
            }
        }
        let rest = self.read_bits(zeros)?;
        let x = (1u64 << zeros) | rest;
        u32::try_from(x - 1).map_err(|_| Error::Bitstream { bit: start, msg: "Exp-Golomb value overflows u32".into() })
    }

    pub fn read_se(&mut self) -> Result<i32> {
        let start = self.pos;
        let k = self.read_ue()? as i64;
        let v = if k % 2 == 1 { (k + 1) / 2 } else { -(k / 2) };
        i32::try_from(v).map_err(|_| Error::Bitstream { bit: start, msg: "signed Exp-Golomb value overflows i32".into() })
    }

    pub fn align(&mut self) {
        self.pos = self.pos.div_ceil(8) * 8;
    }

    pub fn read_u8(&mut self) -> Result<u8> {
        Ok(self.read_bits(8)? as u8)
    }

    /// Little-endian u16.
    pub fn read_u16_le(&mut self) -> Result<u16> {
        let lo = self.read_u8()? as u16;
        let hi = self.read_u8()? as u16;
        Ok(lo | hi << 8)
    }
}
