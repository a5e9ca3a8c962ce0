//! MSB-first bit packing with Exp-Golomb codes.

/// Longest Exp-Golomb prefix the reader accepts.
const MAX_PREFIX: u32 = 32;

#[derive(Debug, Default)]
pub struct BitWriter {
    bytes: Vec<u8>,
    acc: u64,
    nbits: u32,
    total: u64,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends the low `n` bits of `value`, `n <= 32`.
    pub fn put(&mut self, value: u64, n: u32) {
        debug_assert!(n <= 32);
        self.acc = (self.acc << n) | (value & ((1u64 << n) - 1));
        self.nbits += n;
        self.total += n as u64;
        while self.nbits >= 8 {
            self.nbits -= 8;
            self.bytes.push((self.acc >> self.nbits) as u8);
        }
        self.acc &= (1u64 << self.nbits) - 1;
    }

    pub fn put_ue(&mut self, v: u64) {
        debug_assert!(v < u32::MAX as u64);
        let x = v + 1;
        let len = 64 - x.leading_zeros();
        if len > 1 {
            self.put(0, len - 1);
        }
        self.put(x, len);
    }

    pub fn put_se(&mut self, v: i64) {
        let mapped = if v > 0 { 2 * v as u64 - 1 } else { 2 * v.unsigned_abs() };
        self.put_ue(mapped);
    }

    /// Bits written so far.
    pub fn position(&self) -> u64 {
        self.total
    }

    /// Pads with zero bits to a byte boundary and returns the buffer.
    pub fn finish(mut self) -> Vec<u8> {
        if self.nbits > 0 {
            let pad = 8 - self.nbits;
            self.put(0, pad);
        }
        self.bytes
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitError {
    /// Ran out of input at this bit position.
    Eof(u64),
    /// Exp-Golomb prefix too long at this bit position.
    Prefix(u64),
}

impl BitError {
    pub fn bit_pos(self) -> u64 {
        match self {
            BitError::Eof(p) | BitError::Prefix(p) => p,
        }
    }
}

pub struct BitReader<'a> {
    data: &'a [u8],
    pos: u64,
}

impl<'a> BitReader<'a> {
    pub fn new(data: &'a [u8]) -> Self {
        Self { data, pos: 0 }
    }

    pub fn bit(&mut self) -> Result<u32, BitError> {
        let byte = (self.pos / 8) as usize;
        let b = *self.data.get(byte).ok_or(BitError::Eof(self.pos))?;
        let v = (b >> (7 - (self.pos % 8))) & 1;
        self.pos += 1;
        Ok(v as u32)
    }

    pub fn get(&mut self, n: u32) -> Result<u64, BitError> {
        let mut v = 0u64;
        for _ in 0..n {
            v = (v << 1) | self.bit()? as u64;
        }
        Ok(v)
    }

    pub fn get_ue(&mut self) -> Result<u64, BitError> {
        let start = self.pos;
        let mut zeros = 0;
        while self.bit()? == 0 {
            zeros += 1;
            if zeros > MAX_PREFIX {
                return Err(BitError::Prefix(start));
            }
        }
        let rest = self.get(zeros)?;
        Ok(((1u64 << zeros) | rest) - 1)
    }

    pub fn get_se(&mut self) -> Result<i64, BitError> {
        let m = self.get_ue()?;
        Ok(if m % 2 == 1 {
            m.div_ceil(2) as i64
        } else {
            -((m / 2) as i64)
        })
    }

    pub fn position(&self) -> u64 {
        self.pos
    }

    /// True when only zero padding remains in the current byte and no
    /// bytes follow it.
    pub fn at_padded_end(&self) -> bool {
        let byte = self.pos.div_ceil(8) as usize;
        if byte != self.data.len() {
            return false;
        }
        let used = (self.pos % 8) as u32;
        if used == 0 {
            return true;
        }
        let last = self.data[byte - 1];
        last & (0xffu8 >> used) == 0
    }
}
