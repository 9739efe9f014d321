//! Adaptive Golomb-Rice residual coding and MSB-first bit I/O.
//!
//! This coder is the sole source of bit costs in the system: mode decisions,
//! split decisions, and the trainer's bitrate objective all use the exact
//! number of bits the coder would emit. Cost queries therefore run on value
//! snapshots of the context and are guaranteed to match later emission.

use crate::{Error, Result};

/// Unary quotient cap. A run of `ESCAPE_Q` ones (with no terminating zero)
/// switches to a 9-bit raw escape for the mapped value.
pub const ESCAPE_Q: u32 = 24;
const ESCAPE_RAW_BITS: u32 = 9;
const K_MAX: u32 = 15;
/// Renormalization threshold for the running statistics.
const RENORM_N: u32 = 64;

/// MSB-first bit writer with byte-aligned flush.
#[derive(Debug, Default, Clone)]
pub struct BitSink {
    bytes: Vec<u8>,
    cur: u8,
    filled: u8,
}

impl BitSink {
    pub fn new() -> BitSink {
        BitSink::default()
    }

    #[inline]
    pub fn push_bit(&mut self, bit: u32) {
        self.cur = (self.cur << 1) | (bit as u8 & 1);
        self.filled += 1;
        if self.filled == 8 {
            self.bytes.push(self.cur);
            self.cur = 0;
            self.filled = 0;
        }
    }

    /// Writes the `n` low bits of `v`, most significant first.
    pub fn push_bits(&mut self, v: u32, n: u32) {
        debug_assert!(n <= 32);
        for i in (0..n).rev() {
            self.push_bit((v >> i) & 1);
        }
    }

    /// Total bits written so far (before padding).
    #[inline]
    pub fn bit_len(&self) -> u64 {
        self.bytes.len() as u64 * 8 + self.filled as u64
    }

    /// Zero-pads to a byte boundary and returns the buffer.
    pub fn finish(mut self) -> Vec<u8> {
        if self.filled > 0 {
            self.cur <<= 8 - self.filled;
            self.bytes.push(self.cur);
        }
        self.bytes
    }
}

/// MSB-first bit reader. Reading past the end is a malformed-stream error.
#[derive(Debug, Clone)]
pub struct BitSource<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> BitSource<'a> {
    pub fn new(data: &'a [u8]) -> BitSource<'a> {
        BitSource { data, pos: 0 }
    }

    #[inline]
    pub fn read_bit(&mut self) -> Result<u32> {
        let byte = self
            .data
            .get(self.pos >> 3)
            .ok_or(Error::MalformedStream("bit source exhausted"))?;
        let bit = (byte >> (7 - (self.pos & 7))) & 1;
        self.pos += 1;
        Ok(bit as u32)
    }

    pub fn read_bits(&mut self, n: u32) -> Result<u32> {
        debug_assert!(n <= 32);
        let mut v = 0;
        for _ in 0..n {
            v = (v << 1) | self.read_bit()?;
        }
        Ok(v)
    }

    pub fn bits_consumed(&self) -> u64 {
        self.pos as u64
    }
}

/// Interleaved sign mapping: residual `r` in [-255, 255] to `m` in [0, 510].
#[inline]
pub fn map_residual(r: i32) -> u32 {
    debug_assert!((-255..=255).contains(&r));
    if r >= 0 {
        (2 * r) as u32
    } else {
        (-2 * r - 1) as u32
    }
}

/// Inverse of `map_residual`.
#[inline]
pub fn unmap_residual(m: u32) -> i32 {
    if m & 1 == 0 {
        (m >> 1) as i32
    } else {
        -(((m + 1) >> 1) as i32)
    }
}

/// Running Golomb-Rice statistics: `n` coded samples, `a` accumulated
/// mapped magnitude. The Rice parameter follows the magnitude average.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RiceContext {
    n: u32,
    a: u32,
}

impl Default for RiceContext {
    fn default() -> Self {
        RiceContext::new()
    }
}

impl RiceContext {
    pub fn new() -> RiceContext {
        RiceContext { n: 1, a: 0 }
    }

    /// Smallest `k >= 0` with `n * 2^k >= a`, capped at 15.
    #[inline]
    pub fn k(&self) -> u32 {
        let mut k = 0;
        while k < K_MAX && (self.n << k) < self.a {
            k += 1;
        }
        k
    }

    #[inline]
    fn update(&mut self, m: u32) {
        self.a += m;
        self.n += 1;
        if self.n >= RENORM_N {
            self.n >>= 1;
            self.a >>= 1;
        }
    }

    /// Bits `rice_encode` would emit for `m` in this state, without coding.
    #[inline]
    pub fn cost(&self, m: u32) -> u32 {
        let k = self.k();
        let q = m >> k;
        if q >= ESCAPE_Q {
            ESCAPE_Q + ESCAPE_RAW_BITS
        } else {
            q + 1 + k
        }
    }
}

/// Codes one mapped residual. Quotient in unary (ones, zero-terminated),
/// remainder in `k` raw bits; quotients of 24 or more escape to a run of
/// 24 ones followed by the 9-bit raw value. Returns the bits written.
pub fn rice_encode(sink: &mut BitSink, ctx: &mut RiceContext, m: u32) -> u32 {
    debug_assert!(m <= 510);
    let k = ctx.k();
    let q = m >> k;
    let bits = if q >= ESCAPE_Q {
        for _ in 0..ESCAPE_Q {
            sink.push_bit(1);
        }
        sink.push_bits(m, ESCAPE_RAW_BITS);
        ESCAPE_Q + ESCAPE_RAW_BITS
    } else {
        for _ in 0..q {
            sink.push_bit(1);
        }
        sink.push_bit(0);
        sink.push_bits(m & ((1 << k) - 1), k);
        q + 1 + k
    };
    ctx.update(m);
    bits
}

/// Exact inverse of `rice_encode`, including the context update.
pub fn rice_decode(source: &mut BitSource<'_>, ctx: &mut RiceContext) -> Result<u32> {
    let k = ctx.k();
    let mut q = 0;
    while q < ESCAPE_Q && source.read_bit()? == 1 {
        q += 1;
    }
    let m = if q == ESCAPE_Q {
        source.read_bits(ESCAPE_RAW_BITS)?
    } else {
        (q << k) | source.read_bits(k)?
    };
    if m > 510 {
        return Err(Error::MalformedStream("mapped residual out of range"));
    }
    ctx.update(m);
    Ok(m)
}

/// Exact bit count for coding `residuals` starting from `ctx`, leaving the
/// live context untouched. Returns the bits and the context state after.
pub fn cost_residual_block(ctx: &RiceContext, residuals: &[i32]) -> (u64, RiceContext) {
    let mut c = *ctx;
    let mut bits = 0u64;
    for &r in residuals {
        let m = map_residual(r);
        bits += c.cost(m) as u64;
        c.update(m);
    }
    (bits, c)
}
