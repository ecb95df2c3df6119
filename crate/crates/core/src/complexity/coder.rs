//! Binary arithmetic coding primitives shared by the built-in estimators.
//!
//! The coder keeps a 32-bit interval `[x1, x2]` and splits it with a 16-bit
//! probability of a one bit. It is carry-less: bytes are emitted once the
//! leading byte of both bounds agrees.

use rustc_hash::FxHashMap;

use super::ComplexityError;

/// Probability scale: `p1` is `P(bit = 1) * 65536`, in `1..=65535`.
pub const PROB_ONE: u32 = 1 << 16;

pub struct Encoder {
    x1: u32,
    x2: u32,
    out: Vec<u8>,
}

impl Default for Encoder {
    fn default() -> Self {
        Self::new()
    }
}

impl Encoder {
    pub fn new() -> Self {
        Self { x1: 0, x2: u32::MAX, out: Vec::new() }
    }

    #[inline]
    pub fn encode(&mut self, bit: bool, p1: u32) {
        debug_assert!(p1 > 0 && p1 < PROB_ONE);
        let range = (self.x2 - self.x1) as u64;
        let xmid = self.x1 + ((range * p1 as u64) >> 16) as u32;
        if bit {
            self.x2 = xmid;
        } else {
            self.x1 = xmid + 1;
        }
        while (self.x1 ^ self.x2) & 0xff00_0000 == 0 {
            self.out.push((self.x2 >> 24) as u8);
            self.x1 <<= 8;
            self.x2 = (self.x2 << 8) | 0xff;
        }
    }

    /// Emits the shortest tail that pins a value inside the final interval,
    /// assuming the decoder pads with zero bytes.
    pub fn finish(mut self) -> Vec<u8> {
        if self.x1 != 0 {
            // Top bytes differ here, so the next byte boundary fits in [x1, x2].
            self.out.push(((self.x1 >> 24) + 1) as u8);
        }
        self.out
    }
}

pub struct Decoder<'a> {
    x1: u32,
    x2: u32,
    x: u32,
    input: &'a [u8],
    pos: usize,
}

impl<'a> Decoder<'a> {
    pub fn new(input: &'a [u8]) -> Self {
        let mut d = Self { x1: 0, x2: u32::MAX, x: 0, input, pos: 0 };
        for _ in 0..4 {
            d.x = (d.x << 8) | d.next_byte() as u32;
        }
        d
    }

    fn next_byte(&mut self) -> u8 {
        let b = self.input.get(self.pos).copied().unwrap_or(0);
        self.pos += 1;
        b
    }

    #[inline]
    pub fn decode(&mut self, p1: u32) -> bool {
        let range = (self.x2 - self.x1) as u64;
        let xmid = self.x1 + ((range * p1 as u64) >> 16) as u32;
        let bit = self.x <= xmid;
        if bit {
            self.x2 = xmid;
        } else {
            self.x1 = xmid + 1;
        }
        while (self.x1 ^ self.x2) & 0xff00_0000 == 0 {
            self.x1 <<= 8;
            self.x2 = (self.x2 << 8) | 0xff;
            self.x = (self.x << 8) | self.next_byte() as u32;
        }
        bit
    }
}

/// Adaptive bit statistics with a Krichevsky–Trofimov estimate.
#[derive(Clone, Copy, Default)]
pub struct BitCounter {
    n0: u16,
    n1: u16,
}

const COUNT_LIMIT: u16 = 4095;

impl BitCounter {
    #[inline]
    pub fn p1(&self) -> u32 {
        let n0 = self.n0 as u64;
        let n1 = self.n1 as u64;
        let p = ((2 * n1 + 1) << 16) / (2 * (n0 + n1) + 2);
        p.clamp(1, PROB_ONE as u64 - 1) as u32
    }

    #[inline]
    pub fn update(&mut self, bit: bool) {
        if bit {
            self.n1 += 1;
        } else {
            self.n0 += 1;
        }
        if self.n0 + self.n1 > COUNT_LIMIT {
            self.n0 = self.n0.div_ceil(2);
            self.n1 = self.n1.div_ceil(2);
        }
    }
}

/// Probability that the next bit is one when exactly `ones` of the
/// `total` equally likely completions start with a one bit.
#[inline]
pub fn uniform_p1(ones: u64, total: u64) -> u32 {
    (((ones << 16) + total / 2) / total).clamp(1, PROB_ONE as u64 - 1) as u32
}

/// Number of values in `[lo, lo + span)` that are below `q`.
#[inline]
fn valid_in(lo: u64, span: u64, q: u64) -> u64 {
    if lo >= q {
        0
    } else {
        span.min(q - lo)
    }
}

/// Walks the binary decomposition of a symbol in `[0, q)`, most significant
/// bit first. `choose(node, ones, total)` is called for every decision that
/// is not forced and returns the bit taken; `node` is the prefix so far with
/// a leading one bit (the root is 1). Returns the resulting symbol.
#[inline]
pub fn walk_symbol(q: u64, width: u32, mut choose: impl FnMut(u32, u64, u64) -> bool) -> u64 {
    let mut lo = 0u64;
    let mut node = 1u32;
    for level in (0..width).rev() {
        let half = 1u64 << level;
        let zeros = valid_in(lo, half, q);
        let ones = valid_in(lo + half, half, q);
        let bit = if ones == 0 {
            false
        } else if zeros == 0 {
            true
        } else {
            choose(node, ones, zeros + ones)
        };
        if bit {
            lo += half;
        }
        node = (node << 1) | bit as u32;
    }
    lo
}

/// Bit of `value` chosen at `node` of a width-`width` decomposition.
#[inline]
pub fn bit_at(node: u32, width: u32, value: u64) -> bool {
    let depth = 31 - node.leading_zeros();
    (value >> (width - 1 - depth)) & 1 == 1
}

pub fn encode_uniform(enc: &mut Encoder, value: u64, q: u64) {
    debug_assert!(value < q);
    let width = 64 - (q - 1).leading_zeros();
    walk_symbol(q, width, |node, ones, total| {
        let bit = bit_at(node, width, value);
        enc.encode(bit, uniform_p1(ones, total));
        bit
    });
}

pub fn decode_uniform(dec: &mut Decoder<'_>, q: u64) -> u64 {
    let width = 64 - (q - 1).leading_zeros();
    walk_symbol(q, width, |_, ones, total| dec.decode(uniform_p1(ones, total)))
}

/// Minimal bit writer for self-delimiting headers.
#[derive(Default)]
pub struct BitWriter {
    bytes: Vec<u8>,
    bits: usize,
}

impl BitWriter {
    pub fn push(&mut self, bit: bool) {
        if self.bits.is_multiple_of(8) {
            self.bytes.push(0);
        }
        if bit {
            *self.bytes.last_mut().unwrap() |= 1 << (self.bits % 8);
        }
        self.bits += 1;
    }

    pub fn push_bits(&mut self, value: u64, count: u32) {
        for j in (0..count).rev() {
            self.push((value >> j) & 1 == 1);
        }
    }

    /// Elias gamma code of `v >= 1`.
    pub fn push_gamma(&mut self, v: u64) {
        assert!(v >= 1);
        let len = 64 - v.leading_zeros();
        for _ in 1..len {
            self.push(false);
        }
        self.push_bits(v, len);
    }

    pub fn push_bytes(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.push_bits(b as u64, 8);
        }
    }

    pub fn bit_len(&self) -> usize {
        self.bits
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }
}

pub struct BitReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    pub fn read(&mut self) -> Result<bool, ComplexityError> {
        let byte = self
            .bytes
            .get(self.pos / 8)
            .ok_or_else(|| ComplexityError::Corrupt("unexpected end of stream".into()))?;
        let bit = (byte >> (self.pos % 8)) & 1 == 1;
        self.pos += 1;
        Ok(bit)
    }

    pub fn read_bits(&mut self, count: u32) -> Result<u64, ComplexityError> {
        let mut v = 0u64;
        for _ in 0..count {
            v = (v << 1) | self.read()? as u64;
        }
        Ok(v)
    }

    pub fn read_gamma(&mut self) -> Result<u64, ComplexityError> {
        let mut zeros = 0u32;
        while !self.read()? {
            zeros += 1;
            if zeros > 63 {
                return Err(ComplexityError::Corrupt("gamma code too long".into()));
            }
        }
        let rest = self.read_bits(zeros)?;
        Ok((1u64 << zeros) | rest)
    }

    pub fn read_bytes(&mut self, count: usize) -> Result<Vec<u8>, ComplexityError> {
        (0..count).map(|_| self.read_bits(8).map(|b| b as u8)).collect()
    }
}

pub fn gamma_len(v: u64) -> usize {
    debug_assert!(v >= 1);
    2 * (64 - v.leading_zeros() as usize) - 1
}

/// Adaptive statistics for symbols in `[0, q)`, coded bit by bit through
/// the binary decomposition, each node conditioned on a caller-supplied
/// context key.
pub struct SymbolStats {
    q: u64,
    width: u32,
    table: FxHashMap<(u128, u32), BitCounter>,
}

impl SymbolStats {
    pub fn new(q: u64) -> Self {
        Self { q, width: 64 - (q - 1).leading_zeros(), table: FxHashMap::default() }
    }

    pub fn encode(&mut self, enc: &mut Encoder, ctx: u128, symbol: u64) {
        let width = self.width;
        let table = &mut self.table;
        walk_symbol(self.q, width, |node, _, _| {
            let bit = bit_at(node, width, symbol);
            let c = table.entry((ctx, node)).or_default();
            enc.encode(bit, c.p1());
            c.update(bit);
            bit
        });
    }

    pub fn decode(&mut self, dec: &mut Decoder<'_>, ctx: u128) -> u64 {
        let table = &mut self.table;
        walk_symbol(self.q, self.width, |node, _, _| {
            let c = table.entry((ctx, node)).or_default();
            let bit = dec.decode(c.p1());
            c.update(bit);
            bit
        })
    }
}

/// Adaptive Elias-gamma style integer code: the bit length is sent in unary
/// through adaptive counters, the mantissa with flat probabilities.
#[derive(Default)]
pub struct GammaStats {
    unary: Vec<BitCounter>,
}

impl GammaStats {
    pub fn encode(&mut self, enc: &mut Encoder, v: u64) {
        debug_assert!(v >= 1);
        let len = 64 - v.leading_zeros() as usize;
        if self.unary.len() < 64 {
            self.unary.resize(64, BitCounter::default());
        }
        for i in 1..=len {
            let more = i < len;
            let c = &mut self.unary[i - 1];
            enc.encode(more, c.p1());
            c.update(more);
        }
        for j in (0..len - 1).rev() {
            enc.encode((v >> j) & 1 == 1, PROB_ONE / 2);
        }
    }

    pub fn decode(&mut self, dec: &mut Decoder<'_>) -> Result<u64, ComplexityError> {
        if self.unary.len() < 64 {
            self.unary.resize(64, BitCounter::default());
        }
        let mut len = 1usize;
        loop {
            let c = &mut self.unary[len - 1];
            let more = dec.decode(c.p1());
            c.update(more);
            if !more {
                break;
            }
            len += 1;
            if len > 63 {
                return Err(ComplexityError::Corrupt("integer code too long".into()));
            }
        }
        let mut v = 1u64;
        for _ in 0..len - 1 {
            v = (v << 1) | dec.decode(PROB_ONE / 2) as u64;
        }
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_round_trip_with_skewed_and_uniform_bits() {
        let mut enc = Encoder::new();
        let mut counter = BitCounter::default();
        let bits: Vec<bool> = (0..5000u32).map(|i| i.wrapping_mul(2654435761) % 7 == 0).collect();
        for &b in &bits {
            enc.encode(b, counter.p1());
            counter.update(b);
        }
        for v in 0..300u64 {
            encode_uniform(&mut enc, v % 37, 37);
        }
        let bytes = enc.finish();
        let mut dec = Decoder::new(&bytes);
        let mut counter = BitCounter::default();
        for &b in &bits {
            let got = dec.decode(counter.p1());
            counter.update(got);
            assert_eq!(got, b);
        }
        for v in 0..300u64 {
            assert_eq!(decode_uniform(&mut dec, 37), v % 37);
        }
    }

    #[test]
    fn uniform_power_of_two_costs_exact_bits() {
        let mut enc = Encoder::new();
        for v in 0..8000u64 {
            encode_uniform(&mut enc, v % 4, 4);
        }
        let bytes = enc.finish();
        assert!(bytes.len() <= 8000 * 2 / 8 + 1);
    }

    #[test]
    fn gamma_and_header_bits() {
        let mut w = BitWriter::default();
        for v in [1u64, 2, 3, 17, 1 << 40] {
            w.push_gamma(v);
        }
        assert_eq!(w.bit_len(), [1u64, 2, 3, 17, 1 << 40].iter().map(|&v| gamma_len(v)).sum::<usize>());
        let bytes = w.into_bytes();
        let mut r = BitReader::new(&bytes);
        for v in [1u64, 2, 3, 17, 1 << 40] {
            assert_eq!(r.read_gamma().unwrap(), v);
        }
    }

    #[test]
    fn adaptive_integer_code_round_trip() {
        let values: Vec<u64> = (1..400).map(|i| (i * i) % 1000 + 1).collect();
        let mut enc = Encoder::new();
        let mut g = GammaStats::default();
        let mut s = SymbolStats::new(5);
        for &v in &values {
            g.encode(&mut enc, v);
            s.encode(&mut enc, (v % 3) as u128, v % 5);
        }
        let bytes = enc.finish();
        let mut dec = Decoder::new(&bytes);
        let mut g = GammaStats::default();
        let mut s = SymbolStats::new(5);
        for &v in &values {
            assert_eq!(g.decode(&mut dec).unwrap(), v);
            assert_eq!(s.decode(&mut dec, (v % 3) as u128), v % 5);
        }
    }
}
