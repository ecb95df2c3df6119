//! Finite symbol strings: the data objects that stand in for the infinite
//! input/output sequences of a non-local game.
//!
//! A [`SymbolString`] holds `n` symbols over the alphabet `{0..q-1}`, packed
//! at `ceil(log2 q)` bits per symbol. Symbol `i` occupies stream bits
//! `[i*w, (i+1)*w)`, where stream bit `k` is bit `k % 8` of byte `k / 8`
//! and the symbol's least-significant bit comes first.
//!
//! Ring-valued strings (chained-Bell inputs) store `{1..m}` as `{0..m-1}`.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Largest alphabet a single string may carry (symbols must fit in 24 bits).
pub const MAX_ALPHABET: u64 = 1 << 24;

#[derive(Debug, Error)]
pub enum StringsError {
    #[error("alphabet size {0} is invalid (need 2 <= q <= 2^24)")]
    BadAlphabet(u64),
    #[error("symbol {symbol} at index {index} is outside alphabet of size {q}")]
    SymbolOutOfRange { index: usize, symbol: u32, q: u32 },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("alphabet mismatch: expected q={expected}, found q={found}")]
    AlphabetMismatch { expected: u32, found: u32 },
    #[error("ring size m={0} must be at least 2")]
    RingTooSmall(u32),
    #[error("unknown string kind `{0}`")]
    UnknownKind(String),
    #[error("malformed .syms data: {0}")]
    Format(String),
    #[error("invalid seed: {0}")]
    BadSeed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, StringsError>;

/// Bits used per symbol for alphabet size `q`.
pub fn bits_per_symbol(q: u32) -> u32 {
    debug_assert!(q >= 2);
    32 - (q - 1).leading_zeros()
}

fn check_alphabet(q: u64) -> Result<u32> {
    if (2..=MAX_ALPHABET).contains(&q) {
        Ok(q as u32)
    } else {
        Err(StringsError::BadAlphabet(q))
    }
}

fn payload_len(n: usize, q: u32) -> usize {
    (n * bits_per_symbol(q) as usize).div_ceil(8)
}

/// A packed string over `{0..q-1}`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SymbolString {
    q: u32,
    n: usize,
    data: Vec<u8>,
}

impl SymbolString {
    pub fn empty(q: u32) -> Result<Self> {
        let q = check_alphabet(q as u64)?;
        Ok(Self { q, n: 0, data: Vec::new() })
    }

    pub fn from_symbols(q: u32, symbols: &[u32]) -> Result<Self> {
        let q = check_alphabet(q as u64)?;
        if let Some((index, &symbol)) = symbols.iter().enumerate().find(|(_, &s)| s >= q) {
            return Err(StringsError::SymbolOutOfRange { index, symbol, q });
        }
        Ok(Self::pack_unchecked(q, symbols))
    }

    fn pack_unchecked(q: u32, symbols: &[u32]) -> Self {
        let w = bits_per_symbol(q) as usize;
        let mut data = vec![0u8; payload_len(symbols.len(), q)];
        let mut bit = 0usize;
        for &s in symbols {
            let mut v = s as u64;
            let mut left = w;
            while left > 0 {
                let byte = bit / 8;
                let off = bit % 8;
                let take = left.min(8 - off);
                let mask = (1u64 << take) - 1;
                data[byte] |= ((v & mask) as u8) << off;
                v >>= take;
                bit += take;
                left -= take;
            }
        }
        Self { q, n: symbols.len(), data }
    }

    /// Rebuilds a string from its packed payload. Padding bits in the last
    /// byte must be zero and no bytes may follow the payload.
    pub fn from_payload(q: u32, n: usize, payload: &[u8]) -> Result<Self> {
        let q = check_alphabet(q as u64)?;
        let expected = payload_len(n, q);
        if payload.len() != expected {
            return Err(StringsError::Format(format!(
                "payload has {} bytes, expected {expected}",
                payload.len()
            )));
        }
        let used_bits = n * bits_per_symbol(q) as usize;
        if !used_bits.is_multiple_of(8) {
            let last = payload[expected - 1];
            if last >> (used_bits % 8) != 0 {
                return Err(StringsError::Format("nonzero padding bits".into()));
            }
        }
        let s = Self { q, n, data: payload.to_vec() };
        if let Some((index, symbol)) = s.iter().enumerate().find(|&(_, v)| v >= q) {
            return Err(StringsError::SymbolOutOfRange { index, symbol, q });
        }
        Ok(s)
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn payload(&self) -> &[u8] {
        &self.data
    }

    pub fn bits_per_symbol(&self) -> u32 {
        bits_per_symbol(self.q)
    }

    pub fn get(&self, i: usize) -> u32 {
        assert!(i < self.n, "index {i} out of bounds for length {}", self.n);
        let w = self.bits_per_symbol() as usize;
        let mut bit = i * w;
        let mut v = 0u32;
        let mut got = 0usize;
        while got < w {
            let off = bit % 8;
            let take = (w - got).min(8 - off);
            let chunk = (self.data[bit / 8] >> off) as u32 & ((1u32 << take) - 1);
            v |= chunk << got;
            got += take;
            bit += take;
        }
        v
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        (0..self.n).map(move |i| self.get(i))
    }

    pub fn to_symbols(&self) -> Vec<u32> {
        self.iter().collect()
    }

    /// Serializes to the `.syms` format: an ASCII header line followed by the payload.
    pub fn to_syms_bytes(&self) -> Vec<u8> {
        let mut out = format!("SYMS q={} n={}\n", self.q, self.n).into_bytes();
        out.extend_from_slice(&self.data);
        out
    }

    pub fn from_syms_bytes(bytes: &[u8]) -> Result<Self> {
        let nl = bytes
            .iter()
            .position(|&c| c == b'\n')
            .ok_or_else(|| StringsError::Format("missing header line".into()))?;
        let header = std::str::from_utf8(&bytes[..nl])
            .map_err(|_| StringsError::Format("header is not ASCII".into()))?;
        let mut parts = header.split(' ');
        if parts.next() != Some("SYMS") {
            return Err(StringsError::Format("header must start with `SYMS`".into()));
        }
        let mut field = |key: &str| -> Result<u64> {
            let tok = parts
                .next()
                .ok_or_else(|| StringsError::Format(format!("missing `{key}=`")))?;
            let v = tok
                .strip_prefix(key)
                .and_then(|t| t.strip_prefix('='))
                .ok_or_else(|| StringsError::Format(format!("expected `{key}=`, got `{tok}`")))?;
            if v.is_empty() || !v.bytes().all(|c| c.is_ascii_digit()) {
                return Err(StringsError::Format(format!("bad integer `{v}`")));
            }
            v.parse().map_err(|_| StringsError::Format(format!("bad integer `{v}`")))
        };
        let q = field("q")?;
        let n = field("n")?;
        if parts.next().is_some() {
            return Err(StringsError::Format("trailing header fields".into()));
        }
        let q = check_alphabet(q)?;
        Self::from_payload(q, n as usize, &bytes[nl + 1..])
    }

    pub fn read_syms(path: &Path) -> Result<Self> {
        Self::from_syms_bytes(&std::fs::read(path)?)
    }

    pub fn write_syms(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(&self.to_syms_bytes())?;
        Ok(())
    }

    /// Symbols shifted to the `{1..q}` display convention.
    pub fn display_one_based(&self) -> String {
        self.iter().map(|s| (s + 1).to_string()).collect::<Vec<_>>().join(",")
    }
}

impl fmt::Debug for SymbolString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SymbolString(q={}, n={}", self.q, self.n)?;
        if self.n <= 64 {
            write!(f, ", [")?;
            for (i, s) in self.iter().enumerate() {
                if i > 0 && self.q > 10 {
                    write!(f, " ")?;
                }
                write!(f, "{s}")?;
            }
            write!(f, "]")?;
        }
        write!(f, ")")
    }
}

/// Position-wise join of equal-length strings into one string over the
/// product alphabet. Position `i` holds `c0 + q0*(c1 + q1*(c2 + ...))`.
///
/// When every alphabet is a power of two this is bit-for-bit the packed
/// layout of the interleaving `a_1 b_1 a_2 b_2 ...`.
pub fn zip(parts: &[&SymbolString]) -> Result<SymbolString> {
    let first = parts
        .first()
        .ok_or_else(|| StringsError::Format("zip of zero strings".into()))?;
    let n = first.len();
    let mut q: u64 = 1;
    for p in parts {
        if p.len() != n {
            return Err(StringsError::LengthMismatch { left: n, right: p.len() });
        }
        q *= p.q() as u64;
        if q > MAX_ALPHABET {
            return Err(StringsError::BadAlphabet(q));
        }
    }
    let q = check_alphabet(q)?;
    let cols: Vec<Vec<u32>> = parts.iter().map(|p| p.to_symbols()).collect();
    let symbols: Vec<u32> = (0..n)
        .map(|i| {
            parts
                .iter()
                .zip(&cols)
                .rev()
                .fold(0u32, |acc, (p, col)| acc * p.q() + col[i])
        })
        .collect();
    Ok(SymbolString::pack_unchecked(q, &symbols))
}

/// 32-byte seed feeding the toolkit's deterministic generators.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Seed(pub [u8; 32]);

impl Seed {
    pub fn from_u64(v: u64) -> Self {
        let mut b = [0u8; 32];
        b[..8].copy_from_slice(&v.to_le_bytes());
        Seed(b)
    }

    /// Independent child seed, `SHA-256(seed || label)`.
    pub fn derive(&self, label: &str) -> Seed {
        let mut h = Sha256::new();
        h.update(self.0);
        h.update(label.as_bytes());
        Seed(h.finalize().into())
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub(crate) fn rng(&self, stream: u64) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::from_seed(self.0);
        rng.set_stream(stream);
        rng
    }
}

impl fmt::Debug for Seed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Seed({})", self.to_hex())
    }
}

impl fmt::Display for Seed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

/// Accepts 64 hex digits or a decimal `u64`.
impl FromStr for Seed {
    type Err = StringsError;

    fn from_str(s: &str) -> Result<Self> {
        if s.len() == 64 {
            let mut b = [0u8; 32];
            hex::decode_to_slice(s, &mut b).map_err(|e| StringsError::BadSeed(e.to_string()))?;
            return Ok(Seed(b));
        }
        s.parse::<u64>()
            .map(Seed::from_u64)
            .map_err(|_| StringsError::BadSeed(format!("`{s}` is neither 64 hex digits nor a u64")))
    }
}

impl Serialize for Seed {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Seed {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Pseudorandom string, uniform over `{0..q-1}`.
///
/// This is the toolkit's stand-in for an incompressible string: its true
/// complexity is bounded by the seed plus `O(log n)`, but no compression
/// estimator here can exploit the generator.
pub fn gen_seeded_random(n: usize, q: u32, seed: &Seed) -> Result<SymbolString> {
    let q = check_alphabet(q as u64)?;
    let mut rng = seed.rng(0);
    let symbols: Vec<u32> = (0..n).map(|_| rng.gen_range(0..q)).collect();
    Ok(SymbolString::pack_unchecked(q, &symbols))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComputableKind {
    Zeros,
    Alternating,
    ThueMorse,
    /// Binary expansions of 0, 1, 2, ... written most-significant bit first.
    Counter,
}

impl FromStr for ComputableKind {
    type Err = StringsError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zeros" => Ok(Self::Zeros),
            "alternating" => Ok(Self::Alternating),
            "thue_morse" => Ok(Self::ThueMorse),
            "counter" => Ok(Self::Counter),
            other => Err(StringsError::UnknownKind(other.to_string())),
        }
    }
}

/// A fixed computable binary sequence (complexity `O(log n)`).
pub fn gen_computable(kind: ComputableKind, n: usize) -> SymbolString {
    let symbols: Vec<u32> = match kind {
        ComputableKind::Zeros => vec![0; n],
        ComputableKind::Alternating => (0..n).map(|i| (i % 2) as u32).collect(),
        ComputableKind::ThueMorse => (0..n).map(|i| (i as u64).count_ones() & 1).collect(),
        ComputableKind::Counter => {
            let mut out = Vec::with_capacity(n);
            let mut k: u64 = 0;
            while out.len() < n {
                let width = (64 - k.leading_zeros()).max(1);
                for j in (0..width).rev() {
                    if out.len() == n {
                        break;
                    }
                    out.push(((k >> j) & 1) as u32);
                }
                k += 1;
            }
            out
        }
    };
    SymbolString::pack_unchecked(2, &symbols)
}

/// Inputs for the chained-Bell game: `a` uniform on the ring and `b` equal
/// to `a` or its successor, chosen by an independent fair bit.
pub fn gen_promise_inputs(m: u32, n: usize, seed: &Seed) -> Result<(SymbolString, SymbolString)> {
    if m < 2 {
        return Err(StringsError::RingTooSmall(m));
    }
    let m = check_alphabet(m as u64)?;
    let mut sym_rng = seed.rng(0);
    let mut step_rng = seed.rng(1);
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    for _ in 0..n {
        let ai = sym_rng.gen_range(0..m);
        let step = step_rng.gen::<bool>() as u32;
        a.push(ai);
        b.push((ai + step) % m);
    }
    Ok((SymbolString::pack_unchecked(m, &a), SymbolString::pack_unchecked(m, &b)))
}

fn same_len(a: &SymbolString, b: &SymbolString) -> Result<()> {
    if a.len() != b.len() {
        return Err(StringsError::LengthMismatch { left: a.len(), right: b.len() });
    }
    Ok(())
}

fn expect_q(s: &SymbolString, q: u32) -> Result<()> {
    if s.q() != q {
        return Err(StringsError::AlphabetMismatch { expected: q, found: s.q() });
    }
    Ok(())
}

/// Position-wise AND of two bit strings.
pub fn pointwise_product(a: &SymbolString, b: &SymbolString) -> Result<SymbolString> {
    expect_q(a, 2)?;
    expect_q(b, 2)?;
    same_len(a, b)?;
    let data = a.data.iter().zip(&b.data).map(|(x, y)| x & y).collect();
    Ok(SymbolString { q: 2, n: a.n, data })
}

/// Indicator of the event `a_i = m, b_i = 1` (stored as `m-1` and `0`).
pub fn chi_event(a: &SymbolString, b: &SymbolString, m: u32) -> Result<SymbolString> {
    expect_q(a, m)?;
    expect_q(b, m)?;
    same_len(a, b)?;
    let symbols: Vec<u32> =
        a.iter().zip(b.iter()).map(|(x, y)| (x == m - 1 && y == 0) as u32).collect();
    Ok(SymbolString::pack_unchecked(2, &symbols))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bits(s: &str) -> SymbolString {
        let v: Vec<u32> = s.bytes().map(|c| (c - b'0') as u32).collect();
        SymbolString::from_symbols(2, &v).unwrap()
    }

    #[test]
    fn packing_layout_is_lsb_first() {
        let s = SymbolString::from_symbols(4, &[1, 2, 3, 0, 1]).unwrap();
        // 01 | 10 | 11 | 00 -> 0b00_11_10_01, then 01
        assert_eq!(s.payload(), &[0b0011_1001, 0b0000_0001]);
        let t = SymbolString::from_symbols(8, &[7, 1, 5]).unwrap();
        // 111 001 101 -> bits 0..9 = 1,1,1,1,0,0,1,0,1
        assert_eq!(t.payload(), &[0b0100_1111, 0b0000_0001]);
        assert_eq!(t.to_symbols(), vec![7, 1, 5]);
    }

    #[test]
    fn rejects_bad_symbols_and_alphabets() {
        assert!(SymbolString::from_symbols(1, &[]).is_err());
        assert!(matches!(
            SymbolString::from_symbols(3, &[0, 3]),
            Err(StringsError::SymbolOutOfRange { index: 1, symbol: 3, q: 3 })
        ));
        // q=3 uses two bits, so the value 3 is representable but illegal.
        assert!(SymbolString::from_payload(3, 1, &[3]).is_err());
    }

    #[test]
    fn syms_format() {
        let z = gen_computable(ComputableKind::Zeros, 4);
        let bytes = z.to_syms_bytes();
        assert_eq!(&bytes[..], b"SYMS q=2 n=4\n\x00");
        assert_eq!(SymbolString::from_syms_bytes(&bytes).unwrap(), z);

        let mut trailing = bytes.clone();
        trailing.push(0);
        assert!(SymbolString::from_syms_bytes(&trailing).is_err());
        assert!(SymbolString::from_syms_bytes(b"SYMS q=2 n=9\n\x00").is_err());
        assert!(SymbolString::from_syms_bytes(b"SYMS q=2\n").is_err());
        assert!(SymbolString::from_syms_bytes(b"SYMZ q=2 n=0\n").is_err());
        assert!(SymbolString::from_syms_bytes(b"SYMS q=2 n=1\n\x02").is_err());
        let empty = SymbolString::from_syms_bytes(b"SYMS q=5 n=0\n").unwrap();
        assert!(empty.is_empty());
    }

    #[test]
    fn seeded_random_is_deterministic() {
        let s = Seed::from_u64(7);
        let a = gen_seeded_random(1000, 5, &s).unwrap();
        let b = gen_seeded_random(1000, 5, &s).unwrap();
        assert_eq!(a.payload(), b.payload());
        assert_ne!(a, gen_seeded_random(1000, 5, &Seed::from_u64(8)).unwrap());
        assert!(gen_seeded_random(0, 2, &s).unwrap().is_empty());
    }

    #[test]
    fn seeded_random_frequencies() {
        let s = gen_seeded_random(1 << 16, 8, &Seed::from_u64(11)).unwrap();
        let mut counts = [0usize; 8];
        for v in s.iter() {
            counts[v as usize] += 1;
        }
        for c in counts {
            let f = c as f64 / (1 << 16) as f64;
            assert!((f - 0.125).abs() <= 0.01, "frequency {f}");
        }
    }

    #[test]
    fn computable_sequences() {
        assert_eq!(gen_computable(ComputableKind::Zeros, 4), bits("0000"));
        assert_eq!(gen_computable(ComputableKind::Alternating, 5), bits("01010"));
        assert_eq!(gen_computable(ComputableKind::ThueMorse, 8), bits("01101001"));
        // 0 1 10 11 100
        assert_eq!(gen_computable(ComputableKind::Counter, 9), bits("011011100"));
        assert!(matches!("spiral".parse::<ComputableKind>(), Err(StringsError::UnknownKind(_))));
    }

    #[test]
    fn thue_morse_recurrence() {
        let t = gen_computable(ComputableKind::ThueMorse, 1 << 12).to_symbols();
        for k in 0..(1 << 11) {
            assert_eq!(t[2 * k], t[k]);
            assert_eq!(t[2 * k + 1], 1 - t[k]);
        }
    }

    #[test]
    fn promise_inputs() {
        let (a, b) = gen_promise_inputs(2, 3, &Seed::from_u64(1)).unwrap();
        for (x, y) in a.iter().zip(b.iter()) {
            assert!(y == x || y == (x + 1) % 2);
        }
        assert!(matches!(
            gen_promise_inputs(1, 3, &Seed::from_u64(1)),
            Err(StringsError::RingTooSmall(1))
        ));
        let n = 1 << 15;
        let (a, b) = gen_promise_inputs(8, n, &Seed::from_u64(2)).unwrap();
        let hits = a.iter().zip(b.iter()).filter(|&(x, y)| x == 7 && y == 0).count();
        let density = hits as f64 / n as f64;
        assert!((density - 1.0 / 16.0).abs() <= 0.005, "density {density}");
        let chi = chi_event(&a, &b, 8).unwrap();
        assert_eq!(chi.iter().filter(|&v| v == 1).count(), hits);
    }

    #[test]
    fn product_and_chi() {
        assert_eq!(pointwise_product(&bits("0110"), &bits("1010")).unwrap(), bits("0010"));
        assert_eq!(pointwise_product(&bits("0111"), &bits("0000")).unwrap(), bits("0000"));
        assert!(pointwise_product(&bits("01"), &bits("011")).is_err());
        let a3 = SymbolString::from_symbols(3, &[2, 0, 2]).unwrap();
        let b3 = SymbolString::from_symbols(3, &[0, 0, 0]).unwrap();
        assert_eq!(chi_event(&a3, &b3, 3).unwrap(), bits("101"));
        let no_ones = SymbolString::from_symbols(3, &[1, 2, 1]).unwrap();
        assert_eq!(chi_event(&a3, &no_ones, 3).unwrap(), bits("000"));
        assert!(chi_event(&a3, &bits("000"), 3).is_err());
    }

    #[test]
    fn product_density() {
        let n = 1 << 16;
        let a = gen_seeded_random(n, 2, &Seed::from_u64(3)).unwrap();
        let b = gen_seeded_random(n, 2, &Seed::from_u64(4)).unwrap();
        let ones = pointwise_product(&a, &b).unwrap().iter().filter(|&v| v == 1).count();
        assert!((ones as f64 / n as f64 - 0.25).abs() <= 0.01);
    }

    #[test]
    fn chi_for_two_settings_matches_product_relabeling() {
        // With m = 2, relabel a: {1->0, 2->1} and b: {1->1, 2->0}; then the
        // chained-Bell indicator is exactly the PR product a*b.
        for a in 0..2u32 {
            for b in 0..2u32 {
                let sa = SymbolString::from_symbols(2, &[a]).unwrap();
                let sb = SymbolString::from_symbols(2, &[b]).unwrap();
                let chi = chi_event(&sa, &sb, 2).unwrap().get(0);
                let pa = a;
                let pb = 1 - b;
                assert_eq!(chi, pa & pb, "a={a} b={b}");
            }
        }
    }

    #[test]
    fn zip_matches_interleaving_for_power_of_two() {
        let a = gen_seeded_random(77, 2, &Seed::from_u64(5)).unwrap();
        let b = gen_seeded_random(77, 2, &Seed::from_u64(6)).unwrap();
        let inter: Vec<u32> = a.iter().zip(b.iter()).flat_map(|(x, y)| [x, y]).collect();
        let inter = SymbolString::from_symbols(2, &inter).unwrap();
        let z = zip(&[&a, &b]).unwrap();
        assert_eq!(z.q(), 4);
        assert_eq!(z.payload(), inter.payload());

        let c = SymbolString::from_symbols(3, &[2, 1]).unwrap();
        let d = SymbolString::from_symbols(4, &[3, 0]).unwrap();
        assert_eq!(zip(&[&c, &d]).unwrap().to_symbols(), vec![2 + 3 * 3, 1]);
        assert!(zip(&[&a, &c]).is_err());
    }

    #[test]
    fn seed_parsing() {
        let s: Seed = "42".parse().unwrap();
        assert_eq!(s, Seed::from_u64(42));
        let h = s.to_hex();
        assert_eq!(h.parse::<Seed>().unwrap(), s);
        assert!("xyz".parse::<Seed>().is_err());
        assert_ne!(s.derive("a"), s.derive("b"));
    }

    proptest! {
        #[test]
        fn pack_round_trip(
            q in prop::sample::select(vec![2u32, 3, 4, 8, 16]),
            n in prop::sample::select(vec![0usize, 1, 7, 8, 9, 1024]),
            seed in any::<u64>(),
        ) {
            let s = gen_seeded_random(n, q, &Seed::from_u64(seed)).unwrap();
            prop_assert_eq!(s.payload().len(), (n * bits_per_symbol(q) as usize).div_ceil(8));
            let back = SymbolString::from_payload(q, n, s.payload()).unwrap();
            prop_assert_eq!(&back, &s);
            let again = SymbolString::from_symbols(q, &s.to_symbols()).unwrap();
            prop_assert_eq!(again.payload(), s.payload());
            prop_assert!(s.iter().all(|v| v < q));
            prop_assert_eq!(SymbolString::from_syms_bytes(&s.to_syms_bytes()).unwrap(), s);
        }

        #[test]
        fn promise_always_holds(m in 2u32..20, n in 0usize..300, seed in any::<u64>()) {
            let (a, b) = gen_promise_inputs(m, n, &Seed::from_u64(seed)).unwrap();
            for (x, y) in a.iter().zip(b.iter()) {
                prop_assert!(y == x || y == (x + 1) % m);
            }
        }
    }
}
