//! Compression-based upper bounds on Kolmogorov complexity.
//!
//! Every built-in estimator produces a self-delimiting bit stream that
//! [`decode_subject`] inverts, so the counted bits are an honest description
//! length. A subject is a [`Joint`] of one or more strings; conditional
//! quantities are chain-rule differences over joints.
//!
//! Joints are aligned: all parts of the longest length are zipped into a
//! single string over the product alphabet, so position `i` of every part
//! sits in one symbol. Shorter parts become separate segments in front. For
//! two bit strings the zipped segment has exactly the packed layout of the
//! interleaving `a_1 b_1 a_2 b_2 ...`.

pub mod coder;
pub mod context;
pub mod entropy;
pub mod external;
pub mod lz77;
pub mod lz78;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::strings::{self, StringsError, SymbolString};
use coder::{decode_uniform, encode_uniform, gamma_len, BitReader, BitWriter, Decoder, Encoder};

pub use entropy::{binary_entropy, log_binomial};

#[derive(Debug, Error)]
pub enum ComplexityError {
    #[error("unknown estimator `{0}`")]
    UnknownEstimator(String),
    #[error("external compressor `{name}` failed: {reason}")]
    External { name: String, reason: String },
    #[error("corrupt encoding: {0}")]
    Corrupt(String),
    #[error("thresholds must satisfy 0 <= zero < full <= 1 (got {zero}, {full})")]
    ThresholdOrder { zero: f64, full: f64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error(transparent)]
    Strings(#[from] StringsError),
}

pub type Result<T> = std::result::Result<T, ComplexityError>;

pub const DEFAULT_CTX_ORDER: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Estimator {
    Lz78,
    /// `window: None` searches the whole history.
    Lz77 { window: Option<usize> },
    Context { order: usize },
    External { name: String, command: String },
}

impl Estimator {
    pub fn id(&self) -> String {
        match self {
            Estimator::Lz78 => "lz78".into(),
            Estimator::Lz77 { window: None } => "lz77".into(),
            Estimator::Lz77 { window: Some(w) } => format!("lz77:{w}"),
            Estimator::Context { order } => format!("ctx_{order}"),
            Estimator::External { name, .. } => format!("external:{name}"),
        }
    }

    fn builtin(&self) -> Option<&dyn SegmentCoder> {
        match self {
            Estimator::External { .. } => None,
            _ => Some(self),
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

impl FromStr for Estimator {
    type Err = ComplexityError;

    /// Parses a built-in id. External estimators need a [`Registry`].
    fn from_str(s: &str) -> Result<Self> {
        Registry::default().resolve(s)
    }
}

/// Resolves estimator ids, including `external:<name>` entries from config.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Registry {
    pub external: BTreeMap<String, String>,
}

impl Registry {
    pub fn resolve(&self, id: &str) -> Result<Estimator> {
        let unknown = || ComplexityError::UnknownEstimator(id.to_string());
        match id {
            "lz78" => return Ok(Estimator::Lz78),
            "lz77" => return Ok(Estimator::Lz77 { window: None }),
            _ => {}
        }
        if let Some(w) = id.strip_prefix("lz77:") {
            let w: usize = w.parse().map_err(|_| unknown())?;
            if w == 0 {
                return Err(unknown());
            }
            return Ok(Estimator::Lz77 { window: Some(w) });
        }
        if let Some(k) = id.strip_prefix("ctx_") {
            let order: usize = k.parse().map_err(|_| unknown())?;
            if order > context::MAX_ORDER {
                return Err(unknown());
            }
            return Ok(Estimator::Context { order });
        }
        if let Some(name) = id.strip_prefix("external:") {
            let command = self.external.get(name).ok_or_else(unknown)?;
            return Ok(Estimator::External { name: name.to_string(), command: command.clone() });
        }
        Err(unknown())
    }
}

/// Model-based coder for a single nonempty string whose `q` and `n` are
/// known to the decoder.
pub(crate) trait SegmentCoder {
    fn encode(&self, s: &SymbolString) -> Vec<u8>;
    fn decode(&self, bytes: &[u8], q: u32, n: usize) -> Result<SymbolString>;
}

impl SegmentCoder for Estimator {
    fn encode(&self, s: &SymbolString) -> Vec<u8> {
        match self {
            Estimator::Lz78 => lz78::Lz78.encode(s),
            Estimator::Lz77 { window } => lz77::encode(s, *window),
            Estimator::Context { order } => context::encode(s, *order),
            Estimator::External { .. } => unreachable!("external estimators have no segment coder"),
        }
    }

    fn decode(&self, bytes: &[u8], q: u32, n: usize) -> Result<SymbolString> {
        match self {
            Estimator::Lz78 => lz78::Lz78.decode(bytes, q, n),
            Estimator::Lz77 { .. } => lz77::decode(bytes, q, n),
            Estimator::Context { order } => context::decode(bytes, q, n, *order),
            Estimator::External { .. } => unreachable!("external estimators have no segment coder"),
        }
    }
}

/// An ordered tuple of strings described together.
#[derive(Debug, Clone)]
pub struct Joint {
    segments: Vec<SymbolString>,
    n: usize,
}

impl Joint {
    pub fn single(s: &SymbolString) -> Self {
        Self::of(&[s]).expect("a single string always joins")
    }

    pub fn of(parts: &[&SymbolString]) -> Result<Self> {
        let nonempty: Vec<&SymbolString> = parts.iter().copied().filter(|p| !p.is_empty()).collect();
        let n = nonempty.iter().map(|p| p.len()).sum();
        let Some(longest) = nonempty.iter().map(|p| p.len()).max() else {
            return Ok(Self { segments: Vec::new(), n: 0 });
        };
        let mut segments: Vec<SymbolString> =
            nonempty.iter().filter(|p| p.len() < longest).map(|p| (*p).clone()).collect();
        let full: Vec<&SymbolString> = nonempty.iter().copied().filter(|p| p.len() == longest).collect();
        segments.push(if full.len() == 1 { full[0].clone() } else { strings::zip(&full)? });
        Ok(Self { segments, n })
    }

    pub fn segments(&self) -> &[SymbolString] {
        &self.segments
    }

    /// Total symbol count over all parts.
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
}

/// Encodes a joint with a built-in estimator. Returns the bytes and the
/// exact number of meaningful bits.
///
/// Per segment: a continuation bit, `gamma(q-1)`, `gamma(n)`, a mode bit
/// (model or stored), `gamma(payload_bytes+1)` and the payload. A zero bit
/// terminates the stream. Stored mode codes each symbol uniformly over `q`,
/// which caps the rate near 1.
pub fn encode_subject(estimator: &Estimator, joint: &Joint) -> Result<(Vec<u8>, usize)> {
    let coder = estimator
        .builtin()
        .ok_or_else(|| ComplexityError::Domain("external estimators have no reference encoding".into()))?;
    let mut w = BitWriter::default();
    for seg in &joint.segments {
        let modelled = coder.encode(seg);
        let stored = encode_stored(seg);
        let (mode, payload) = if modelled.len() <= stored.len() { (false, modelled) } else { (true, stored) };
        w.push(true);
        w.push_gamma(seg.q() as u64 - 1);
        w.push_gamma(seg.len() as u64);
        w.push(mode);
        w.push_gamma(payload.len() as u64 + 1);
        w.push_bytes(&payload);
    }
    w.push(false);
    let bits = w.bit_len();
    Ok((w.into_bytes(), bits))
}

pub fn decode_subject(estimator: &Estimator, bytes: &[u8]) -> Result<Vec<SymbolString>> {
    let coder = estimator
        .builtin()
        .ok_or_else(|| ComplexityError::Domain("external estimators have no reference encoding".into()))?;
    let mut r = BitReader::new(bytes);
    let mut out = Vec::new();
    while r.read()? {
        let q = r.read_gamma()? + 1;
        let q = u32::try_from(q).map_err(|_| ComplexityError::Corrupt("alphabet too large".into()))?;
        let n = r.read_gamma()? as usize;
        let stored = r.read()?;
        let len = (r.read_gamma()? - 1) as usize;
        let payload = r.read_bytes(len)?;
        let seg = if stored { decode_stored(&payload, q, n)? } else { coder.decode(&payload, q, n)? };
        out.push(seg);
    }
    Ok(out)
}

fn encode_stored(s: &SymbolString) -> Vec<u8> {
    let mut enc = Encoder::new();
    for sym in s.iter() {
        encode_uniform(&mut enc, sym as u64, s.q() as u64);
    }
    enc.finish()
}

fn decode_stored(bytes: &[u8], q: u32, n: usize) -> Result<SymbolString> {
    if q < 2 {
        return Err(ComplexityError::Corrupt("alphabet below 2".into()));
    }
    let mut dec = Decoder::new(bytes);
    let symbols: Vec<u32> = (0..n).map(|_| decode_uniform(&mut dec, q as u64) as u32).collect();
    Ok(SymbolString::from_symbols(q, &symbols)?)
}

/// Description length in bits of a joint.
pub fn joint_bits(estimator: &Estimator, joint: &Joint) -> Result<f64> {
    match estimator {
        Estimator::External { name, command } => {
            let mut bits = 0.0;
            for seg in &joint.segments {
                let out = external::compress(name, command, seg.payload())?;
                bits += 8.0 * out as f64 + external::HEADER_BITS;
            }
            Ok(bits)
        }
        _ => Ok(encode_subject(estimator, joint)?.1 as f64),
    }
}

/// Header slack allowed on top of `n log2 q`: `64 log2(n+2)` bits.
pub fn overhead(n: usize) -> f64 {
    64.0 * ((n + 2) as f64).log2()
}

/// Bits of a self-delimiting segment header, excluding the payload.
pub fn header_bits(q: u32, n: usize, payload_bytes: usize) -> usize {
    3 + gamma_len(q as u64 - 1) + gamma_len(n as u64) + gamma_len(payload_bytes as u64 + 1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityEstimate {
    pub estimator: String,
    pub n: usize,
    pub q: u32,
    pub bits: f64,
    pub rate: f64,
}

impl ComplexityEstimate {
    pub fn new(estimator: &Estimator, n: usize, q: u32, bits: f64) -> Self {
        Self { estimator: estimator.id(), n, q, bits, rate: rate_of(bits, n, q) }
    }

    /// Bits per symbol without normalizing by `log2 q`.
    pub fn per_symbol(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.bits / self.n as f64
        }
    }
}

pub fn rate_of(bits: f64, n: usize, q: u32) -> f64 {
    if n == 0 {
        0.0
    } else {
        bits / (n as f64 * (q as f64).log2())
    }
}

pub fn estimate_k(s: &SymbolString, estimator: &Estimator) -> Result<ComplexityEstimate> {
    let bits = joint_bits(estimator, &Joint::single(s))?;
    Ok(ComplexityEstimate::new(estimator, s.len(), s.q(), bits))
}

/// `K(x | y)` as `max(0, K(y, x) - K(y))`.
pub fn estimate_k_cond(x: &SymbolString, y: &SymbolString, estimator: &Estimator) -> Result<ComplexityEstimate> {
    estimate_k_given(x, &[y], estimator)
}

/// `K(x | given...)` with every conditioning string in one joint.
pub fn estimate_k_given(
    x: &SymbolString,
    given: &[&SymbolString],
    estimator: &Estimator,
) -> Result<ComplexityEstimate> {
    let mut parts = given.to_vec();
    let base = joint_bits(estimator, &Joint::of(&parts)?)?;
    parts.push(x);
    let with_x = joint_bits(estimator, &Joint::of(&parts)?)?;
    Ok(ComplexityEstimate::new(estimator, x.len(), x.q(), (with_x - base).max(0.0)))
}

/// Estimate for several strings described together, rated against the
/// joint alphabet.
pub fn estimate_k_joint(parts: &[&SymbolString], estimator: &Estimator) -> Result<ComplexityEstimate> {
    let joint = Joint::of(parts)?;
    let bits = joint_bits(estimator, &joint)?;
    let raw: f64 = parts.iter().map(|p| p.len() as f64 * (p.q() as f64).log2()).sum();
    let n = parts.iter().map(|p| p.len()).max().unwrap_or(0);
    let rate = if raw == 0.0 { 0.0 } else { bits / raw };
    Ok(ComplexityEstimate { estimator: estimator.id(), n, q: joint_q(parts), bits, rate })
}

fn joint_q(parts: &[&SymbolString]) -> u32 {
    parts
        .iter()
        .map(|p| p.q() as u64)
        .product::<u64>()
        .min(u32::MAX as u64) as u32
}

/// `I(x; y) = K(x) - K(x|y)`, clamped at zero. With `symmetric`, the mean
/// of both directions.
pub fn mutual_info_est(x: &SymbolString, y: &SymbolString, estimator: &Estimator, symmetric: bool) -> Result<f64> {
    let one = |u: &SymbolString, v: &SymbolString| -> Result<f64> {
        let k = estimate_k(u, estimator)?.bits;
        let k_cond = estimate_k_cond(u, v, estimator)?.bits;
        Ok((k - k_cond).max(0.0))
    };
    let forward = one(x, y)?;
    if symmetric {
        Ok((forward + one(y, x)?) / 2.0)
    } else {
        Ok(forward)
    }
}

/// `I(a; b | c) = K(a|c) - K(a|b,c)`, clamped at zero.
pub fn cond_mutual_info_est(
    a: &SymbolString,
    b: &SymbolString,
    c: &SymbolString,
    estimator: &Estimator,
) -> Result<f64> {
    let k_c = estimate_k_given(a, &[c], estimator)?.bits;
    let k_bc = estimate_k_given(a, &[b, c], estimator)?.bits;
    Ok((k_c - k_bc).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RateClass {
    Zero,
    Intermediate,
    Full,
}

impl fmt::Display for RateClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RateClass::Zero => "Zero",
            RateClass::Intermediate => "Intermediate",
            RateClass::Full => "Full",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub zero: f64,
    pub full: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { zero: 0.1, full: 0.9 }
    }
}

impl Thresholds {
    pub fn check(&self) -> Result<()> {
        if 0.0 <= self.zero && self.zero < self.full && self.full <= 1.0 {
            Ok(())
        } else {
            Err(ComplexityError::ThresholdOrder { zero: self.zero, full: self.full })
        }
    }

    pub fn classify(&self, rate: f64) -> Result<RateClass> {
        self.check()?;
        Ok(if rate <= self.zero {
            RateClass::Zero
        } else if rate >= self.full {
            RateClass::Full
        } else {
            RateClass::Intermediate
        })
    }
}

pub fn classify_rate(e: &ComplexityEstimate, theta_zero: f64, theta_full: f64) -> Result<RateClass> {
    Thresholds { zero: theta_zero, full: theta_full }.classify(e.rate)
}
