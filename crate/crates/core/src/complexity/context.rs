//! Order-k adaptive context model: each symbol is coded bit by bit, every
//! binary decision conditioned on the previous `k` symbols.

use super::coder::{Decoder, Encoder, SymbolStats};
use super::Result;
use crate::strings::SymbolString;

pub const MAX_ORDER: usize = 3;

/// Symbols fit in 24 bits; shifted by one so "before the start" is 0.
const SLOT_BITS: u32 = 25;

fn context_key(history: &[u32], i: usize, order: usize) -> u128 {
    let mut key = 0u128;
    for j in 1..=order {
        let slot = if i >= j { history[i - j] as u128 + 1 } else { 0 };
        key |= slot << (SLOT_BITS * (j as u32 - 1));
    }
    key
}

pub fn encode(s: &SymbolString, order: usize) -> Vec<u8> {
    let syms = s.to_symbols();
    let mut stats = SymbolStats::new(s.q() as u64);
    let mut enc = Encoder::new();
    for (i, &x) in syms.iter().enumerate() {
        stats.encode(&mut enc, context_key(&syms, i, order), x as u64);
    }
    enc.finish()
}

pub fn decode(bytes: &[u8], q: u32, n: usize, order: usize) -> Result<SymbolString> {
    let mut stats = SymbolStats::new(q as u64);
    let mut dec = Decoder::new(bytes);
    let mut out: Vec<u32> = Vec::with_capacity(n);
    for i in 0..n {
        let key = context_key(&out, i, order);
        out.push(stats.decode(&mut dec, key) as u32);
    }
    Ok(SymbolString::from_symbols(q, &out)?)
}
