//! Symbol-level LZ77 with hash-chain match finding and adaptive token
//! coding.
//!
//! Tokens are literals or `(length, distance)` copies; copies may overlap
//! the output they produce. A copy is taken only when its estimated cost
//! beats coding the same symbols as literals.

use rustc_hash::FxHashMap;

use super::coder::{BitCounter, Decoder, Encoder, GammaStats, SymbolStats};
use super::{ComplexityError, Result};
use crate::strings::{bits_per_symbol, SymbolString};

const HASH_BITS: u32 = 17;
const CHAIN_DEPTH: usize = 256;

/// Shortest copy, in symbols: about 16 bits of history.
pub fn min_match(q: u32) -> usize {
    (16 / bits_per_symbol(q) as usize).max(1)
}

fn hash(window: &[u32]) -> usize {
    let mut h: u64 = 0;
    for &s in window {
        h = (h.rotate_left(5) ^ s as u64).wrapping_mul(0x517c_c1b7_2722_0a95);
    }
    (h >> (64 - HASH_BITS)) as usize
}

/// Rough adaptive cost of literals, used only for parse decisions.
struct LiteralCost {
    counts: FxHashMap<u32, u32>,
    total: u32,
    q: f64,
}

impl LiteralCost {
    fn bits(&self, s: u32) -> f64 {
        let c = self.counts.get(&s).copied().unwrap_or(0) as f64 + 0.5;
        ((self.total as f64 + 0.5 * self.q) / c).log2()
    }

    fn add(&mut self, s: u32) {
        *self.counts.entry(s).or_insert(0) += 1;
        self.total += 1;
    }
}

fn gamma_cost(v: usize) -> f64 {
    2.0 * (v as f64).log2().floor() + 1.0
}

struct Model {
    flags: [BitCounter; 2],
    literals: SymbolStats,
    lengths: GammaStats,
    distances: GammaStats,
    prev_match: bool,
}

impl Model {
    fn new(q: u32) -> Self {
        Self {
            flags: [BitCounter::default(); 2],
            literals: SymbolStats::new(q as u64),
            lengths: GammaStats::default(),
            distances: GammaStats::default(),
            prev_match: false,
        }
    }
}

pub fn encode(s: &SymbolString, window: Option<usize>) -> Vec<u8> {
    let syms = s.to_symbols();
    let n = syms.len();
    let q = s.q();
    let min = min_match(q);
    let window = window.unwrap_or(usize::MAX);
    let mut head = vec![u32::MAX; 1 << HASH_BITS];
    let mut prev = vec![u32::MAX; n];
    let insert = |p: usize, head: &mut Vec<u32>, prev: &mut Vec<u32>| {
        if p + min <= n {
            let h = hash(&syms[p..p + min]);
            prev[p] = head[h];
            head[h] = p as u32;
        }
    };
    let mut cost = LiteralCost { counts: FxHashMap::default(), total: 0, q: q as f64 };
    let mut model = Model::new(q);
    let mut enc = Encoder::new();
    let mut i = 0;
    while i < n {
        let mut best_len = 0;
        let mut best_dist = 0;
        if i + min <= n {
            let mut cand = head[hash(&syms[i..i + min])];
            let mut depth = 0;
            while cand != u32::MAX && depth < CHAIN_DEPTH {
                let j = cand as usize;
                if i - j > window {
                    break;
                }
                let mut len = 0;
                while i + len < n && syms[j + len] == syms[i + len] {
                    len += 1;
                }
                if len > best_len {
                    best_len = len;
                    best_dist = i - j;
                    if i + len == n {
                        break;
                    }
                }
                cand = prev[j];
                depth += 1;
            }
        }
        let take = best_len >= min && {
            let literal: f64 = syms[i..i + best_len].iter().map(|&x| cost.bits(x)).sum();
            let copy = 2.0 + gamma_cost(best_len - min + 1) + gamma_cost(best_dist);
            copy < literal
        };
        let flag = &mut model.flags[model.prev_match as usize];
        enc.encode(take, flag.p1());
        flag.update(take);
        model.prev_match = take;
        if take {
            model.lengths.encode(&mut enc, (best_len - min + 1) as u64);
            model.distances.encode(&mut enc, best_dist as u64);
            for p in i..i + best_len {
                insert(p, &mut head, &mut prev);
            }
            i += best_len;
        } else {
            model.literals.encode(&mut enc, 0, syms[i] as u64);
            cost.add(syms[i]);
            insert(i, &mut head, &mut prev);
            i += 1;
        }
    }
    enc.finish()
}

pub fn decode(bytes: &[u8], q: u32, n: usize) -> Result<SymbolString> {
    let min = min_match(q);
    let mut model = Model::new(q);
    let mut dec = Decoder::new(bytes);
    let mut out: Vec<u32> = Vec::with_capacity(n);
    while out.len() < n {
        let flag = &mut model.flags[model.prev_match as usize];
        let take = dec.decode(flag.p1());
        flag.update(take);
        model.prev_match = take;
        if take {
            let len = model.lengths.decode(&mut dec)? as usize + min - 1;
            let dist = model.distances.decode(&mut dec)? as usize;
            if dist > out.len() || len > n - out.len() {
                return Err(ComplexityError::Corrupt("lz77 copy out of range".into()));
            }
            let start = out.len() - dist;
            for k in 0..len {
                out.push(out[start + k]);
            }
        } else {
            out.push(model.literals.decode(&mut dec, 0) as u32);
        }
    }
    Ok(SymbolString::from_symbols(q, &out)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strings::{gen_seeded_random, Seed};

    #[test]
    fn repeated_block_compresses_against_its_first_copy() {
        let block = gen_seeded_random(4000, 2, &Seed::from_u64(3)).unwrap().to_symbols();
        let mut twice = block.clone();
        twice.extend(&block);
        let once = encode(&SymbolString::from_symbols(2, &block).unwrap(), None).len();
        let both = encode(&SymbolString::from_symbols(2, &twice).unwrap(), None).len();
        assert!(both < once + 20, "{both} vs {once}");
    }

    #[test]
    fn bounded_window_forgets_distant_history() {
        let block = gen_seeded_random(4000, 2, &Seed::from_u64(3)).unwrap().to_symbols();
        let mut twice = block.clone();
        twice.extend(&block);
        let s = SymbolString::from_symbols(2, &twice).unwrap();
        let full = encode(&s, None).len();
        let short = encode(&s, Some(1000)).len();
        assert!(short > full + 400);
        assert_eq!(decode(&encode(&s, Some(1000)), 2, s.len()).unwrap(), s);
    }

    #[test]
    fn min_match_covers_sixteen_bits() {
        assert_eq!(min_match(2), 16);
        assert_eq!(min_match(4), 8);
        assert_eq!(min_match(3), 8);
        assert_eq!(min_match(256), 2);
        assert_eq!(min_match(1 << 20), 1);
    }
}
