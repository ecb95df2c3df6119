//! LZ78 over the packed payload bytes.
//!
//! Each phrase is a dictionary index, coded uniformly over the current
//! dictionary size, followed by one new byte from an adaptive order-0
//! model. The final phrase may be an index alone; the decoder knows the
//! payload length and recognizes it.

use rustc_hash::FxHashMap;

use super::coder::{decode_uniform, encode_uniform, Decoder, Encoder, SymbolStats};
use super::{ComplexityError, Result, SegmentCoder};
use crate::strings::SymbolString;

pub struct Lz78;

/// Number of phrases in the LZ78 parse of `bytes` (a trailing partial
/// phrase counts as one).
pub fn phrase_count(bytes: &[u8]) -> usize {
    let mut trie: FxHashMap<(u32, u8), u32> = FxHashMap::default();
    let mut next = 1u32;
    let mut cur = 0u32;
    let mut phrases = 0;
    for &b in bytes {
        match trie.get(&(cur, b)) {
            Some(&child) => cur = child,
            None => {
                trie.insert((cur, b), next);
                next += 1;
                phrases += 1;
                cur = 0;
            }
        }
    }
    phrases + (cur != 0) as usize
}

impl SegmentCoder for Lz78 {
    fn encode(&self, s: &SymbolString) -> Vec<u8> {
        let mut enc = Encoder::new();
        let mut literals = SymbolStats::new(256);
        let mut trie: FxHashMap<(u32, u8), u32> = FxHashMap::default();
        let mut size = 1u32;
        let mut cur = 0u32;
        for &b in s.payload() {
            match trie.get(&(cur, b)) {
                Some(&child) => cur = child,
                None => {
                    encode_uniform(&mut enc, cur as u64, size as u64);
                    literals.encode(&mut enc, 0, b as u64);
                    trie.insert((cur, b), size);
                    size += 1;
                    cur = 0;
                }
            }
        }
        if cur != 0 {
            encode_uniform(&mut enc, cur as u64, size as u64);
        }
        enc.finish()
    }

    fn decode(&self, bytes: &[u8], q: u32, n: usize) -> Result<SymbolString> {
        let total = (n * crate::strings::bits_per_symbol(q) as usize).div_ceil(8);
        let mut dec = Decoder::new(bytes);
        let mut literals = SymbolStats::new(256);
        // (parent, byte, length) per node; node 0 is the root.
        let mut nodes: Vec<(u32, u8, usize)> = vec![(0, 0, 0)];
        let mut out: Vec<u8> = Vec::with_capacity(total);
        let mut scratch = Vec::new();
        while out.len() < total {
            let idx = decode_uniform(&mut dec, nodes.len() as u64) as usize;
            let len = nodes[idx].2;
            scratch.clear();
            let mut k = idx;
            while k != 0 {
                scratch.push(nodes[k].1);
                k = nodes[k].0 as usize;
            }
            out.extend(scratch.iter().rev());
            if out.len() == total {
                break;
            }
            if out.len() > total {
                return Err(ComplexityError::Corrupt("lz78 phrase overruns payload".into()));
            }
            let b = literals.decode(&mut dec, 0) as u8;
            out.push(b);
            nodes.push((idx as u32, b, len + 1));
        }
        Ok(SymbolString::from_payload(q, n, &out)?)
    }
}
