//! Optimal classical winning probability of a game played `reps` times in
//! parallel, over deterministic block strategies.
//!
//! Alice's block table is searched depth-first in lexicographic order; Bob
//! always plays the best response for each of his block inputs. A branch
//! is cut when even a win on every remaining Alice input could not beat the
//! incumbent. The first free Alice input splits the search into subtrees
//! that run independently, so the result and the statistics do not depend
//! on scheduling.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ratio, OracleError, Result};
use crate::games::{satisfaction_fraction, wins_unchecked, GameSpec, Quadruple};
use crate::strings::SymbolString;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchStats {
    pub nodes: u64,
    pub prunes: u64,
    pub leaves: u64,
}

/// Block strategies as explicit tables. Block inputs and outputs are
/// tuples indexed lexicographically, first round most significant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockStrategy {
    pub alice: Vec<Vec<u32>>,
    pub bob: Vec<Vec<u32>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameValueResult {
    pub game: GameSpec,
    pub reps: usize,
    #[serde(with = "ratio")]
    pub value: BigRational,
    pub wins: u64,
    pub input_pairs: u64,
    pub witness: BlockStrategy,
    pub stats: SearchStats,
}

fn allowed(game: &GameSpec, reps: usize) -> bool {
    match game {
        GameSpec::Pr => (1..=3).contains(&reps),
        GameSpec::ChainedBell { m } => reps == 1 && (2..=8).contains(m),
        GameSpec::MagicSquare => (1..=2).contains(&reps),
    }
}

fn tuple(mut index: usize, base: usize, reps: usize) -> Vec<u32> {
    let mut t = vec![0u32; reps];
    for slot in t.iter_mut().rev() {
        *slot = (index % base) as u32;
        index /= base;
    }
    t
}

struct Problem {
    na: usize,
    nb: usize,
    nx: usize,
    ny: usize,
    /// Bob inputs compatible with each Alice input.
    compat: Vec<Vec<usize>>,
    /// `win[(ia * nx + ix) * nb + ib]`: bit `iy` set when the block is won.
    win: Vec<u64>,
    /// `remaining[d][ib]`: Alice inputs `>= d` compatible with `ib`.
    remaining: Vec<Vec<u32>>,
    pairs: u64,
}

impl Problem {
    fn build(game: &GameSpec, reps: usize) -> Self {
        let (qa, qb) = game.input_alphabets();
        let (qx, qy) = game.output_alphabets();
        let pow = |q: u32| (q as usize).pow(reps as u32);
        let (na, nb, nx, ny) = (pow(qa), pow(qb), pow(qx), pow(qy));
        assert!(ny <= 64, "Bob's block alphabet must fit a 64-bit mask");
        let a_t: Vec<Vec<u32>> = (0..na).map(|i| tuple(i, qa as usize, reps)).collect();
        let b_t: Vec<Vec<u32>> = (0..nb).map(|i| tuple(i, qb as usize, reps)).collect();
        let x_t: Vec<Vec<u32>> = (0..nx).map(|i| tuple(i, qx as usize, reps)).collect();
        let y_t: Vec<Vec<u32>> = (0..ny).map(|i| tuple(i, qy as usize, reps)).collect();
        let promise = |ia: usize, ib: usize| {
            (0..reps).all(|k| game.promise_pairs().contains(&(a_t[ia][k], b_t[ib][k])))
        };
        let compat: Vec<Vec<usize>> = (0..na).map(|ia| (0..nb).filter(|&ib| promise(ia, ib)).collect()).collect();
        let mut win = vec![0u64; na * nx * nb];
        for ia in 0..na {
            for ix in 0..nx {
                for &ib in &compat[ia] {
                    let mut mask = 0u64;
                    for (iy, yt) in y_t.iter().enumerate() {
                        let won = (0..reps).all(|k| wins_unchecked(game, a_t[ia][k], b_t[ib][k], x_t[ix][k], yt[k]));
                        mask |= (won as u64) << iy;
                    }
                    win[(ia * nx + ix) * nb + ib] = mask;
                }
            }
        }
        let mut remaining = vec![vec![0u32; nb]; na + 1];
        for d in (0..na).rev() {
            remaining[d] = remaining[d + 1].clone();
            for &ib in &compat[d] {
                remaining[d][ib] += 1;
            }
        }
        let pairs = compat.iter().map(|c| c.len() as u64).sum();
        Self { na, nb, nx, ny, compat, win, remaining, pairs }
    }

    fn apply(&self, score: &mut [u32], ia: usize, ix: usize, sign: i32) {
        for &ib in &self.compat[ia] {
            let mut mask = self.win[(ia * self.nx + ix) * self.nb + ib];
            while mask != 0 {
                let iy = mask.trailing_zeros() as usize;
                let cell = &mut score[ib * self.ny + iy];
                *cell = (*cell as i32 + sign) as u32;
                mask &= mask - 1;
            }
        }
    }

    fn total(&self, score: &[u32]) -> u32 {
        score.chunks(self.ny).map(|row| *row.iter().max().unwrap()).sum()
    }

    fn bound(&self, score: &[u32], depth: usize) -> u32 {
        score
            .chunks(self.ny)
            .zip(&self.remaining[depth])
            .map(|(row, rem)| row.iter().max().unwrap() + rem)
            .sum()
    }

    fn best_response(&self, alice: &[usize]) -> (Vec<usize>, u32) {
        let mut score = vec![0u32; self.nb * self.ny];
        for (ia, &ix) in alice.iter().enumerate() {
            self.apply(&mut score, ia, ix, 1);
        }
        let bob = score
            .chunks(self.ny)
            .map(|row| {
                let best = *row.iter().max().unwrap();
                row.iter().position(|&v| v == best).unwrap()
            })
            .collect();
        (bob, self.total(&score))
    }
}

struct Search<'a> {
    p: &'a Problem,
    score: Vec<u32>,
    current: Vec<usize>,
    best: u32,
    best_alice: Option<Vec<usize>>,
    stats: SearchStats,
}

impl Search<'_> {
    fn dfs(&mut self, depth: usize) {
        self.stats.nodes += 1;
        if depth == self.p.na {
            self.stats.leaves += 1;
            let total = self.p.total(&self.score);
            if total > self.best {
                self.best = total;
                self.best_alice = Some(self.current.clone());
            }
            return;
        }
        if self.p.bound(&self.score, depth) <= self.best {
            self.stats.prunes += 1;
            return;
        }
        for ix in 0..self.p.nx {
            self.p.apply(&mut self.score, depth, ix, 1);
            self.current.push(ix);
            self.dfs(depth + 1);
            self.current.pop();
            self.p.apply(&mut self.score, depth, ix, -1);
        }
    }
}

/// Exact optimal winning probability for `reps` parallel rounds under the
/// uniform distribution on promise inputs, with a witness pair.
pub fn game_value_exact(game: &GameSpec, reps: usize, jobs: usize) -> Result<GameValueResult> {
    if !allowed(game, reps) {
        return Err(OracleError::SearchSpaceExceeded { game: format!("{game:?}"), reps });
    }
    let p = Problem::build(game, reps);
    // Flipping one output bit of a round on both sides preserves every XOR
    // condition, so Alice's first answer can be fixed to all zeros.
    let prefix: Vec<usize> = if game.is_xor() { vec![0] } else { Vec::new() };
    let split = prefix.len();
    let baseline = p.best_response(&vec![0; p.na]).1;

    let run = |ix: usize| {
        let mut s = Search {
            p: &p,
            score: vec![0u32; p.nb * p.ny],
            current: Vec::new(),
            best: baseline.saturating_sub(1),
            best_alice: None,
            stats: SearchStats { nodes: 0, prunes: 0, leaves: 0 },
        };
        for (ia, &v) in prefix.iter().enumerate() {
            p.apply(&mut s.score, ia, v, 1);
            s.current.push(v);
        }
        p.apply(&mut s.score, split, ix, 1);
        s.current.push(ix);
        s.dfs(split + 1);
        (s.best, s.best_alice, s.stats)
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| OracleError::Lp(format!("thread pool: {e}")))?;
    let results: Vec<(u32, Option<Vec<usize>>, SearchStats)> =
        pool.install(|| (0..p.nx).into_par_iter().map(run).collect());

    let mut stats = SearchStats { nodes: 1, prunes: 0, leaves: 0 };
    let mut best: Option<(u32, Vec<usize>)> = None;
    for (value, alice, st) in results {
        stats.nodes += st.nodes;
        stats.prunes += st.prunes;
        stats.leaves += st.leaves;
        if let Some(alice) = alice {
            if best.as_ref().is_none_or(|(b, _)| value > *b) {
                best = Some((value, alice));
            }
        }
    }
    let (wins, alice) = best.expect("the all-zero strategy reaches the baseline");
    let (bob, check) = p.best_response(&alice);
    debug_assert_eq!(check, wins);
    let (qx, qy) = game.output_alphabets();
    let witness = BlockStrategy {
        alice: alice.iter().map(|&ix| tuple(ix, qx as usize, reps)).collect(),
        bob: bob.iter().map(|&iy| tuple(iy, qy as usize, reps)).collect(),
    };
    Ok(GameValueResult {
        game: *game,
        reps,
        value: BigRational::new(BigInt::from(wins), BigInt::from(p.pairs)),
        wins: wins as u64,
        input_pairs: p.pairs,
        witness,
        stats,
    })
}

/// Re-evaluates a block strategy on every promise input block: a block is
/// won when all its rounds are won.
pub fn replay_witness(game: &GameSpec, reps: usize, witness: &BlockStrategy) -> Result<BigRational> {
    let (qa, qb) = game.input_alphabets();
    let (qx, qy) = game.output_alphabets();
    let na = (qa as usize).pow(reps as u32);
    let nb = (qb as usize).pow(reps as u32);
    let pairs = game.promise_pairs();
    let mut won = 0u64;
    let mut total = 0u64;
    for ia in 0..na {
        let at = tuple(ia, qa as usize, reps);
        for ib in 0..nb {
            let bt = tuple(ib, qb as usize, reps);
            if !(0..reps).all(|k| pairs.contains(&(at[k], bt[k]))) {
                continue;
            }
            let quad = Quadruple::new(
                *game,
                SymbolString::from_symbols(qa, &at).map_err(crate::games::GamesError::from)?,
                SymbolString::from_symbols(qb, &bt).map_err(crate::games::GamesError::from)?,
                SymbolString::from_symbols(qx, &witness.alice[ia]).map_err(crate::games::GamesError::from)?,
                SymbolString::from_symbols(qy, &witness.bob[ib]).map_err(crate::games::GamesError::from)?,
            )?;
            total += 1;
            won += satisfaction_fraction(&quad)?.is_one() as u64;
        }
    }
    Ok(BigRational::new(BigInt::from(won), BigInt::from(total)))
}
