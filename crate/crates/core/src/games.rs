//! The three non-local systems, strategies that answer their inputs, and
//! the complexity-based no-signaling and locality testers.
//!
//! Symbol conventions: chained-Bell inputs `{1..m}` are stored as
//! `{0..m-1}`; magic-square rows and columns `{1,2,3}` as `{0,1,2}` and
//! output symbols `{1..4}` as `{0..3}`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complexity::{self, ComplexityError, Estimator, Joint};
use crate::strings::{Seed, StringsError, SymbolString};

#[derive(Debug, Error)]
pub enum GamesError {
    #[error("symbol {symbol} outside alphabet of size {q} ({role})")]
    OutOfAlphabet { role: &'static str, symbol: u32, q: u32 },
    #[error("promise violated at round {index}")]
    PromiseViolation { index: usize },
    #[error("epsilon {0} outside [0, 1]")]
    BadEpsilon(f64),
    #[error("invalid strategy table: {0}")]
    BadTable(String),
    #[error("invalid game: {0}")]
    BadGame(String),
    #[error("manifest: {0}")]
    Manifest(String),
    #[error(transparent)]
    Strings(#[from] StringsError),
    #[error(transparent)]
    Complexity(#[from] ComplexityError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, GamesError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GameSpec {
    Pr,
    ChainedBell { m: u32 },
    MagicSquare,
}

impl GameSpec {
    pub fn chained(m: u32) -> Result<Self> {
        if m < 2 {
            return Err(GamesError::BadGame(format!("chained Bell needs m >= 2, got {m}")));
        }
        Ok(GameSpec::ChainedBell { m })
    }

    /// `(qA, qB)`.
    pub fn input_alphabets(&self) -> (u32, u32) {
        match *self {
            GameSpec::Pr => (2, 2),
            GameSpec::ChainedBell { m } => (m, m),
            GameSpec::MagicSquare => (3, 3),
        }
    }

    /// `(qX, qY)`.
    pub fn output_alphabets(&self) -> (u32, u32) {
        match *self {
            GameSpec::Pr | GameSpec::ChainedBell { .. } => (2, 2),
            GameSpec::MagicSquare => (4, 4),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            GameSpec::Pr => "pr",
            GameSpec::ChainedBell { .. } => "chained",
            GameSpec::MagicSquare => "magic",
        }
    }

    /// Input pairs allowed by the promise, in lexicographic order.
    pub fn promise_pairs(&self) -> Vec<(u32, u32)> {
        let (qa, qb) = self.input_alphabets();
        let mut out = Vec::new();
        for a in 0..qa {
            for b in 0..qb {
                if promise_unchecked(self, a, b) {
                    out.push((a, b));
                }
            }
        }
        out
    }

    /// Whether the winning condition is `x xor y = f(a, b)` on bits.
    pub fn is_xor(&self) -> bool {
        !matches!(self, GameSpec::MagicSquare)
    }

    /// Right-hand side of the XOR condition.
    pub(crate) fn xor_target(&self, a: u32, b: u32) -> u32 {
        match *self {
            GameSpec::Pr => a & b,
            GameSpec::ChainedBell { m } => (a == m - 1 && b == 0) as u32,
            GameSpec::MagicSquare => unreachable!("magic square is not an XOR game"),
        }
    }
}

fn check(role: &'static str, symbol: u32, q: u32) -> Result<()> {
    if symbol < q {
        Ok(())
    } else {
        Err(GamesError::OutOfAlphabet { role, symbol, q })
    }
}

fn promise_unchecked(game: &GameSpec, a: u32, b: u32) -> bool {
    match *game {
        GameSpec::ChainedBell { m } => b == a || b == (a + 1) % m,
        _ => true,
    }
}

pub fn promise_holds(game: &GameSpec, a: u32, b: u32) -> Result<bool> {
    let (qa, qb) = game.input_alphabets();
    check("a", a, qa)?;
    check("b", b, qb)?;
    Ok(promise_unchecked(game, a, b))
}

pub(crate) fn wins_unchecked(game: &GameSpec, a: u32, b: u32, x: u32, y: u32) -> bool {
    match game {
        GameSpec::MagicSquare => {
            let row = magic_decode(x, Parity::Even);
            let col = magic_decode(y, Parity::Odd);
            row[b as usize] == col[a as usize]
        }
        _ => (x ^ y) == game.xor_target(a, b),
    }
}

pub fn round_wins(game: &GameSpec, a: u32, b: u32, x: u32, y: u32) -> Result<bool> {
    let (qa, qb) = game.input_alphabets();
    let (qx, qy) = game.output_alphabets();
    check("a", a, qa)?;
    check("b", b, qb)?;
    check("x", x, qx)?;
    check("y", y, qy)?;
    Ok(wins_unchecked(game, a, b, x, y))
}

/// Parity of a magic-square line: Alice's rows are even, Bob's columns odd.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    fn bit(self) -> u8 {
        match self {
            Parity::Even => 0,
            Parity::Odd => 1,
        }
    }
}

/// Cells of the line encoded by `symbol`: the two bits of `symbol` (high
/// first) fill cells 0 and 1, cell 2 completes the parity.
pub fn magic_decode(symbol: u32, parity: Parity) -> [u8; 3] {
    debug_assert!(symbol < 4);
    let c0 = (symbol >> 1) as u8 & 1;
    let c1 = symbol as u8 & 1;
    [c0, c1, c0 ^ c1 ^ parity.bit()]
}

pub fn magic_encode(cells: [u8; 3], parity: Parity) -> Result<u32> {
    if cells.iter().any(|&c| c > 1) || (cells[0] ^ cells[1] ^ cells[2]) != parity.bit() {
        return Err(GamesError::BadTable(format!("{cells:?} is not a line of {parity:?} parity")));
    }
    Ok(((cells[0] as u32) << 1) | cells[1] as u32)
}

/// Line with `fixed` at cell `at`, `free` at the lowest other cell and
/// the last cell forced by parity.
fn magic_line(at: usize, fixed: u8, free: u8, parity: Parity) -> u32 {
    let mut cells = [0u8; 3];
    cells[at] = fixed;
    let others: Vec<usize> = (0..3).filter(|&k| k != at).collect();
    cells[others[0]] = free;
    cells[others[1]] = cells[at] ^ cells[others[0]] ^ parity.bit();
    magic_encode(cells, parity).expect("parity is completed by construction")
}

/// Inputs, outputs and the game they were played in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Quadruple {
    pub game: GameSpec,
    pub a: SymbolString,
    pub b: SymbolString,
    pub x: SymbolString,
    pub y: SymbolString,
}

impl Quadruple {
    pub fn new(game: GameSpec, a: SymbolString, b: SymbolString, x: SymbolString, y: SymbolString) -> Result<Self> {
        let (qa, qb) = game.input_alphabets();
        let (qx, qy) = game.output_alphabets();
        for (s, q) in [(&a, qa), (&b, qb), (&x, qx), (&y, qy)] {
            if s.q() != q {
                return Err(StringsError::AlphabetMismatch { expected: q, found: s.q() }.into());
            }
            if s.len() != a.len() {
                return Err(StringsError::LengthMismatch { left: a.len(), right: s.len() }.into());
            }
        }
        Ok(Self { game, a, b, x, y })
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn promise_violations(&self) -> usize {
        self.a.iter().zip(self.b.iter()).filter(|&(a, b)| !promise_unchecked(&self.game, a, b)).count()
    }

    pub fn first_violation(&self) -> Option<usize> {
        self.a.iter().zip(self.b.iter()).position(|(a, b)| !promise_unchecked(&self.game, a, b))
    }

    pub fn wins(&self) -> usize {
        (0..self.len())
            .filter(|&i| wins_unchecked(&self.game, self.a.get(i), self.b.get(i), self.x.get(i), self.y.get(i)))
            .count()
    }
}

/// Fraction of winning rounds; 1 for the empty quadruple.
pub fn satisfaction_fraction(quad: &Quadruple) -> Result<BigRational> {
    if let Some(index) = quad.first_violation() {
        return Err(GamesError::PromiseViolation { index });
    }
    if quad.is_empty() {
        return Ok(BigRational::one());
    }
    Ok(BigRational::new(BigInt::from(quad.wins()), BigInt::from(quad.len())))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Strategy {
    /// Position-wise tables `x_i = fa[a_i]`, `y_i = fb[b_i]`.
    LocalDeterministic { fa: Vec<u32>, fb: Vec<u32> },
    /// Wins each round except with probability `epsilon`; both marginals
    /// stay uniform.
    NoSignaling { epsilon: f64, seed: Seed },
    /// Bob's output copies Alice's input, Alice then wins outright.
    Signaling { seed: Seed },
}

impl Strategy {
    pub fn label(&self) -> String {
        match self {
            Strategy::LocalDeterministic { fa, fb } => format!("local(fa={fa:?},fb={fb:?})"),
            Strategy::NoSignaling { epsilon, .. } => format!("nosig(eps={epsilon})"),
            Strategy::Signaling { .. } => "signaling".into(),
        }
    }

    pub fn validate(&self, game: &GameSpec) -> Result<()> {
        match self {
            Strategy::LocalDeterministic { fa, fb } => {
                let (qa, qb) = game.input_alphabets();
                let (qx, qy) = game.output_alphabets();
                for (name, table, qin, qout) in [("fa", fa, qa, qx), ("fb", fb, qb, qy)] {
                    if table.len() != qin as usize {
                        return Err(GamesError::BadTable(format!(
                            "{name} has {} entries, input alphabet has {qin}",
                            table.len()
                        )));
                    }
                    if let Some(v) = table.iter().find(|&&v| v >= qout) {
                        return Err(GamesError::BadTable(format!("{name} outputs {v}, alphabet has {qout}")));
                    }
                }
                Ok(())
            }
            Strategy::NoSignaling { epsilon, .. } => {
                if (0.0..=1.0).contains(epsilon) {
                    Ok(())
                } else {
                    Err(GamesError::BadEpsilon(*epsilon))
                }
            }
            Strategy::Signaling { .. } => Ok(()),
        }
    }

    /// The tables as one string over the larger output alphabet: `fa`
    /// followed by `fb`.
    pub fn table_string(&self, game: &GameSpec) -> Result<SymbolString> {
        match self {
            Strategy::LocalDeterministic { fa, fb } => {
                self.validate(game)?;
                let (qx, qy) = game.output_alphabets();
                let symbols: Vec<u32> = fa.iter().chain(fb).copied().collect();
                Ok(SymbolString::from_symbols(qx.max(qy), &symbols)?)
            }
            _ => Err(GamesError::BadTable("only local strategies have tables".into())),
        }
    }
}

/// Counter-mode per-round randomness: round `i` owns words `4i..4i+4` of
/// the seed's ChaCha20 keystream, so any round can be regenerated alone.
pub struct RoundWords {
    rng: rand_chacha::ChaCha20Rng,
}

impl RoundWords {
    pub fn new(seed: &Seed) -> Self {
        Self { rng: seed.rng(0) }
    }

    pub fn at(seed: &Seed, round: usize) -> [u32; 4] {
        let mut rng = seed.rng(0);
        rng.set_word_pos(4 * round as u128);
        Self { rng }.next_round()
    }

    pub fn next_round(&mut self) -> [u32; 4] {
        std::array::from_fn(|_| self.rng.next_u32())
    }
}

/// Probability threshold on a 32-bit word for an event of rate `p`.
fn word_threshold(p: f64) -> u64 {
    (p * 4_294_967_296.0).round() as u64
}

/// Produces `(x, y)` for the given inputs. `seed` drives the noise of the
/// no-signaling sampler; the other randomness comes from the strategy.
pub fn play(
    strategy: &Strategy,
    game: &GameSpec,
    a: &SymbolString,
    b: &SymbolString,
    seed: &Seed,
) -> Result<(SymbolString, SymbolString)> {
    strategy.validate(game)?;
    let (qa, qb) = game.input_alphabets();
    let (qx, qy) = game.output_alphabets();
    if a.q() != qa || b.q() != qb {
        return Err(StringsError::AlphabetMismatch { expected: qa, found: if a.q() != qa { a.q() } else { b.q() } }.into());
    }
    if a.len() != b.len() {
        return Err(StringsError::LengthMismatch { left: a.len(), right: b.len() }.into());
    }
    let n = a.len();
    let av = a.to_symbols();
    let bv = b.to_symbols();
    if let Some(index) = (0..n).position(|i| !promise_unchecked(game, av[i], bv[i])) {
        return Err(GamesError::PromiseViolation { index });
    }
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    match strategy {
        Strategy::LocalDeterministic { fa, fb } => {
            x.extend(av.iter().map(|&s| fa[s as usize]));
            y.extend(bv.iter().map(|&s| fb[s as usize]));
        }
        Strategy::NoSignaling { epsilon, seed: sampler } => {
            let mut draws = RoundWords::new(sampler);
            let mut noise = RoundWords::new(seed);
            let threshold = word_threshold(*epsilon);
            for i in 0..n {
                let w = draws.next_round();
                let flip = ((noise.next_round()[0] as u64) < threshold) as u32;
                let (ai, bi) = (av[i], bv[i]);
                if game.is_xor() {
                    let xi = w[0] & 1;
                    x.push(xi);
                    y.push(xi ^ game.xor_target(ai, bi) ^ flip);
                } else {
                    let t = (w[0] & 1) as u8;
                    x.push(magic_line(bi as usize, t, (w[1] & 1) as u8, Parity::Even));
                    y.push(magic_line(ai as usize, t ^ flip as u8, (w[2] & 1) as u8, Parity::Odd));
                }
            }
        }
        Strategy::Signaling { seed: sampler } => {
            let mut draws = RoundWords::new(sampler);
            for i in 0..n {
                let w = draws.next_round();
                let (ai, bi) = (av[i], bv[i]);
                let yi = ai % 2;
                y.push(yi);
                if game.is_xor() {
                    x.push(yi ^ game.xor_target(ai, bi));
                } else {
                    let t = magic_decode(yi, Parity::Odd)[ai as usize];
                    x.push(magic_line(bi as usize, t, (w[0] & 1) as u8, Parity::Even));
                }
            }
        }
    }
    Ok((SymbolString::from_symbols(qx, &x)?, SymbolString::from_symbols(qy, &y)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoSignalingReport {
    pub estimator: String,
    pub n: usize,
    pub k_x_given_a: f64,
    pub k_x_given_ab: f64,
    pub k_y_given_b: f64,
    pub k_y_given_ab: f64,
    pub delta_x: f64,
    pub delta_y: f64,
    pub theta_ns: f64,
    pub x_side: bool,
    pub y_side: bool,
}

impl NoSignalingReport {
    pub fn passes(&self) -> bool {
        self.x_side && self.y_side
    }
}

/// Compares `K(x|a)` with `K(x|ab)` and `K(y|b)` with `K(y|ab)`. Rates
/// and deltas are in bits per round.
pub fn ns_report(quad: &Quadruple, estimator: &Estimator, theta_ns: f64) -> Result<NoSignalingReport> {
    let per = |bits: f64| if quad.is_empty() { 0.0 } else { bits / quad.len() as f64 };
    let (a, b, x, y) = (&quad.a, &quad.b, &quad.x, &quad.y);
    let k_x_given_a = per(complexity::estimate_k_given(x, &[a], estimator)?.bits);
    let k_x_given_ab = per(complexity::estimate_k_given(x, &[a, b], estimator)?.bits);
    let k_y_given_b = per(complexity::estimate_k_given(y, &[b], estimator)?.bits);
    let k_y_given_ab = per(complexity::estimate_k_given(y, &[a, b], estimator)?.bits);
    let delta_x = (k_x_given_a - k_x_given_ab).abs();
    let delta_y = (k_y_given_b - k_y_given_ab).abs();
    Ok(NoSignalingReport {
        estimator: estimator.id(),
        n: quad.len(),
        k_x_given_a,
        k_x_given_ab,
        k_y_given_b,
        k_y_given_ab,
        delta_x,
        delta_y,
        theta_ns,
        x_side: delta_x <= theta_ns,
        y_side: delta_y <= theta_ns,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalityThresholds {
    pub defect: f64,
    pub x: f64,
    pub y: f64,
}

impl Default for LocalityThresholds {
    fn default() -> Self {
        Self { defect: 0.1, x: 0.1, y: 0.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Locality {
    LocalWitnessed,
    NotWitnessed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalityVerdict {
    pub estimator: String,
    pub lambda_len: usize,
    /// `|K(a,b,λ) - K(a,b) - K(λ)| / n`.
    pub independence_defect: f64,
    /// `K(x|a,λ) / n`.
    pub x_rate: f64,
    /// `K(y|b,λ) / n`.
    pub y_rate: f64,
    pub thresholds: LocalityThresholds,
    pub verdict: Locality,
}

/// Checks whether `lambda` witnesses locality of `quad`. A negative
/// answer concerns this `lambda` only.
///
/// The defect is normalized by the number of rounds rather than by the
/// length of `lambda`, so short or empty witnesses are handled uniformly.
pub fn locality_verdict(
    quad: &Quadruple,
    lambda: &SymbolString,
    estimator: &Estimator,
    thresholds: LocalityThresholds,
) -> Result<LocalityVerdict> {
    let per = |bits: f64| if quad.is_empty() { 0.0 } else { bits / quad.len() as f64 };
    let (a, b, x, y) = (&quad.a, &quad.b, &quad.x, &quad.y);
    let independence_defect = if lambda.is_empty() {
        0.0
    } else {
        let k_abl = complexity::joint_bits(estimator, &Joint::of(&[a, b, lambda])?)?;
        let k_ab = complexity::joint_bits(estimator, &Joint::of(&[a, b])?)?;
        let k_l = complexity::joint_bits(estimator, &Joint::single(lambda))?;
        per((k_abl - k_ab - k_l).abs())
    };
    let x_rate = per(complexity::estimate_k_given(x, &[a, lambda], estimator)?.bits);
    let y_rate = per(complexity::estimate_k_given(y, &[b, lambda], estimator)?.bits);
    let witnessed = independence_defect <= thresholds.defect && x_rate <= thresholds.x && y_rate <= thresholds.y;
    Ok(LocalityVerdict {
        estimator: estimator.id(),
        lambda_len: lambda.len(),
        independence_defect,
        x_rate,
        y_rate,
        thresholds,
        verdict: if witnessed { Locality::LocalWitnessed } else { Locality::NotWitnessed },
    })
}

/// JSON sidecar naming the four `.syms` files of a quadruple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub schema: u32,
    pub game: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    pub strategy: String,
    #[serde(default)]
    pub seeds: BTreeMap<String, Seed>,
    pub files: ManifestFiles,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestFiles {
    pub a: PathBuf,
    pub b: PathBuf,
    pub x: PathBuf,
    pub y: PathBuf,
}

impl Manifest {
    pub fn game_spec(&self) -> Result<GameSpec> {
        match (self.game.as_str(), self.m) {
            ("pr", None) => Ok(GameSpec::Pr),
            ("magic", None) => Ok(GameSpec::MagicSquare),
            ("chained", Some(m)) => GameSpec::chained(m),
            ("chained", None) => Err(GamesError::Manifest("chained game needs `m`".into())),
            (g, _) => Err(GamesError::Manifest(format!("unknown game `{g}` (or stray `m`)"))),
        }
    }
}

/// Writes `a.syms`, `b.syms`, `x.syms`, `y.syms` and `manifest.json`
/// into `dir`; returns the manifest path.
pub fn write_quadruple(
    dir: &Path,
    quad: &Quadruple,
    strategy: &str,
    epsilon: Option<f64>,
    seeds: BTreeMap<String, Seed>,
) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    for (name, s) in [("a", &quad.a), ("b", &quad.b), ("x", &quad.x), ("y", &quad.y)] {
        s.write_syms(&dir.join(format!("{name}.syms")))?;
    }
    let manifest = Manifest {
        schema: 1,
        game: quad.game.name().into(),
        m: match quad.game {
            GameSpec::ChainedBell { m } => Some(m),
            _ => None,
        },
        epsilon,
        strategy: strategy.into(),
        seeds,
        files: ManifestFiles { a: "a.syms".into(), b: "b.syms".into(), x: "x.syms".into(), y: "y.syms".into() },
    };
    let path = dir.join("manifest.json");
    let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| GamesError::Manifest(e.to_string()))?;
    text.push('\n');
    fs::write(&path, text)?;
    Ok(path)
}

pub fn read_quadruple(manifest_path: &Path) -> Result<(Manifest, Quadruple)> {
    let text = fs::read_to_string(manifest_path)?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| GamesError::Manifest(e.to_string()))?;
    if manifest.schema != 1 {
        return Err(GamesError::Manifest(format!("unsupported schema {}", manifest.schema)));
    }
    let game = manifest.game_spec()?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let load = |p: &Path| SymbolString::read_syms(&base.join(p));
    let f = &manifest.files;
    let quad = Quadruple::new(game, load(&f.a)?, load(&f.b)?, load(&f.x)?, load(&f.y)?)?;
    Ok((manifest, quad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strings::{gen_promise_inputs, gen_seeded_random};
    use num_traits::ToPrimitive;

    fn sym(q: u32, v: &[u32]) -> SymbolString {
        SymbolString::from_symbols(q, v).unwrap()
    }

    #[test]
    fn predicate_examples() {
        assert!(round_wins(&GameSpec::Pr, 1, 1, 0, 1).unwrap());
        assert!(!round_wins(&GameSpec::Pr, 1, 1, 1, 1).unwrap());
        // a=3, b=1 with m=3 is stored as (2, 0).
        let cb = GameSpec::chained(3).unwrap();
        assert!(!round_wins(&cb, 2, 0, 0, 0).unwrap());
        assert!(round_wins(&cb, 2, 0, 1, 0).unwrap());
        assert!(promise_holds(&cb, 2, 0).unwrap());
        assert!(!promise_holds(&cb, 0, 2).unwrap());
        assert!(round_wins(&GameSpec::Pr, 2, 0, 0, 0).is_err());
        assert!(round_wins(&GameSpec::MagicSquare, 0, 0, 4, 0).is_err());
    }

    /// Hand-written row/column tables, indexed by stored symbol.
    const EVEN_ROWS: [[u8; 3]; 4] = [[0, 0, 0], [0, 1, 1], [1, 0, 1], [1, 1, 0]];
    const ODD_COLS: [[u8; 3]; 4] = [[0, 0, 1], [0, 1, 0], [1, 0, 0], [1, 1, 1]];

    #[test]
    fn magic_square_table_matches_hand_decoding() {
        let mut wins = 0;
        for a in 0..3u32 {
            for b in 0..3u32 {
                for x in 0..4u32 {
                    for y in 0..4u32 {
                        let expect = EVEN_ROWS[x as usize][b as usize] == ODD_COLS[y as usize][a as usize];
                        assert_eq!(round_wins(&GameSpec::MagicSquare, a, b, x, y).unwrap(), expect);
                        wins += expect as u32;
                    }
                }
            }
        }
        assert_eq!(wins, 72);
    }

    #[test]
    fn magic_encoding_round_trips() {
        for parity in [Parity::Even, Parity::Odd] {
            for s in 0..4 {
                assert_eq!(magic_encode(magic_decode(s, parity), parity).unwrap(), s);
            }
        }
        assert!(magic_encode([1, 0, 0], Parity::Even).is_err());
        assert!(magic_encode([1, 0, 1], Parity::Odd).is_err());
    }

    #[test]
    fn local_table_lookup() {
        let strat = Strategy::LocalDeterministic { fa: vec![0, 1], fb: vec![0, 0] };
        let a = sym(2, &[0, 1, 1, 0]);
        let b = sym(2, &[1, 1, 0, 1]);
        let (x, y) = play(&strat, &GameSpec::Pr, &a, &b, &Seed::from_u64(0)).unwrap();
        assert_eq!(x.to_symbols(), vec![0, 1, 1, 0]);
        assert_eq!(y.to_symbols(), vec![0, 0, 0, 0]);
    }

    #[test]
    fn constant_local_strategy_wins_three_quarters() {
        let n = 100_000;
        let a = gen_seeded_random(n, 2, &Seed::from_u64(1)).unwrap();
        let b = gen_seeded_random(n, 2, &Seed::from_u64(2)).unwrap();
        let strat = Strategy::LocalDeterministic { fa: vec![0, 0], fb: vec![0, 0] };
        let (x, y) = play(&strat, &GameSpec::Pr, &a, &b, &Seed::from_u64(3)).unwrap();
        let q = Quadruple::new(GameSpec::Pr, a, b, x, y).unwrap();
        let s = satisfaction_fraction(&q).unwrap().to_f64().unwrap();
        assert!((s - 0.75).abs() <= 0.01, "{s}");
    }

    #[test]
    fn noiseless_sampler_always_wins() {
        let n = 1 << 12;
        let sampler = Strategy::NoSignaling { epsilon: 0.0, seed: Seed::from_u64(7) };
        let cases = [
            (GameSpec::Pr, 2u32),
            (GameSpec::chained(5).unwrap(), 5),
            (GameSpec::MagicSquare, 3),
        ];
        for (game, q) in cases {
            let (a, b) = match game {
                GameSpec::ChainedBell { m } => gen_promise_inputs(m, n, &Seed::from_u64(4)).unwrap(),
                _ => (
                    gen_seeded_random(n, q, &Seed::from_u64(4)).unwrap(),
                    gen_seeded_random(n, q, &Seed::from_u64(5)).unwrap(),
                ),
            };
            let (x, y) = play(&sampler, &game, &a, &b, &Seed::from_u64(8)).unwrap();
            let quad = Quadruple::new(game, a, b, x, y).unwrap();
            assert_eq!(satisfaction_fraction(&quad).unwrap(), BigRational::one(), "{game:?}");
        }
    }

    #[test]
    fn magic_sampler_marginal_is_uniform_per_input() {
        let n = 10_000;
        let a = gen_seeded_random(n, 3, &Seed::from_u64(10)).unwrap();
        let b = gen_seeded_random(n, 3, &Seed::from_u64(11)).unwrap();
        let sampler = Strategy::NoSignaling { epsilon: 0.0, seed: Seed::from_u64(12) };
        let (x, _) = play(&sampler, &GameSpec::MagicSquare, &a, &b, &Seed::from_u64(13)).unwrap();
        let mut counts = [[0usize; 4]; 3];
        for i in 0..n {
            counts[a.get(i) as usize][x.get(i) as usize] += 1;
        }
        for row in counts {
            let total: usize = row.iter().sum();
            for c in row {
                assert!((c as f64 / total as f64 - 0.25).abs() <= 0.02, "{row:?}");
            }
        }
    }

    #[test]
    fn noisy_chained_sampler_loses_at_rate_epsilon() {
        let n = 1 << 15;
        let (a, b) = gen_promise_inputs(8, n, &Seed::from_u64(20)).unwrap();
        let sampler = Strategy::NoSignaling { epsilon: 1.0 / 64.0, seed: Seed::from_u64(21) };
        let game = GameSpec::chained(8).unwrap();
        let (x, y) = play(&sampler, &game, &a, &b, &Seed::from_u64(22)).unwrap();
        let s = satisfaction_fraction(&Quadruple::new(game, a, b, x, y).unwrap()).unwrap().to_f64().unwrap();
        assert!((s - (1.0 - 1.0 / 64.0)).abs() <= 0.01, "{s}");
    }

    #[test]
    fn signaling_sampler_wins_every_game() {
        let n = 2000;
        let strat = Strategy::Signaling { seed: Seed::from_u64(30) };
        for game in [GameSpec::Pr, GameSpec::chained(4).unwrap(), GameSpec::MagicSquare] {
            let (qa, _) = game.input_alphabets();
            let (a, b) = match game {
                GameSpec::ChainedBell { m } => gen_promise_inputs(m, n, &Seed::from_u64(31)).unwrap(),
                _ => (
                    gen_seeded_random(n, qa, &Seed::from_u64(31)).unwrap(),
                    gen_seeded_random(n, qa, &Seed::from_u64(32)).unwrap(),
                ),
            };
            let (x, y) = play(&strat, &game, &a, &b, &Seed::from_u64(0)).unwrap();
            assert!(y.iter().zip(a.iter()).all(|(y, a)| y == a % 2));
            let quad = Quadruple::new(game, a, b, x, y).unwrap();
            assert_eq!(quad.wins(), n);
        }
    }

    #[test]
    fn round_words_are_seekable() {
        let seed = Seed::from_u64(99);
        let mut seq = RoundWords::new(&seed);
        let rounds: Vec<[u32; 4]> = (0..50).map(|_| seq.next_round()).collect();
        for i in [0, 1, 17, 49] {
            assert_eq!(RoundWords::at(&seed, i), rounds[i]);
        }
    }

    #[test]
    fn promise_violations_are_rejected() {
        let game = GameSpec::chained(4).unwrap();
        let a = sym(4, &[0, 1, 2]);
        let b = sym(4, &[0, 3, 3]);
        let strat = Strategy::NoSignaling { epsilon: 0.0, seed: Seed::from_u64(1) };
        assert!(matches!(
            play(&strat, &game, &a, &b, &Seed::from_u64(1)),
            Err(GamesError::PromiseViolation { index: 1 })
        ));
        let quad = Quadruple::new(game, a, b, sym(2, &[0, 0, 0]), sym(2, &[0, 0, 0])).unwrap();
        assert_eq!(quad.promise_violations(), 1);
        assert!(matches!(satisfaction_fraction(&quad), Err(GamesError::PromiseViolation { index: 1 })));
    }

    #[test]
    fn invalid_strategies_are_rejected() {
        let a = sym(2, &[0]);
        let bad = [
            Strategy::NoSignaling { epsilon: 1.5, seed: Seed::from_u64(0) },
            Strategy::LocalDeterministic { fa: vec![0], fb: vec![0, 0] },
            Strategy::LocalDeterministic { fa: vec![0, 2], fb: vec![0, 0] },
        ];
        for s in bad {
            assert!(play(&s, &GameSpec::Pr, &a, &a, &Seed::from_u64(0)).is_err());
        }
    }

    #[test]
    fn empty_quadruple_is_satisfied() {
        let e = SymbolString::empty(2).unwrap();
        let q = Quadruple::new(GameSpec::Pr, e.clone(), e.clone(), e.clone(), e).unwrap();
        assert_eq!(satisfaction_fraction(&q).unwrap(), BigRational::one());
    }

    #[test]
    fn manifest_round_trip_and_strictness() {
        let dir = tempfile::tempdir().unwrap();
        let n = 100;
        let (a, b) = gen_promise_inputs(3, n, &Seed::from_u64(1)).unwrap();
        let strat = Strategy::NoSignaling { epsilon: 0.0, seed: Seed::from_u64(2) };
        let game = GameSpec::chained(3).unwrap();
        let (x, y) = play(&strat, &game, &a, &b, &Seed::from_u64(3)).unwrap();
        let quad = Quadruple::new(game, a, b, x, y).unwrap();
        let seeds = BTreeMap::from([("inputs".to_string(), Seed::from_u64(1))]);
        let path = write_quadruple(dir.path(), &quad, &strat.label(), Some(0.0), seeds).unwrap();
        let (manifest, back) = read_quadruple(&path).unwrap();
        assert_eq!(back, quad);
        assert_eq!(manifest.m, Some(3));

        let text = std::fs::read_to_string(&path).unwrap().replacen('{', "{\"extra\": 1,", 1);
        std::fs::write(&path, text).unwrap();
        assert!(matches!(read_quadruple(&path), Err(GamesError::Manifest(_))));
    }
}
