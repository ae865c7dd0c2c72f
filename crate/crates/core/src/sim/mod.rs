//! Concrete finite-block-length PIR codes and their audits.
//!
//! The centerpiece is [`SwPirCode`]: database 1 stores a ranked fixed-length
//! index of the pair sequence `(X1^L, X2^L)` and answers with the queried
//! component re-indexed on its own marginal code; database 2 stores two
//! hashed bin indices of `Y1^L` and `Y2^L` and answers with the queried bin.
//! The user recovers the side-information sequence exactly, then decodes the
//! binned sequence by bin-constrained search over conditionally typical
//! candidates (unique-survivor rule).
//!
//! [`PirCode`] wraps the base code with three combinators: symmetrization
//! (two independent copies with database roles swapped), expurgation (message
//! restriction to error-free pairs) and a deliberately privacy-breaking
//! variant used as a negative control in the audit.
//!
//! Everything randomized is seeded and reproducible: identical seeds give
//! identical transcripts, bit for bit.

mod mdpir;
mod ranked;

pub use mdpir::{build_md_pir_code, MdPirCode, MdPirSeeds, MdTrialOutcome};
pub use ranked::RankedIidCode;

use std::collections::BTreeMap;
use std::fmt;

use num_traits::Zero;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inner_bound::{canonical_base_joint, V1, V2, X1, X2, Y1, Y2};
use crate::probability::{ratio_to_f64, VarSet};

/// Default cap on message length for exhaustive enumeration (privacy audit,
/// error maps): `2^{2L}` message pairs are visited.
pub const EXHAUSTIVE_CAP: usize = 10;

/// SplitMix finalizer; the seed-derivation and binning primitive.
fn mix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic per-trial seed from a root seed and trial index.
pub fn trial_seed(root: u64, index: u64) -> u64 {
    mix64(root ^ mix64(index.wrapping_add(1)))
}

fn bin_of(value: u64, key: u64, width: u32) -> u64 {
    if width == 0 {
        0
    } else {
        mix64(value ^ key) >> (64 - width)
    }
}

/// `ceil(len * bits_per_symbol)` with a snap for values that are integers up
/// to floating-point noise.
pub(crate) fn rate_width(len: usize, bits_per_symbol: f64) -> u32 {
    let x = len as f64 * bits_per_symbol;
    let r = x.round();
    if (x - r).abs() < 1e-9 {
        r.max(0.0) as u32
    } else {
        x.ceil().max(0.0) as u32
    }
}

/// A fixed-width bit string.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Word {
    pub bits: u64,
    pub width: u32,
}

impl Word {
    pub fn new(bits: u64, width: u32) -> Self {
        debug_assert!(width <= 64);
        debug_assert!(width == 64 || (bits as u128) < (1u128 << width));
        Self { bits, width }
    }

    fn concat(self, low: Word) -> Word {
        Word::new((self.bits << low.width) | low.bits, self.width + low.width)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in (0..self.width).rev() {
            write!(f, "{}", (self.bits >> i) & 1)?;
        }
        Ok(())
    }
}

/// Named seeds of the base code: the two storage hashes and the index mask.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwSeeds {
    pub y1_hash: u64,
    pub y2_hash: u64,
    pub indexer: u64,
}

impl SwSeeds {
    /// Derives the three named seeds from one root.
    pub fn from_root(root: u64) -> Self {
        Self {
            y1_hash: mix64(root ^ 0x01),
            y2_hash: mix64(root ^ 0x02),
            indexer: mix64(root ^ 0x03),
        }
    }
}

/// How the conditional law of a binned symbol depends on its side symbol.
#[derive(Clone, Copy, Debug)]
enum YGivenX {
    Forced(u8),
    Free { p_one: f64 },
}

/// Per-(side, target) decode tables derived from the deterministic structure.
#[derive(Clone, Copy, Debug)]
struct ComboTables {
    /// Conditional of the y symbol given the x symbol value (index = x).
    y_given_x: [YGivenX; 2],
    /// Reconstruction `(x, y) -> message bit`, `None` off support.
    recon: [[Option<u8>; 2]; 2],
}

/// Decode failure taxonomy of one retrieval.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FailureMode {
    /// Source-side typicality miss: an escape index was used, or the true
    /// sequence fell outside the decoder's candidate set.
    AtypicalSource,
    /// A wrong sequence displaced the true one inside its bin.
    BinCollision,
    /// Two or more candidates survived the bin constraint.
    DecodeAmbiguity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum DecodeError {
    Escape,
    Miss,
    Ambiguous,
    BadReconstruction,
}

fn classify(e: DecodeError) -> FailureMode {
    match e {
        DecodeError::Escape | DecodeError::Miss => FailureMode::AtypicalSource,
        DecodeError::Ambiguous => FailureMode::DecodeAmbiguity,
        DecodeError::BadReconstruction => FailureMode::BinCollision,
    }
}

/// Which database-1 component serves as side information.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum XSide {
    X1,
    X2,
}

/// Which binned component is being decoded.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum YSide {
    Y1,
    Y2,
}

/// The Slepian-Wolf binning PIR code at block length `L`.
#[derive(Clone, Debug)]
pub struct SwPirCode {
    l: usize,
    delta: f64,
    seeds: SwSeeds,
    pair_code: RankedIidCode,
    x_code: RankedIidCode,
    y_bin_width: u32,
    y_keys: [u64; 2],
    storage_mask: u64,
    answer_masks: [u64; 2],
    /// Tables indexed by `(q1 - 1) * 2 + (q2 - 1)`.
    combos: [ComboTables; 4],
}

/// Builds the base code. Database-1 storage is `ceil(L (H(X1,X2) + delta))`
/// bits, its per-query answers `ceil(L (H(X1) + delta))` bits, and each
/// database-2 bin `ceil(L (H(Y1|X1) + delta))` bits, all derived from the
/// deterministic joint rather than hardcoded.
pub fn build_sw_code(l: usize, delta: f64, seeds: SwSeeds) -> Result<SwPirCode> {
    if !(4..=30).contains(&l) {
        return Err(Error::Param(format!("block length {l} outside 4..=30")));
    }
    if !(delta > 0.0 && delta <= 0.5) {
        return Err(Error::Param(format!("delta {delta} outside (0, 0.5]")));
    }

    let joint = canonical_base_joint();
    let h_pair = joint.entropy(&VarSet::of([X1, X2]))?;
    let h_x = joint.entropy(&VarSet::of([X1]))?;
    let h_y_cond = joint.conditional_entropy(&VarSet::of([Y1]), &VarSet::of([X1]))?;

    // decode tables for the four (side, target) pairs
    let x_names = [X1, X2];
    let y_names = [Y1, Y2];
    let targets = [[V1, V2], [V2, V1]]; // message decoded from (X_q1, Y_q2)
    let mut combos = Vec::with_capacity(4);
    for (xi, &xn) in x_names.iter().enumerate() {
        for (yi, &yn) in y_names.iter().enumerate() {
            let pair = joint.marginal(&VarSet::of([xn, yn]))?;
            // variable order inside the marginal follows the joint: x before y
            let mut y_given_x = [YGivenX::Forced(0); 2];
            for x in 0u8..2 {
                let masses: Vec<_> = (0u8..2).map(|y| pair.mass_of(&[x, y])).collect();
                let supported: Vec<u8> = (0u8..2)
                    .filter(|&y| !masses[y as usize].is_zero())
                    .collect();
                y_given_x[x as usize] = match supported.as_slice() {
                    [only] => YGivenX::Forced(*only),
                    _ => {
                        let p0 = ratio_to_f64(&masses[0]);
                        let p1 = ratio_to_f64(&masses[1]);
                        YGivenX::Free {
                            p_one: p1 / (p0 + p1),
                        }
                    }
                };
            }
            let target = targets[xi][yi];
            let table = joint
                .deterministic_function(&VarSet::of([target]), &VarSet::of([xn, yn]))?
                .ok_or_else(|| {
                    Error::Decodability(format!("{target} not a function of ({xn}, {yn})"))
                })?;
            let mut recon = [[None; 2]; 2];
            for (given, tv) in &table {
                // given-tuples are in sorted name order; x names sort before y
                recon[given[0] as usize][given[1] as usize] = Some(tv[0]);
            }
            combos.push(ComboTables { y_given_x, recon });
        }
    }

    // candidate band must be nonempty at the modal free-position count
    let p_free = match combos[0].y_given_x[0] {
        YGivenX::Free { p_one } => p_one,
        YGivenX::Forced(_) => unreachable!("x = 0 leaves the binned symbol free"),
    };
    let modal_f = (l as f64 * 0.75).round() as usize;
    if candidate_band(modal_f, p_free, delta).is_none() {
        let min_delta = (0..=modal_f)
            .map(|k| (k as f64 / modal_f as f64 - p_free).abs())
            .fold(f64::INFINITY, f64::min);
        return Err(Error::EmptyCandidateBand {
            l,
            delta,
            min_delta,
        });
    }

    let pair_probs: Vec<_> = {
        let m = joint.marginal(&VarSet::of([X1, X2]))?;
        (0u8..4).map(|s| m.mass_of(&[s >> 1, s & 1])).collect()
    };
    let x_probs: Vec<_> = {
        let m = joint.marginal(&VarSet::of([X1]))?;
        (0u8..2).map(|s| m.mass_of(&[s])).collect()
    };

    let storage_width = rate_width(l, h_pair + delta);
    let answer_width = rate_width(l, h_x + delta);
    let y_bin_width = rate_width(l, h_y_cond + delta);

    let pair_code = RankedIidCode::new(l, &pair_probs, storage_width)?;
    let x_code = RankedIidCode::new(l, &x_probs, answer_width)?;

    let mask = |v: u64, w: u32| -> u64 {
        if w == 0 {
            0
        } else {
            v & (((1u128 << w) - 1) as u64)
        }
    };
    Ok(SwPirCode {
        l,
        delta,
        seeds,
        pair_code,
        x_code,
        y_bin_width,
        y_keys: [mix64(seeds.y1_hash), mix64(seeds.y2_hash)],
        storage_mask: mask(mix64(seeds.indexer), storage_width),
        answer_masks: [
            mask(mix64(seeds.indexer ^ 0x11), answer_width),
            mask(mix64(seeds.indexer ^ 0x12), answer_width),
        ],
        combos: [combos[0], combos[1], combos[2], combos[3]],
    })
}

/// Inclusive candidate-weight band `|k/f - p| <= delta`, or `None` if empty.
fn candidate_band(f: usize, p: f64, delta: f64) -> Option<(usize, usize)> {
    if f == 0 {
        return Some((0, 0));
    }
    let lo = ((p - delta) * f as f64 - 1e-9).ceil().max(0.0) as usize;
    let hi = ((p + delta) * f as f64 + 1e-9).floor().min(f as f64) as usize;
    if lo > hi {
        None
    } else {
        Some((lo, hi))
    }
}

impl SwPirCode {
    pub fn l(&self) -> usize {
        self.l
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn seeds(&self) -> SwSeeds {
        self.seeds
    }

    /// Storage width in bits of one database.
    pub fn storage_bits(&self, db: u8) -> u32 {
        match db {
            1 => self.pair_code.width(),
            _ => 2 * self.y_bin_width,
        }
    }

    /// Answer width in bits for a query at a database.
    pub fn answer_bits(&self, db: u8, _query: u8) -> u32 {
        match db {
            1 => self.x_code.width(),
            _ => self.y_bin_width,
        }
    }

    fn seq_mask(&self) -> u64 {
        (1u64 << self.l) - 1
    }

    /// Derived sequences `[x1, x2, y1, y2]`, one bit per position.
    fn derive(&self, w1: u64, w2: u64) -> [u64; 4] {
        let m = self.seq_mask();
        [w1 & w2, !w1 & !w2 & m, w1 & !w2 & m, !w1 & w2 & m]
    }

    fn pair_symbols(&self, x1: u64, x2: u64) -> Vec<u8> {
        (0..self.l)
            .map(|i| ((((x1 >> i) & 1) as u8) << 1) | ((x2 >> i) & 1) as u8)
            .collect()
    }

    fn storage(&self, db: u8, w1: u64, w2: u64) -> Word {
        let [x1, x2, y1, y2] = self.derive(w1, w2);
        match db {
            1 => {
                let raw = self
                    .pair_code
                    .rank(&self.pair_symbols(x1, x2))
                    .unwrap_or_else(|| self.pair_code.escape());
                Word::new(raw ^ self.storage_mask, self.pair_code.width())
            }
            _ => {
                let b1 = bin_of(y1, self.y_keys[0], self.y_bin_width);
                let b2 = bin_of(y2, self.y_keys[1], self.y_bin_width);
                Word::new((b1 << self.y_bin_width) | b2, 2 * self.y_bin_width)
            }
        }
    }

    /// Answer functions: deterministic in (stored content, query).
    fn answer(&self, db: u8, query: u8, storage: Word) -> Word {
        match db {
            1 => {
                let raw = (|| {
                    let idx = storage.bits ^ self.storage_mask;
                    if idx == self.pair_code.escape() {
                        return self.x_code.escape();
                    }
                    let pair = match self.pair_code.unrank(idx) {
                        Some(p) => p,
                        None => return self.x_code.escape(),
                    };
                    let comp: Vec<u8> = pair
                        .iter()
                        .map(|&s| if query == 1 { s >> 1 } else { s & 1 })
                        .collect();
                    self.x_code
                        .rank(&comp)
                        .unwrap_or_else(|| self.x_code.escape())
                })();
                Word::new(
                    raw ^ self.answer_masks[(query - 1) as usize],
                    self.x_code.width(),
                )
            }
            _ => {
                let shift = if query == 1 { self.y_bin_width } else { 0 };
                Word::new(
                    (storage.bits >> shift) & (((1u128 << self.y_bin_width) - 1) as u64),
                    self.y_bin_width,
                )
            }
        }
    }

    /// Bin-constrained decode of a binned sequence against exact side
    /// information: enumerate the candidates consistent with the forced
    /// positions whose free-position weight lies in the delta band of the
    /// conditional law, keep those hashing to `bin`, and demand a unique
    /// survivor.
    pub fn sw_decode(
        &self,
        bin: u64,
        side_info: u64,
        x_side: XSide,
        y_side: YSide,
    ) -> std::result::Result<u64, &'static str> {
        let xi = match x_side {
            XSide::X1 => 0,
            XSide::X2 => 1,
        };
        let yi = match y_side {
            YSide::Y1 => 0,
            YSide::Y2 => 1,
        };
        self.decode_y(bin, side_info, &self.combos[xi * 2 + yi], self.y_keys[yi])
            .map_err(|e| match e {
                DecodeError::Miss => "no survivor in the bin",
                DecodeError::Ambiguous => "two or more survivors",
                _ => "decode failed",
            })
    }

    fn decode_y(
        &self,
        bin: u64,
        side_info: u64,
        combo: &ComboTables,
        key: u64,
    ) -> std::result::Result<u64, DecodeError> {
        let mut forced: u64 = 0;
        let mut free_pos: Vec<u32> = Vec::with_capacity(self.l);
        let mut p_free = 0.0;
        for i in 0..self.l as u32 {
            let x = ((side_info >> i) & 1) as usize;
            match combo.y_given_x[x] {
                YGivenX::Forced(v) => forced |= (v as u64) << i,
                YGivenX::Free { p_one } => {
                    free_pos.push(i);
                    p_free = p_one;
                }
            }
        }
        let f = free_pos.len();
        let (k_lo, k_hi) = candidate_band(f, p_free, self.delta).ok_or(DecodeError::Miss)?;

        let mut survivor: Option<u64> = None;
        for k in k_lo..=k_hi.min(f) {
            // subsets of the free positions with exactly k elements
            let mut subset: u64 = if k == 0 { 0 } else { (1u64 << k) - 1 };
            loop {
                let mut y = forced;
                let mut rest = subset;
                while rest != 0 {
                    let b = rest.trailing_zeros();
                    y |= 1u64 << free_pos[b as usize];
                    rest &= rest - 1;
                }
                if bin_of(y, key, self.y_bin_width) == bin {
                    match survivor {
                        None => survivor = Some(y),
                        Some(prev) if prev != y => return Err(DecodeError::Ambiguous),
                        Some(_) => {}
                    }
                }
                if k == 0 {
                    break;
                }
                // Gosper's hack: next subset of the same weight
                let c = subset & subset.wrapping_neg();
                let r = subset + c;
                subset = (((r ^ subset) >> 2) / c) | r;
                if f >= 64 || subset >= 1u64 << f {
                    break;
                }
            }
        }
        survivor.ok_or(DecodeError::Miss)
    }

    fn decode(
        &self,
        queries: (u8, u8),
        answers: (Word, Word),
    ) -> std::result::Result<u64, DecodeError> {
        let (q1, q2) = queries;
        let raw = answers.0.bits ^ self.answer_masks[(q1 - 1) as usize];
        if raw == self.x_code.escape() {
            return Err(DecodeError::Escape);
        }
        let x_syms = self.x_code.unrank(raw).ok_or(DecodeError::Escape)?;
        let mut x_word: u64 = 0;
        for (i, &s) in x_syms.iter().enumerate() {
            x_word |= (s as u64) << i;
        }
        let combo = self.combos[((q1 - 1) * 2 + (q2 - 1)) as usize];
        let key = self.y_keys[(q2 - 1) as usize];
        let y = self.decode_y(answers.1.bits, x_word, &combo, key)?;
        let mut message: u64 = 0;
        for i in 0..self.l as u32 {
            let x = ((x_word >> i) & 1) as usize;
            let yv = ((y >> i) & 1) as usize;
            let bit = combo.recon[x][yv].ok_or(DecodeError::BadReconstruction)?;
            message |= (bit as u64) << i;
        }
        Ok(message)
    }
}

/// Query-pair supports: the desired index selects one of two uniform pairs.
fn sw_query_support(k: u8) -> Vec<(u8, u8)> {
    match k {
        1 => vec![(1, 1), (2, 2)],
        _ => vec![(1, 2), (2, 1)],
    }
}

/// One protocol run: desired index, sampled queries, answers, decode result.
#[derive(Clone, Debug)]
pub struct Transcript {
    pub k: u8,
    pub queries: (u8, u8),
    pub answers: (Word, Word),
    pub decoded: Option<u64>,
    pub success: bool,
    pub failure: Option<FailureMode>,
}

/// Serializable construction parameters; codes rebuild deterministically from
/// this (no raw tables are ever serialized).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CodeSpec {
    Sw {
        l: usize,
        delta: f64,
        seeds: SwSeeds,
    },
    Symmetrized {
        inner: Box<CodeSpec>,
    },
    Expurgated {
        inner: Box<CodeSpec>,
    },
    AdversarialDb1 {
        inner: Box<CodeSpec>,
    },
}

/// A finite-block-length PIR code: the base construction or a combinator
/// applied to one.
#[derive(Clone, Debug)]
pub enum PirCode {
    Sw(Box<SwPirCode>),
    /// Two independent copies with database roles swapped in the second;
    /// equal per-database rates.
    Symmetrized(Box<PirCode>),
    /// Message space restricted to error-free pairs of the inner code.
    Expurgated(ExpurgatedCode),
    /// Negative control: database 1 swaps its answer under `k = 2`,
    /// violating the privacy condition.
    AdversarialDb1(Box<PirCode>),
}

impl From<SwPirCode> for PirCode {
    fn from(code: SwPirCode) -> Self {
        PirCode::Sw(Box::new(code))
    }
}

/// The expurgated wrapper: messages are `(L-1)`-bit pairs mapped injectively
/// onto the lexicographically first `2^{2L-2}` error-free pairs of the inner
/// code.
#[derive(Clone, Debug)]
pub struct ExpurgatedCode {
    inner: Box<PirCode>,
    good: Vec<(u64, u64)>,
}

impl ExpurgatedCode {
    /// The stored inner pair for a wrapped message pair.
    pub fn map_pair(&self, w1: u64, w2: u64) -> (u64, u64) {
        let m = self.inner.message_len() - 1;
        self.good[((w1 << m) | w2) as usize]
    }

    pub fn inner(&self) -> &PirCode {
        &self.inner
    }
}

impl PirCode {
    /// Bits per message.
    pub fn message_len(&self) -> usize {
        match self {
            PirCode::Sw(c) => c.l,
            PirCode::Symmetrized(inner) => 2 * inner.message_len(),
            PirCode::Expurgated(e) => e.inner.message_len() - 1,
            PirCode::AdversarialDb1(inner) => inner.message_len(),
        }
    }

    /// Construction parameters for serialization.
    pub fn spec(&self) -> CodeSpec {
        match self {
            PirCode::Sw(c) => CodeSpec::Sw {
                l: c.l,
                delta: c.delta,
                seeds: c.seeds,
            },
            PirCode::Symmetrized(inner) => CodeSpec::Symmetrized {
                inner: Box::new(inner.spec()),
            },
            PirCode::Expurgated(e) => CodeSpec::Expurgated {
                inner: Box::new(e.inner.spec()),
            },
            PirCode::AdversarialDb1(inner) => CodeSpec::AdversarialDb1 {
                inner: Box::new(inner.spec()),
            },
        }
    }

    /// Deterministic rebuild from construction parameters. Expurgated codes
    /// re-derive their error maps exhaustively, so the inner message length
    /// is capped at `cap`.
    pub fn from_spec(spec: &CodeSpec, cap: usize) -> Result<PirCode> {
        match spec {
            CodeSpec::Sw { l, delta, seeds } => Ok(build_sw_code(*l, *delta, *seeds)?.into()),
            CodeSpec::Symmetrized { inner } => Ok(PirCode::Symmetrized(Box::new(
                PirCode::from_spec(inner, cap)?,
            ))),
            CodeSpec::Expurgated { inner } => {
                let inner = PirCode::from_spec(inner, cap)?;
                let map = error_map(&inner, cap)?;
                Ok(expurgate(&inner, &map)?.0)
            }
            CodeSpec::AdversarialDb1 { inner } => Ok(PirCode::AdversarialDb1(Box::new(
                PirCode::from_spec(inner, cap)?,
            ))),
        }
    }

    /// Supported query pairs for a desired message, each equally likely.
    pub fn query_support(&self, k: u8) -> Vec<(u8, u8)> {
        match self {
            PirCode::Sw(_) => sw_query_support(k),
            PirCode::Symmetrized(inner) => {
                let s = inner.query_support(k);
                let mut out = Vec::with_capacity(s.len() * s.len());
                for &(a1, a2) in &s {
                    for &(b1, b2) in &s {
                        out.push((pack_query(a1, b2), pack_query(a2, b1)));
                    }
                }
                out
            }
            PirCode::Expurgated(e) => e.inner.query_support(k),
            PirCode::AdversarialDb1(inner) => inner.query_support(k),
        }
    }

    /// Storage word of one database for a message pair.
    pub fn storage(&self, db: u8, w1: u64, w2: u64) -> Word {
        match self {
            PirCode::Sw(c) => c.storage(db, w1, w2),
            PirCode::Symmetrized(inner) => {
                let m = inner.message_len();
                let mask = (1u64 << m) - 1;
                // copy A keeps database roles; copy B swaps them
                let sa = inner.storage(db, w1 & mask, w2 & mask);
                let sb = inner.storage(3 - db, w1 >> m, w2 >> m);
                sa.concat(sb)
            }
            PirCode::Expurgated(e) => {
                let (v1, v2) = e.map_pair(w1, w2);
                e.inner.storage(db, v1, v2)
            }
            PirCode::AdversarialDb1(inner) => inner.storage(db, w1, w2),
        }
    }

    /// Answer of one database. Honest codes ignore `k`; the adversarial
    /// wrapper does not, which is exactly what the privacy audit catches.
    pub fn answer(&self, db: u8, k: u8, query: u8, w1: u64, w2: u64) -> Word {
        match self {
            PirCode::Sw(c) => c.answer(db, query, c.storage(db, w1, w2)),
            PirCode::Symmetrized(inner) => {
                let m = inner.message_len();
                let mask = (1u64 << m) - 1;
                let (qa, qb) = unpack_query(query);
                let aa = inner.answer(db, k, qa, w1 & mask, w2 & mask);
                let ab = inner.answer(3 - db, k, qb, w1 >> m, w2 >> m);
                aa.concat(ab)
            }
            PirCode::Expurgated(e) => {
                let (v1, v2) = e.map_pair(w1, w2);
                e.inner.answer(db, k, query, v1, v2)
            }
            PirCode::AdversarialDb1(inner) => {
                if db == 1 && k == 2 {
                    inner.answer(db, k, 3 - query, w1, w2)
                } else {
                    inner.answer(db, k, query, w1, w2)
                }
            }
        }
    }

    #[allow(clippy::only_used_in_recursion)] // k threads through to wrappers
    fn decode(
        &self,
        k: u8,
        queries: (u8, u8),
        answers: (Word, Word),
    ) -> std::result::Result<u64, DecodeError> {
        match self {
            PirCode::Sw(c) => c.decode(queries, answers),
            PirCode::Symmetrized(inner) => {
                // new database 1 received (copy-A db1 query a1, copy-B db2
                // query b2) and sent (copy-A db1 answer | copy-B db2 answer);
                // new database 2 received (a2, b1) and sent the mirror image
                let (a1, b2) = unpack_query(queries.0);
                let (a2, b1) = unpack_query(queries.1);
                let m = inner.message_len() as u32;
                let wa1 = inner.answer_width(1, a1);
                let wa2 = inner.answer_width(2, a2);
                let a_copy = (
                    Word::new(answers.0.bits >> (answers.0.width - wa1), wa1),
                    Word::new(answers.1.bits >> (answers.1.width - wa2), wa2),
                );
                let b_copy = (
                    Word::new(
                        answers.1.bits & low_mask(answers.1.width - wa2),
                        answers.1.width - wa2,
                    ),
                    Word::new(
                        answers.0.bits & low_mask(answers.0.width - wa1),
                        answers.0.width - wa1,
                    ),
                );
                let da = inner.decode(k, (a1, a2), a_copy)?;
                let db_half = inner.decode(k, (b1, b2), b_copy)?;
                Ok((db_half << m) | da)
            }
            PirCode::Expurgated(e) => e.inner.decode(k, queries, answers),
            PirCode::AdversarialDb1(inner) => inner.decode(k, queries, answers),
        }
    }

    fn answer_width(&self, db: u8, query: u8) -> u32 {
        match self {
            PirCode::Sw(c) => c.answer_bits(db, query),
            PirCode::Symmetrized(inner) => {
                let (qa, qb) = unpack_query(query);
                inner.answer_width(db, qa) + inner.answer_width(3 - db, qb)
            }
            PirCode::Expurgated(e) => e.inner.answer_width(db, query),
            PirCode::AdversarialDb1(inner) => inner.answer_width(db, query),
        }
    }

    /// Storage width in bits of one database.
    pub fn storage_bits(&self, db: u8) -> u32 {
        match self {
            PirCode::Sw(c) => c.storage_bits(db),
            PirCode::Symmetrized(inner) => inner.storage_bits(db) + inner.storage_bits(3 - db),
            PirCode::Expurgated(e) => e.inner.storage_bits(db),
            PirCode::AdversarialDb1(inner) => inner.storage_bits(db),
        }
    }

    /// Average answer bits of one database over its query values.
    pub fn answer_bits_avg(&self, db: u8) -> f64 {
        let mut values: Vec<u8> = Vec::new();
        for k in 1..=2 {
            for (q1, q2) in self.query_support(k) {
                let q = if db == 1 { q1 } else { q2 };
                if !values.contains(&q) {
                    values.push(q);
                }
            }
        }
        let total: u32 = values.iter().map(|&q| self.answer_width(db, q)).sum();
        total as f64 / values.len() as f64
    }

    /// Runs one retrieval with queries sampled uniformly from the support.
    pub fn retrieve(&self, k: u8, w1: u64, w2: u64, query_seed: u64) -> Transcript {
        let support = self.query_support(k);
        let mut rng = ChaCha8Rng::seed_from_u64(query_seed);
        let pick = (rng.next_u32() as usize) % support.len();
        self.retrieve_with_queries(k, support[pick], w1, w2)
    }

    /// Runs one retrieval with fixed queries (fully deterministic).
    pub fn retrieve_with_queries(&self, k: u8, queries: (u8, u8), w1: u64, w2: u64) -> Transcript {
        let a1 = self.answer(1, k, queries.0, w1, w2);
        let a2 = self.answer(2, k, queries.1, w1, w2);
        let decoded = self.decode(k, queries, (a1, a2));
        // the message actually stored (differs from (w1, w2) only under the
        // expurgated wrapper)
        let (s1, s2) = match self {
            PirCode::Expurgated(e) => e.map_pair(w1, w2),
            _ => (w1, w2),
        };
        let want = if k == 1 { s1 } else { s2 };
        match decoded {
            Ok(m) => Transcript {
                k,
                queries,
                answers: (a1, a2),
                decoded: Some(m),
                success: m == want,
                failure: if m == want {
                    None
                } else {
                    Some(FailureMode::BinCollision)
                },
            },
            Err(e) => Transcript {
                k,
                queries,
                answers: (a1, a2),
                decoded: None,
                success: false,
                failure: Some(classify(e)),
            },
        }
    }
}

fn low_mask(width: u32) -> u64 {
    ((1u128 << width) - 1) as u64
}

fn pack_query(qa: u8, qb: u8) -> u8 {
    (qa - 1) * 2 + qb
}

fn unpack_query(q: u8) -> (u8, u8) {
    ((q - 1) / 2 + 1, (q - 1) % 2 + 1)
}

/// Wraps a code in the symmetrization combinator: block length doubles and
/// per-database storage and retrieval rates equalize to the sums of the
/// inner code's per-database rates.
pub fn symmetrize(code: PirCode) -> PirCode {
    PirCode::Symmetrized(Box::new(code))
}

/// Per-failure-mode counts of a Monte Carlo run.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize, PartialEq, Eq)]
pub struct FailureCounts {
    pub atypical: u64,
    pub collision: u64,
    pub ambiguity: u64,
}

impl FailureCounts {
    pub fn total(&self) -> u64 {
        self.atypical + self.collision + self.ambiguity
    }
}

/// Seeds recorded in a report: the trial root and the code parameters.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReportSeeds {
    pub trial: u64,
    pub code: CodeSpec,
}

/// Result of a Monte Carlo error estimate.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimReport {
    pub trials: u64,
    pub pe: f64,
    pub failures: FailureCounts,
    pub alpha_hat: f64,
    pub beta_hat: f64,
    pub seeds: ReportSeeds,
}

/// Monte Carlo error estimate: i.i.d. uniform message pairs, uniform desired
/// index, queries per the protocol distribution. Also reports the empirical
/// normalized storage and retrieval rates.
pub fn estimate_error(code: &PirCode, trials: u64, seed: u64) -> Result<SimReport> {
    if trials == 0 {
        return Err(Error::Param("trials must be >= 1".into()));
    }
    let m = code.message_len();
    let mask = (1u64 << m) - 1;
    let mut failures = FailureCounts::default();
    let mut answer_bits: u64 = 0;
    for i in 0..trials {
        let ts = trial_seed(seed, i);
        let mut rng = ChaCha8Rng::seed_from_u64(ts);
        let w1 = rng.next_u64() & mask;
        let w2 = rng.next_u64() & mask;
        let k = 1 + (rng.next_u32() & 1) as u8;
        let t = code.retrieve(k, w1, w2, mix64(ts ^ 0x5151));
        answer_bits += (t.answers.0.width + t.answers.1.width) as u64;
        if let Some(mode) = t.failure {
            match mode {
                FailureMode::AtypicalSource => failures.atypical += 1,
                FailureMode::BinCollision => failures.collision += 1,
                FailureMode::DecodeAmbiguity => failures.ambiguity += 1,
            }
        }
    }
    let l = m as f64;
    Ok(SimReport {
        trials,
        pe: failures.total() as f64 / trials as f64,
        failures,
        alpha_hat: (code.storage_bits(1) + code.storage_bits(2)) as f64 / (2.0 * l),
        beta_hat: answer_bits as f64 / trials as f64 / (2.0 * l),
        seeds: ReportSeeds {
            trial: seed,
            code: code.spec(),
        },
    })
}

/// Per-database exact audit outcome.
#[derive(Clone, Debug, Serialize)]
pub struct DbAudit {
    pub db: u8,
    pub equal: bool,
    pub triples_k1: usize,
    pub triples_k2: usize,
}

/// Outcome of the exact privacy audit.
#[derive(Clone, Debug, Serialize)]
pub struct PrivacyVerdict {
    pub equal: bool,
    pub per_db: Vec<DbAudit>,
    pub method: String,
}

/// Exact privacy audit: for each database, the joint distribution of
/// (query, answer, storage) under `k = 1` must equal the one under `k = 2`.
///
/// The audit enumerates every message pair and every supported query with
/// integer weights, so the comparison is exact — no tolerance. Symmetrized
/// codes are audited through their product structure: the composite triple is
/// the independent product of the two copies' triples, and two product
/// measures are equal exactly when both factor pairs are (each factor is a
/// marginal of the product), so the factor audit is equivalent to direct
/// enumeration over the doubled message space.
pub fn verify_privacy(code: &PirCode, l_cap: usize) -> Result<PrivacyVerdict> {
    if let PirCode::Symmetrized(inner) = code {
        let v = verify_privacy(inner, l_cap)?;
        let both = v.per_db.iter().all(|d| d.equal);
        return Ok(PrivacyVerdict {
            equal: both,
            per_db: v
                .per_db
                .iter()
                .map(|d| DbAudit {
                    db: d.db,
                    equal: both,
                    triples_k1: d.triples_k1,
                    triples_k2: d.triples_k2,
                })
                .collect(),
            method: "product factorization over exhaustive factor audits".into(),
        });
    }

    let m = code.message_len();
    if m > l_cap {
        return Err(Error::AuditTooLarge { l: m, cap: l_cap });
    }
    let pairs = 1u64 << (2 * m);
    let mut per_db = Vec::new();
    for db in 1..=2u8 {
        let mut maps: [BTreeMap<(u8, u64, u64), u64>; 2] = [BTreeMap::new(), BTreeMap::new()];
        for k in 1..=2u8 {
            let support = code.query_support(k);
            for pair in 0..pairs {
                let w1 = pair >> m;
                let w2 = pair & ((1 << m) - 1);
                let s = code.storage(db, w1, w2);
                for &(q1, q2) in &support {
                    let q = if db == 1 { q1 } else { q2 };
                    let a = code.answer(db, k, q, w1, w2);
                    *maps[(k - 1) as usize]
                        .entry((q, a.bits, s.bits))
                        .or_insert(0) += 1;
                }
            }
        }
        per_db.push(DbAudit {
            db,
            equal: maps[0] == maps[1],
            triples_k1: maps[0].len(),
            triples_k2: maps[1].len(),
        });
    }
    Ok(PrivacyVerdict {
        equal: per_db.iter().all(|d| d.equal),
        per_db,
        method: "exhaustive enumeration".into(),
    })
}

/// Exhaustive correctness map of a code: for every message pair, whether any
/// supported query pair fails to retrieve the desired message.
#[derive(Clone, Debug)]
pub struct ErrorMap {
    message_len: usize,
    support_size: u64,
    bad: Vec<u64>,
    bad_count: u64,
    err_events: u64,
}

impl ErrorMap {
    pub fn message_len(&self) -> usize {
        self.message_len
    }

    pub fn bad_count(&self) -> u64 {
        self.bad_count
    }

    pub fn is_bad(&self, w1: u64, w2: u64) -> bool {
        let idx = (w1 << self.message_len) | w2;
        self.bad[(idx >> 6) as usize] >> (idx & 63) & 1 == 1
    }

    /// Exact average error probability: uniform messages, uniform desired
    /// index, uniform query pair within the support.
    pub fn pe(&self) -> f64 {
        let (num, den) = self.pe_exact();
        num as f64 / den as f64
    }

    /// Exact numerator and denominator of [`ErrorMap::pe`].
    pub fn pe_exact(&self) -> (u64, u128) {
        (
            self.err_events,
            (1u128 << (2 * self.message_len)) * 2 * self.support_size as u128,
        )
    }
}

/// Builds the exhaustive error map. Enumeration visits `2^{2L}` pairs times
/// the query support, so `L` is capped.
pub fn error_map(code: &PirCode, l_cap: usize) -> Result<ErrorMap> {
    let m = code.message_len();
    if m > l_cap {
        return Err(Error::AuditTooLarge { l: m, cap: l_cap });
    }
    let pairs = 1u64 << (2 * m);
    let support_size = code.query_support(1).len() as u64;
    let mut bad = vec![0u64; pairs.div_ceil(64) as usize];
    let mut bad_count = 0u64;
    let mut err_events = 0u64;
    for pair in 0..pairs {
        let w1 = pair >> m;
        let w2 = pair & ((1 << m) - 1);
        let mut any = false;
        for k in 1..=2u8 {
            for queries in code.query_support(k) {
                let t = code.retrieve_with_queries(k, queries, w1, w2);
                if !t.success {
                    any = true;
                    err_events += 1;
                }
            }
        }
        if any {
            bad[(pair >> 6) as usize] |= 1 << (pair & 63);
            bad_count += 1;
        }
    }
    Ok(ErrorMap {
        message_len: m,
        support_size,
        bad,
        bad_count,
        err_events,
    })
}

/// Certificate accompanying an expurgated code.
#[derive(Clone, Debug, Serialize)]
pub struct ExpurgationCertificate {
    /// Message length of the wrapped code (inner length minus one).
    pub message_len: usize,
    pub bad_pairs: u64,
    pub good_pairs: u64,
    /// Exact average error probability of the inner code.
    pub epsilon: f64,
    /// When `epsilon <= 1/8`, whether the bad-pair count respects the
    /// counting bound `2^{2L-1}`; `None` when the premise fails.
    pub bad_within_bound: Option<bool>,
    /// Exhaustive zero-error verification of the wrapped code.
    pub zero_error_verified: bool,
}

/// Extracts a zero-error code over `(L-1)`-bit messages from an exhaustive
/// error map: the lexicographically first `2^{2L-2}` error-free pairs carry
/// the restricted message set, and the wrapped code is re-verified
/// exhaustively over all of them and every supported query pair.
pub fn expurgate(code: &PirCode, map: &ErrorMap) -> Result<(PirCode, ExpurgationCertificate)> {
    let m = map.message_len();
    if m != code.message_len() {
        return Err(Error::Param("error map belongs to a different code".into()));
    }
    let needed = 1u64 << (2 * m - 2);
    let mut good = Vec::with_capacity(needed as usize);
    'outer: for w1 in 0..1u64 << m {
        for w2 in 0..1u64 << m {
            if !map.is_bad(w1, w2) {
                good.push((w1, w2));
                if good.len() as u64 == needed {
                    break 'outer;
                }
            }
        }
    }
    let total_good = (1u64 << (2 * m)) - map.bad_count();
    if (good.len() as u64) < needed {
        return Err(Error::NotEnoughGoodPairs {
            good: total_good,
            needed,
        });
    }

    let wrapped = PirCode::Expurgated(ExpurgatedCode {
        inner: Box::new(code.clone()),
        good,
    });

    // exhaustive zero-error certification of the wrapped code
    let wm = m - 1;
    let mut zero_error = true;
    'cert: for pair in 0..1u64 << (2 * wm) {
        let w1 = pair >> wm;
        let w2 = pair & ((1 << wm) - 1);
        for k in 1..=2u8 {
            for queries in wrapped.query_support(k) {
                if !wrapped.retrieve_with_queries(k, queries, w1, w2).success {
                    zero_error = false;
                    break 'cert;
                }
            }
        }
    }

    let epsilon = map.pe();
    let cert = ExpurgationCertificate {
        message_len: wm,
        bad_pairs: map.bad_count(),
        good_pairs: total_good,
        epsilon,
        bad_within_bound: if epsilon <= 0.125 {
            Some(map.bad_count() <= 1u64 << (2 * m - 1))
        } else {
            None
        },
        zero_error_verified: zero_error,
    };
    Ok((wrapped, cert))
}
