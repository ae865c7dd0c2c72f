//! Probability-ranked fixed-length indexing of i.i.d. sequences.
//!
//! Sequences over a small alphabet are ordered by per-sequence probability
//! (most probable type classes first, ties broken by count vector, sequences
//! within a class in lexicographic order) and assigned consecutive indices
//! until the index budget `2^width - 1` is exhausted. The all-ones index is
//! reserved as an escape value for sequences beyond the budget, so the code
//! is a fixed-length near-lossless source code; when the budget covers the
//! whole support it is lossless.

use num_rational::BigRational;
use num_traits::Zero;

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
struct TypeClass {
    counts: Vec<u16>,
    size: u128,
    /// Sequences of this class that received indices (lex prefix).
    included: u128,
    /// Index of the class's first sequence.
    offset: u128,
}

/// Ranked fixed-length code for length-`len` sequences drawn i.i.d. from a
/// finite alphabet.
#[derive(Clone, Debug)]
pub struct RankedIidCode {
    len: usize,
    alphabet: usize,
    width: u32,
    capacity: u128,
    supported_total: u128,
    classes: Vec<TypeClass>,
}

impl RankedIidCode {
    /// Builds the code. `probs` are the exact symbol probabilities; symbols
    /// with zero probability are unsupported, so sequences containing them
    /// always escape.
    pub fn new(len: usize, probs: &[BigRational], width: u32) -> Result<Self> {
        if len == 0 || probs.is_empty() {
            return Err(Error::Param(
                "ranked code needs len >= 1 and symbols".into(),
            ));
        }
        if width == 0 || width > 63 {
            return Err(Error::Param(format!("index width {width} out of range")));
        }
        let alphabet = probs.len();

        // enumerate count vectors over supported symbols
        let supported: Vec<usize> = (0..alphabet).filter(|&s| !probs[s].is_zero()).collect();
        let mut classes: Vec<TypeClass> = Vec::new();
        let mut counts = vec![0u16; alphabet];
        enumerate_counts(&supported, len, 0, &mut counts, &mut classes);

        // most probable first; ties by count vector for determinism
        let mut keyed: Vec<(BigRational, TypeClass)> = classes
            .into_iter()
            .map(|c| {
                let mut p = BigRational::from_integer(1.into());
                for (s, &cnt) in c.counts.iter().enumerate() {
                    for _ in 0..cnt {
                        p *= &probs[s];
                    }
                }
                (p, c)
            })
            .collect();
        keyed.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.counts.cmp(&b.1.counts)));

        let budget = (1u128 << width) - 1; // all-ones reserved for escape
        let supported_total: u128 = keyed.iter().map(|(_, c)| c.size).sum();
        let mut classes = Vec::with_capacity(keyed.len());
        let mut used: u128 = 0;
        for (_, mut c) in keyed {
            let room = budget.saturating_sub(used);
            c.included = c.size.min(room);
            c.offset = used;
            used += c.included;
            classes.push(c);
        }

        Ok(Self {
            len,
            alphabet,
            width,
            capacity: used,
            supported_total,
            classes,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    /// Escape index: all ones at the code's width.
    pub fn escape(&self) -> u64 {
        ((1u128 << self.width) - 1) as u64
    }

    /// Number of sequences that received indices.
    pub fn capacity(&self) -> u128 {
        self.capacity
    }

    /// True when every supported sequence received an index.
    pub fn is_lossless(&self) -> bool {
        self.capacity == self.supported_total
    }

    /// Index of a sequence, or `None` when it escapes (unsupported symbol or
    /// beyond the budget).
    pub fn rank(&self, seq: &[u8]) -> Option<u64> {
        debug_assert_eq!(seq.len(), self.len);
        let mut counts = vec![0u16; self.alphabet];
        for &s in seq {
            if s as usize >= self.alphabet {
                return None;
            }
            counts[s as usize] += 1;
        }
        let class = self.classes.iter().find(|c| c.counts == counts)?;
        if class.included == 0 {
            return None;
        }
        let r = lex_rank(seq, &counts);
        if r >= class.included {
            return None;
        }
        Some((class.offset + r) as u64)
    }

    /// Inverse of [`RankedIidCode::rank`].
    pub fn unrank(&self, index: u64) -> Option<Vec<u8>> {
        let idx = index as u128;
        if idx >= self.capacity {
            return None;
        }
        let class = self
            .classes
            .iter()
            .find(|c| idx >= c.offset && idx < c.offset + c.included)?;
        Some(lex_unrank(idx - class.offset, &class.counts, self.len))
    }
}

fn enumerate_counts(
    supported: &[usize],
    remaining: usize,
    pos: usize,
    counts: &mut Vec<u16>,
    out: &mut Vec<TypeClass>,
) {
    if pos == supported.len() {
        if remaining == 0 {
            let size = multinomial(counts);
            out.push(TypeClass {
                counts: counts.clone(),
                size,
                included: 0,
                offset: 0,
            });
        }
        return;
    }
    if pos + 1 == supported.len() {
        counts[supported[pos]] = remaining as u16;
        enumerate_counts(supported, 0, pos + 1, counts, out);
        counts[supported[pos]] = 0;
        return;
    }
    for c in 0..=remaining {
        counts[supported[pos]] = c as u16;
        enumerate_counts(supported, remaining - c, pos + 1, counts, out);
    }
    counts[supported[pos]] = 0;
}

/// Exact multinomial `n! / Π counts_i!` with `n = Σ counts_i`.
fn multinomial(counts: &[u16]) -> u128 {
    let mut result: u128 = 1;
    let mut n: u128 = 0;
    for &c in counts {
        for j in 1..=c as u128 {
            n += 1;
            result = result * n / j; // binomial prefix product, always exact
        }
    }
    result
}

/// Lexicographic rank of `seq` within its type class.
fn lex_rank(seq: &[u8], counts: &[u16]) -> u128 {
    let mut counts = counts.to_vec();
    let mut m = multinomial(&counts);
    let mut rank: u128 = 0;
    for (i, &s) in seq.iter().enumerate() {
        let remaining = (seq.len() - i) as u128;
        for &c_prev in counts.iter().take(s as usize) {
            if c_prev > 0 {
                rank += m * c_prev as u128 / remaining;
            }
        }
        m = m * counts[s as usize] as u128 / remaining;
        counts[s as usize] -= 1;
    }
    rank
}

/// Inverse of [`lex_rank`].
fn lex_unrank(mut rank: u128, counts: &[u16], len: usize) -> Vec<u8> {
    let mut counts = counts.to_vec();
    let mut m = multinomial(&counts);
    let mut seq = Vec::with_capacity(len);
    for i in 0..len {
        let remaining = (len - i) as u128;
        for (s, count) in counts.iter_mut().enumerate() {
            if *count == 0 {
                continue;
            }
            let sub = m * *count as u128 / remaining;
            if rank < sub {
                seq.push(s as u8);
                m = sub;
                *count -= 1;
                break;
            }
            rank -= sub;
        }
    }
    seq
}
