//! Normalized similarity measures over byte strings.
//!
//! Three measures are provided, each mapping a pair of symbol sequences to a
//! score in `[0, 1]` where `1` means identical:
//!
//! * Euclid: `1 - sqrt(sum((a_i - b_i)^2)) / (sqrt(n) * |alphabet|)`, using the
//!   numeric byte values.
//! * Hamming: `1 - mismatches / n`.
//! * Levenshtein: `1 - distance / max(|a|, |b|)`, with the distance computed by
//!   the usual insert/delete/substitute dynamic program.
//!
//! Euclid and Hamming are defined for equal lengths. [`SimilarityMetric::similarity`]
//! extends them to unequal lengths by charging every surplus position of the
//! longer input as a maximal mismatch.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimilarityError {
    #[error("length mismatch: {left} vs {right} symbols")]
    LengthMismatch { left: usize, right: usize },
    #[error("similarity of empty inputs is undefined")]
    Empty,
    #[error("symbol {symbol} is outside an alphabet of size {size}")]
    SymbolOutOfRange { symbol: u8, size: u32 },
    #[error("alphabet size must be at least 2, got {0}")]
    AlphabetTooSmall(u32),
    #[error("unknown metric `{0}` (expected euclid, hamming or levenshtein)")]
    UnknownMetric(String),
    #[error("edit costs must be finite and non-negative")]
    InvalidCosts,
}

/// Size of the symbol domain, `|σ|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Alphabet(u32);

impl Alphabet {
    pub const BYTES: Alphabet = Alphabet(256);

    pub fn new(size: u32) -> Result<Self, SimilarityError> {
        if size < 2 {
            return Err(SimilarityError::AlphabetTooSmall(size));
        }
        Ok(Alphabet(size))
    }

    pub fn size(self) -> u32 {
        self.0
    }

    /// Largest possible difference between two symbols.
    pub fn max_difference(self) -> u32 {
        self.0 - 1
    }

    fn check(self, symbols: &[u8]) -> Result<(), SimilarityError> {
        if self.0 >= 256 {
            return Ok(());
        }
        match symbols.iter().find(|&&s| u32::from(s) >= self.0) {
            Some(&symbol) => Err(SimilarityError::SymbolOutOfRange {
                symbol,
                size: self.0,
            }),
            None => Ok(()),
        }
    }
}

impl Default for Alphabet {
    fn default() -> Self {
        Alphabet::BYTES
    }
}

impl TryFrom<u32> for Alphabet {
    type Error = SimilarityError;

    fn try_from(size: u32) -> Result<Self, Self::Error> {
        Alphabet::new(size)
    }
}

impl From<Alphabet> for u32 {
    fn from(a: Alphabet) -> u32 {
        a.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Euclid,
    Hamming,
    Levenshtein,
}

impl MetricKind {
    pub const ALL: [MetricKind; 3] = [
        MetricKind::Euclid,
        MetricKind::Hamming,
        MetricKind::Levenshtein,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Euclid => "euclid",
            MetricKind::Hamming => "hamming",
            MetricKind::Levenshtein => "levenshtein",
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MetricKind {
    type Err = SimilarityError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "euclid" | "euclidean" => Ok(MetricKind::Euclid),
            "hamming" => Ok(MetricKind::Hamming),
            "levenshtein" | "lev" => Ok(MetricKind::Levenshtein),
            _ => Err(SimilarityError::UnknownMetric(s.to_string())),
        }
    }
}

/// Per-operation costs for the Levenshtein dynamic program.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EditCosts {
    pub insert: f64,
    pub delete: f64,
    pub substitute: f64,
}

impl EditCosts {
    pub const UNIT: EditCosts = EditCosts {
        insert: 1.0,
        delete: 1.0,
        substitute: 1.0,
    };

    pub fn new(insert: f64, delete: f64, substitute: f64) -> Result<Self, SimilarityError> {
        let ok = |c: f64| c.is_finite() && c >= 0.0;
        if ok(insert) && ok(delete) && ok(substitute) {
            Ok(EditCosts {
                insert,
                delete,
                substitute,
            })
        } else {
            Err(SimilarityError::InvalidCosts)
        }
    }

    pub fn is_unit(&self) -> bool {
        *self == EditCosts::UNIT
    }
}

impl Default for EditCosts {
    fn default() -> Self {
        EditCosts::UNIT
    }
}

/// A similarity measure together with the parameters it needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityMetric {
    pub kind: MetricKind,
    #[serde(default)]
    pub alphabet: Alphabet,
    /// Only consulted by [`MetricKind::Levenshtein`].
    #[serde(default)]
    pub edit_costs: EditCosts,
}

impl SimilarityMetric {
    pub fn new(kind: MetricKind) -> Self {
        SimilarityMetric {
            kind,
            alphabet: Alphabet::default(),
            edit_costs: EditCosts::default(),
        }
    }

    pub fn euclid() -> Self {
        Self::new(MetricKind::Euclid)
    }

    pub fn hamming() -> Self {
        Self::new(MetricKind::Hamming)
    }

    pub fn levenshtein() -> Self {
        Self::new(MetricKind::Levenshtein)
    }

    pub fn with_alphabet(mut self, alphabet: Alphabet) -> Self {
        self.alphabet = alphabet;
        self
    }

    pub fn with_costs(mut self, costs: EditCosts) -> Self {
        self.edit_costs = costs;
        self
    }

    /// Scores `a` against `b`, accepting unequal lengths for every kind.
    pub fn similarity(&self, a: &[u8], b: &[u8]) -> Result<f64, SimilarityError> {
        match self.kind {
            MetricKind::Levenshtein => levenshtein_similarity(a, b, &self.edit_costs),
            MetricKind::Hamming => {
                if a.is_empty() && b.is_empty() {
                    return Err(SimilarityError::Empty);
                }
                let n = a.len().max(b.len());
                Ok(1.0 - mismatches(a, b) as f64 / n as f64)
            }
            MetricKind::Euclid => {
                if a.is_empty() && b.is_empty() {
                    return Err(SimilarityError::Empty);
                }
                self.alphabet.check(a)?;
                self.alphabet.check(b)?;
                let n = a.len().max(b.len());
                Ok(euclid_score(
                    squared_difference(a, b, self.alphabet),
                    n,
                    self.alphabet,
                ))
            }
        }
    }
}

/// Position-wise mismatch count; every surplus symbol of the longer input
/// counts as one mismatch.
pub fn mismatches(a: &[u8], b: &[u8]) -> usize {
    let common = a.len().min(b.len());
    let differing = a[..common]
        .iter()
        .zip(&b[..common])
        .filter(|(x, y)| x != y)
        .count();
    differing + (a.len().max(b.len()) - common)
}

/// Sum of squared symbol differences; each surplus symbol contributes
/// `(|σ| - 1)^2`.
pub fn squared_difference(a: &[u8], b: &[u8], alphabet: Alphabet) -> u64 {
    let common = a.len().min(b.len());
    let sum: u64 = a[..common]
        .iter()
        .zip(&b[..common])
        .map(|(&x, &y)| {
            let d = i64::from(x) - i64::from(y);
            (d * d) as u64
        })
        .sum();
    let surplus = (a.len().max(b.len()) - common) as u64;
    let max = u64::from(alphabet.max_difference());
    sum + surplus * max * max
}

/// Euclid score from an accumulated squared difference over `n` positions.
pub fn euclid_score(squared: u64, n: usize, alphabet: Alphabet) -> f64 {
    1.0 - (squared as f64).sqrt() / ((n as f64).sqrt() * f64::from(alphabet.size()))
}

fn equal_nonempty(a: &[u8], b: &[u8]) -> Result<(), SimilarityError> {
    if a.len() != b.len() {
        return Err(SimilarityError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Err(SimilarityError::Empty);
    }
    Ok(())
}

pub fn euclid_similarity(a: &[u8], b: &[u8], alphabet: Alphabet) -> Result<f64, SimilarityError> {
    equal_nonempty(a, b)?;
    alphabet.check(a)?;
    alphabet.check(b)?;
    Ok(euclid_score(
        squared_difference(a, b, alphabet),
        a.len(),
        alphabet,
    ))
}

pub fn hamming_similarity(a: &[u8], b: &[u8]) -> Result<f64, SimilarityError> {
    equal_nonempty(a, b)?;
    Ok(1.0 - mismatches(a, b) as f64 / a.len() as f64)
}

/// Minimum total edit cost turning `a` into `b`.
///
/// Rows walk `b`, columns walk `a`; a deletion consumes a symbol of `b`, an
/// insertion a symbol of `a`.
pub fn levenshtein_distance(a: &[u8], b: &[u8], costs: &EditCosts) -> f64 {
    if costs.is_unit() {
        return unit_levenshtein(a, b) as f64;
    }
    let mut prev: Vec<f64> = (0..=a.len()).map(|j| j as f64 * costs.insert).collect();
    let mut cur = vec![0.0; a.len() + 1];
    for (i, &bi) in b.iter().enumerate() {
        cur[0] = (i + 1) as f64 * costs.delete;
        for (j, &aj) in a.iter().enumerate() {
            let substitute = if aj == bi { 0.0 } else { costs.substitute };
            cur[j + 1] = (prev[j + 1] + costs.delete)
                .min(cur[j] + costs.insert)
                .min(prev[j] + substitute);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[a.len()]
}

/// Integer unit-cost Levenshtein distance.
pub fn unit_levenshtein(a: &[u8], b: &[u8]) -> usize {
    // Short keys keep the row on the stack.
    let mut stack = [0u32; 65];
    let mut heap = Vec::new();
    let row: &mut [u32] = if a.len() < stack.len() {
        &mut stack[..=a.len()]
    } else {
        heap.resize(a.len() + 1, 0);
        &mut heap
    };
    for (j, cell) in row.iter_mut().enumerate() {
        *cell = j as u32;
    }
    for (i, &bi) in b.iter().enumerate() {
        let mut diag = row[0];
        let mut left = i as u32 + 1;
        row[0] = left;
        for (cell, &aj) in row[1..].iter_mut().zip(a) {
            let above = *cell;
            let substitute = diag + u32::from(aj != bi);
            diag = above;
            left = substitute.min(above + 1).min(left + 1);
            *cell = left;
        }
    }
    row[a.len()] as usize
}

pub fn levenshtein_similarity(
    a: &[u8],
    b: &[u8],
    costs: &EditCosts,
) -> Result<f64, SimilarityError> {
    let n = a.len().max(b.len());
    if n == 0 {
        return Err(SimilarityError::Empty);
    }
    let score = 1.0 - levenshtein_distance(a, b, costs) / n as f64;
    // Non-unit costs can push the distance past max(|a|, |b|).
    Ok(score.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Independent per-character Euclid oracle: no shared helpers.
    fn euclid_oracle(a: &str, b: &str, sigma: f64) -> f64 {
        let mut sum = 0.0f64;
        for (x, y) in a.chars().zip(b.chars()) {
            let d = x as u32 as f64 - y as u32 as f64;
            sum += d * d;
        }
        1.0 - sum.sqrt() / ((a.len() as f64).sqrt() * sigma)
    }

    // Exhaustive recursive edit-script search with memo-free branching.
    fn edit_oracle(a: &[u8], b: &[u8]) -> usize {
        match (a.split_first(), b.split_first()) {
            (None, _) => b.len(),
            (_, None) => a.len(),
            (Some((x, ra)), Some((y, rb))) => {
                let sub = edit_oracle(ra, rb) + usize::from(x != y);
                let del = edit_oracle(ra, b) + 1;
                let ins = edit_oracle(a, rb) + 1;
                sub.min(del).min(ins)
            }
        }
    }

    #[test]
    fn euclid_examples() {
        let bytes = Alphabet::BYTES;
        assert_eq!(euclid_similarity(b"AB", b"AB", bytes).unwrap(), 1.0);
        assert_eq!(euclid_similarity(b"A", b"B", bytes).unwrap(), 0.99609375);
        let got = euclid_similarity(b"AC", b"AA", bytes).unwrap();
        assert!((got - euclid_oracle("AC", "AA", 256.0)).abs() < 1e-12);
        assert!((got - (1.0 - 2f64.sqrt() / 256.0)).abs() < 1e-12);
        assert!((got - 0.9944757).abs() < 1e-7);
    }

    #[test]
    fn euclid_errors() {
        let bytes = Alphabet::BYTES;
        assert_eq!(
            euclid_similarity(b"AB", b"A", bytes),
            Err(SimilarityError::LengthMismatch { left: 2, right: 1 })
        );
        assert_eq!(
            euclid_similarity(b"", b"", bytes),
            Err(SimilarityError::Empty)
        );
        let small = Alphabet::new(4).unwrap();
        assert_eq!(
            euclid_similarity(&[0, 9], &[1, 2], small),
            Err(SimilarityError::SymbolOutOfRange { symbol: 9, size: 4 })
        );
        assert!(Alphabet::new(1).is_err());
    }

    #[test]
    fn hamming_examples() {
        assert_eq!(hamming_similarity(b"FIND", b"FIND").unwrap(), 1.0);
        assert_eq!(hamming_similarity(b"FIND", b"FINE").unwrap(), 0.75);
        assert_eq!(hamming_similarity(b"AB", b"BA").unwrap(), 0.0);
        assert!(hamming_similarity(b"AB", b"ABC").is_err());
        assert_eq!(hamming_similarity(b"", b""), Err(SimilarityError::Empty));
    }

    #[test]
    fn levenshtein_examples() {
        let unit = EditCosts::UNIT;
        assert_eq!(levenshtein_distance(b"abc", b"abc", &unit), 0.0);
        assert_eq!(levenshtein_distance(b"", b"abc", &unit), 3.0);
        assert_eq!(edit_oracle(b"kitten", b"sitting"), 3);
        assert_eq!(levenshtein_distance(b"kitten", b"sitting", &unit), 3.0);

        assert_eq!(levenshtein_similarity(b"abc", b"abc", &unit).unwrap(), 1.0);
        assert_eq!(levenshtein_similarity(b"", b"abc", &unit).unwrap(), 0.0);
        let s = levenshtein_similarity(b"kitten", b"sitting", &unit).unwrap();
        assert!((s - (1.0 - 3.0 / 7.0)).abs() < 1e-12);
        assert_eq!(
            levenshtein_similarity(b"", b"", &unit),
            Err(SimilarityError::Empty)
        );
    }

    #[test]
    fn weighted_costs_follow_the_recurrence() {
        let costs = EditCosts::new(2.0, 3.0, 10.0).unwrap();
        // b = "a" → a = "": one deletion.
        assert_eq!(levenshtein_distance(b"", b"a", &costs), 3.0);
        // a = "a", b = "": one insertion.
        assert_eq!(levenshtein_distance(b"a", b"", &costs), 2.0);
        // Substitution (10) loses to delete + insert (5).
        assert_eq!(levenshtein_distance(b"x", b"y", &costs), 5.0);
        assert!(EditCosts::new(-1.0, 1.0, 1.0).is_err());
        assert_eq!(levenshtein_similarity(b"x", b"y", &costs).unwrap(), 0.0);
    }

    #[test]
    fn dispatch_examples() {
        assert_eq!(
            SimilarityMetric::hamming()
                .similarity(b"AND", b"AND")
                .unwrap(),
            1.0
        );
        assert_eq!(
            SimilarityMetric::euclid().similarity(b"A", b"A").unwrap(),
            1.0
        );
        assert_eq!(
            SimilarityMetric::levenshtein()
                .similarity(b"FAIL", b"FAIR")
                .unwrap(),
            0.75
        );
    }

    #[test]
    fn dispatch_charges_surplus_as_maximal_mismatch() {
        let h = SimilarityMetric::hamming();
        assert_eq!(h.similarity(b"FIND", b"FI").unwrap(), 0.5);
        assert_eq!(h.similarity(b"", b"AB").unwrap(), 0.0);
        let e = SimilarityMetric::euclid();
        // One matching symbol plus one surplus symbol at difference 255.
        let expected = 1.0 - (255.0f64 * 255.0).sqrt() / (2f64.sqrt() * 256.0);
        assert!((e.similarity(b"AB", b"A").unwrap() - expected).abs() < 1e-12);
        assert!(h.similarity(b"", b"").is_err());
    }

    #[test]
    fn metric_names_parse() {
        for kind in MetricKind::ALL {
            assert_eq!(kind.name().parse::<MetricKind>().unwrap(), kind);
        }
        assert!("cosine".parse::<MetricKind>().is_err());
    }

    fn all_strings(max_len: usize) -> Vec<Vec<u8>> {
        let mut out = vec![Vec::new()];
        let mut frontier = vec![Vec::new()];
        for _ in 0..max_len {
            let mut next = Vec::new();
            for s in &frontier {
                for c in *b"ab" {
                    let mut t: Vec<u8> = s.clone();
                    t.push(c);
                    next.push(t);
                }
            }
            out.extend(next.iter().cloned());
            frontier = next;
        }
        out
    }

    #[test]
    fn levenshtein_matches_exhaustive_search_on_binary_strings() {
        let strings = all_strings(5);
        for a in &strings {
            for b in &strings {
                assert_eq!(unit_levenshtein(a, b), edit_oracle(a, b), "{a:?} {b:?}");
            }
        }
    }

    proptest! {
        #[test]
        fn scores_are_bounded_and_symmetric(pair in (1usize..40).prop_flat_map(|n| {
            (prop::collection::vec(any::<u8>(), n), prop::collection::vec(any::<u8>(), n))
        })) {
            let (a, b) = pair;
            let e = euclid_similarity(&a, &b, Alphabet::BYTES).unwrap();
            let h = hamming_similarity(&a, &b).unwrap();
            let l = levenshtein_similarity(&a, &b, &EditCosts::UNIT).unwrap();
            for s in [e, h, l] {
                prop_assert!((0.0..=1.0).contains(&s));
            }
            prop_assert_eq!(e.to_bits(), euclid_similarity(&b, &a, Alphabet::BYTES).unwrap().to_bits());
            prop_assert_eq!(h.to_bits(), hamming_similarity(&b, &a).unwrap().to_bits());
            prop_assert_eq!(euclid_similarity(&a, &a, Alphabet::BYTES).unwrap(), 1.0);
            prop_assert_eq!(hamming_similarity(&a, &a).unwrap(), 1.0);
            prop_assert_eq!(levenshtein_similarity(&a, &a, &EditCosts::UNIT).unwrap(), 1.0);
            prop_assert_eq!(h == 1.0, a == b);
            prop_assert_eq!(l == 1.0, a == b);
        }

        #[test]
        fn flipping_more_positions_never_raises_hamming(
            a in prop::collection::vec(any::<u8>(), 1..30),
            order in prop::collection::vec(any::<prop::sample::Index>(), 1..30),
        ) {
            let mut b = a.clone();
            let mut last = 1.0;
            for idx in order {
                let i = idx.index(a.len());
                b[i] = a[i].wrapping_add(1);
                let s = hamming_similarity(&a, &b).unwrap();
                prop_assert!(s <= last);
                last = s;
            }
        }

        #[test]
        fn weighted_dp_with_unit_costs_matches_integer_dp(
            a in prop::collection::vec(0u8..4, 0..12),
            b in prop::collection::vec(0u8..4, 0..12),
        ) {
            let generic = {
                // Force the floating-point path with costs equal to one but a distinct representation.
                let costs = EditCosts { insert: 1.0, delete: 1.0, substitute: 1.0 + f64::EPSILON };
                levenshtein_distance(&a, &b, &costs)
            };
            let unit = unit_levenshtein(&a, &b) as f64;
            prop_assert!((generic - unit).abs() < 1e-9 * (1.0 + unit));
            prop_assert!(unit_levenshtein(&a, &b) <= a.len().max(b.len()));
            prop_assert_eq!(unit_levenshtein(&a, &b), unit_levenshtein(&b, &a));
        }
    }
}
