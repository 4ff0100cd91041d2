//! Seeded synthetic workloads: random patterns, a random background text and
//! mutated pattern copies planted at recorded offsets.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::automaton::{build_trie, PatternId, PatternSet};

/// Symbols used for patterns and background text.
pub const ALPHABET: &[u8] = b"abcdefghijklmnopqrstuvwxyz0123456789";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DatagenError {
    #[error("invalid length range {min}..={max}")]
    InvalidLengths { min: usize, max: usize },
    #[error("cannot draw {count} distinct patterns with lengths {min}..={max}")]
    NotEnoughDistinct {
        count: usize,
        min: usize,
        max: usize,
    },
    #[error("mutation rate {0} outside [0, 0.5]")]
    InvalidRate(f64),
    #[error("plants need {needed} bytes but the corpus has {size}")]
    Overflow { needed: usize, size: usize },
    #[error("unknown pattern id {0}")]
    UnknownPattern(PatternId),
}

/// Per-position mutation probabilities for a planted copy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MutationSpec {
    pub substitution_rate: f64,
    pub insertion_rate: f64,
    pub deletion_rate: f64,
    pub seed: u64,
}

impl MutationSpec {
    pub fn substitutions(rate: f64, seed: u64) -> Self {
        MutationSpec {
            substitution_rate: rate,
            insertion_rate: 0.0,
            deletion_rate: 0.0,
            seed,
        }
    }

    pub fn exact(seed: u64) -> Self {
        Self::substitutions(0.0, seed)
    }

    pub fn validate(&self) -> Result<(), DatagenError> {
        for rate in [
            self.substitution_rate,
            self.insertion_rate,
            self.deletion_rate,
        ] {
            if !(0.0..=0.5).contains(&rate) {
                return Err(DatagenError::InvalidRate(rate));
            }
        }
        Ok(())
    }

    /// Applies the mutation to `pattern`. Each position is deleted,
    /// substituted by a different symbol, or kept, and may be followed by an
    /// inserted symbol.
    pub fn apply(&self, pattern: &[u8]) -> Mutated {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut out = Mutated {
            bytes: Vec::with_capacity(pattern.len() + 4),
            ..Mutated::default()
        };
        for &c in pattern {
            if rng.gen_bool(self.deletion_rate) {
                out.deletions += 1;
            } else if rng.gen_bool(self.substitution_rate) {
                out.bytes.push(other_symbol(&mut rng, c));
                out.substitutions += 1;
            } else {
                out.bytes.push(c);
            }
            if rng.gen_bool(self.insertion_rate) {
                out.bytes.push(random_symbol(&mut rng));
                out.insertions += 1;
            }
        }
        if out.bytes.is_empty() {
            // Never plant nothing: keep the first symbol.
            out.bytes.push(pattern[0]);
            out.deletions -= 1;
        }
        out
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Mutated {
    pub bytes: Vec<u8>,
    pub substitutions: usize,
    pub insertions: usize,
    pub deletions: usize,
}

fn random_symbol(rng: &mut ChaCha8Rng) -> u8 {
    ALPHABET[rng.gen_range(0..ALPHABET.len())]
}

fn other_symbol(rng: &mut ChaCha8Rng, c: u8) -> u8 {
    loop {
        let s = random_symbol(rng);
        if s != c {
            return s;
        }
    }
}

/// `count` distinct patterns over [`ALPHABET`], lengths uniform in
/// `min_len..=max_len`.
pub fn gen_patterns(
    count: usize,
    min_len: usize,
    max_len: usize,
    seed: u64,
) -> Result<PatternSet, DatagenError> {
    if min_len == 0 || min_len > max_len {
        return Err(DatagenError::InvalidLengths {
            min: min_len,
            max: max_len,
        });
    }
    let capacity = (min_len..=max_len)
        .map(|l| (ALPHABET.len() as u128).saturating_pow(l.min(32) as u32))
        .fold(0u128, u128::saturating_add);
    if count as u128 > capacity {
        return Err(DatagenError::NotEnoughDistinct {
            count,
            min: min_len,
            max: max_len,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while out.len() < count {
        attempts += 1;
        if attempts > count.saturating_mul(1000).max(10_000) {
            return Err(DatagenError::NotEnoughDistinct {
                count,
                min: min_len,
                max: max_len,
            });
        }
        let len = rng.gen_range(min_len..=max_len);
        let p: Vec<u8> = (0..len).map(|_| random_symbol(&mut rng)).collect();
        if seen.insert(p.clone()) {
            out.push(p);
        }
    }
    Ok(PatternSet::new(out).expect("distinct and non-empty"))
}

/// Ground truth for one planted copy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedOccurrence {
    pub pattern_id: PatternId,
    pub offset: usize,
    /// The mutated bytes written at `offset`.
    pub text: String,
    pub substitutions: usize,
    pub insertions: usize,
    pub deletions: usize,
}

impl PlantedOccurrence {
    pub fn end(&self) -> usize {
        self.offset + self.text.len()
    }

    pub fn is_exact(&self) -> bool {
        self.substitutions + self.insertions + self.deletions == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub bytes: Vec<u8>,
    pub plants: Vec<PlantedOccurrence>,
}

impl Corpus {
    pub fn ground_truth_json(&self) -> String {
        serde_json::to_string_pretty(&self.plants).expect("plain data serializes")
    }
}

/// Random background of `size` bytes with the requested plants written at
/// random non-overlapping offsets, at least one background byte apart. Any
/// exact pattern occurrence not contained in a plant is destroyed by
/// re-rolling one of its background bytes.
pub fn gen_corpus(
    patterns: &PatternSet,
    size: usize,
    planted: &[(PatternId, MutationSpec)],
    seed: u64,
) -> Result<Corpus, DatagenError> {
    let mut copies = Vec::with_capacity(planted.len());
    for &(id, spec) in planted {
        if id >= patterns.len() {
            return Err(DatagenError::UnknownPattern(id));
        }
        spec.validate()?;
        copies.push((id, spec.apply(patterns.get(id))));
    }
    let needed: usize = copies.iter().map(|(_, m)| m.bytes.len() + 1).sum();
    if needed > size + usize::from(!copies.is_empty()) {
        return Err(DatagenError::Overflow { needed, size });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bytes: Vec<u8> = (0..size).map(|_| random_symbol(&mut rng)).collect();
    copies.shuffle(&mut rng);

    // Distribute the free bytes over the gaps between plants.
    let free = size + usize::from(!copies.is_empty()) - needed;
    let mut cuts: Vec<usize> = (0..copies.len()).map(|_| rng.gen_range(0..=free)).collect();
    cuts.sort_unstable();
    let mut plants = Vec::with_capacity(copies.len());
    let mut in_plant = vec![false; size];
    let mut used = 0;
    for ((id, m), cut) in copies.into_iter().zip(cuts) {
        let offset = cut + used;
        bytes[offset..offset + m.bytes.len()].copy_from_slice(&m.bytes);
        in_plant[offset..offset + m.bytes.len()]
            .iter_mut()
            .for_each(|b| *b = true);
        used += m.bytes.len() + 1;
        plants.push(PlantedOccurrence {
            pattern_id: id,
            offset,
            text: String::from_utf8(m.bytes).expect("alphabet is ASCII"),
            substitutions: m.substitutions,
            insertions: m.insertions,
            deletions: m.deletions,
        });
    }

    let aut = build_trie(patterns).compute_failures();
    loop {
        let mut clean = true;
        for r in aut.exact_scan(&bytes) {
            let start = r.end_offset - patterns.get(r.pattern_id).len();
            let background: Vec<usize> = (start..r.end_offset).filter(|&i| !in_plant[i]).collect();
            if let Some(&i) = background.choose(&mut rng) {
                bytes[i] = other_symbol(&mut rng, bytes[i]);
                clean = false;
            }
        }
        if clean {
            break;
        }
    }
    Ok(Corpus { bytes, plants })
}

/// `count` plants cycling through `substitution_rates`, pattern ids drawn at
/// random, every plant with its own mutation seed.
pub fn plant_plan(
    pattern_count: usize,
    count: usize,
    substitution_rates: &[f64],
    seed: u64,
) -> Vec<(PatternId, MutationSpec)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let rate = substitution_rates[i % substitution_rates.len()];
            (
                rng.gen_range(0..pattern_count),
                MutationSpec::substitutions(rate, rng.gen()),
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pattern_generation() {
        let set = gen_patterns(75, 4, 15, 42).unwrap();
        assert_eq!(set.len(), 75);
        assert!(set
            .iter()
            .all(|p| (4..=15).contains(&p.len()) && p.iter().all(|c| ALPHABET.contains(c))));
        assert_eq!(set, gen_patterns(75, 4, 15, 42).unwrap());
        assert_ne!(set, gen_patterns(75, 4, 15, 43).unwrap());

        let one = gen_patterns(1, 4, 4, 9).unwrap();
        assert_eq!(one.get(0).len(), 4);

        let long = gen_patterns(75, 8, 30, 42).unwrap();
        assert!(long.iter().all(|p| (8..=30).contains(&p.len())));

        assert!(matches!(
            gen_patterns(37, 1, 1, 0),
            Err(DatagenError::NotEnoughDistinct { .. })
        ));
        assert_eq!(gen_patterns(36, 1, 1, 0).unwrap().len(), 36);
        assert!(matches!(
            gen_patterns(1, 5, 4, 0),
            Err(DatagenError::InvalidLengths { .. })
        ));
        assert!(matches!(
            gen_patterns(1, 0, 4, 0),
            Err(DatagenError::InvalidLengths { .. })
        ));
    }

    #[test]
    fn mutation_counts_match_the_edit() {
        let pattern = b"abcdefghijklmnopqrstuvwxyz";
        let m = MutationSpec::substitutions(0.3, 5).apply(pattern);
        assert_eq!(m.bytes.len(), pattern.len());
        let differing = m.bytes.iter().zip(pattern).filter(|(a, b)| a != b).count();
        assert_eq!(differing, m.substitutions);
        assert!(m.substitutions > 0);

        let spec = MutationSpec {
            substitution_rate: 0.1,
            insertion_rate: 0.2,
            deletion_rate: 0.2,
            seed: 1,
        };
        let m = spec.apply(pattern);
        assert_eq!(m.bytes.len(), pattern.len() + m.insertions - m.deletions);
        assert_eq!(MutationSpec::exact(3).apply(pattern).bytes, pattern);
        assert!(MutationSpec::substitutions(0.6, 0).validate().is_err());
    }

    #[test]
    fn corpus_with_plants() {
        let patterns = gen_patterns(75, 4, 15, 42).unwrap();
        let plan = plant_plan(patterns.len(), 200, &[0.0, 0.05, 0.10, 0.15], 7);
        let corpus = gen_corpus(&patterns, 200_000, &plan, 7).unwrap();
        assert_eq!(corpus.bytes.len(), 200_000);
        assert_eq!(corpus.plants.len(), 200);
        assert_eq!(corpus, gen_corpus(&patterns, 200_000, &plan, 7).unwrap());

        let mut spans: Vec<(usize, usize)> =
            corpus.plants.iter().map(|p| (p.offset, p.end())).collect();
        spans.sort_unstable();
        assert!(
            spans.windows(2).all(|w| w[0].1 < w[1].0),
            "plants overlap or touch"
        );
        for p in &corpus.plants {
            assert_eq!(&corpus.bytes[p.offset..p.end()], p.text.as_bytes());
        }

        let aut = build_trie(&patterns).compute_failures();
        let found: HashSet<(usize, usize)> = aut
            .exact_scan(&corpus.bytes)
            .iter()
            .map(|r| r.key())
            .collect();
        for p in corpus.plants.iter().filter(|p| p.is_exact()) {
            assert!(found.contains(&(p.end(), p.pattern_id)));
        }
        for (end, id) in found {
            let start = end - patterns.get(id).len();
            assert!(
                spans.iter().any(|&(a, b)| a <= start && end <= b),
                "accidental occurrence at {start}"
            );
        }
        let json: Vec<PlantedOccurrence> =
            serde_json::from_str(&corpus.ground_truth_json()).unwrap();
        assert_eq!(json, corpus.plants);
    }

    #[test]
    fn pure_background_and_overflow() {
        let patterns = gen_patterns(10, 4, 6, 1).unwrap();
        let corpus = gen_corpus(&patterns, 10_000, &[], 1).unwrap();
        assert!(corpus.plants.is_empty());
        assert!(build_trie(&patterns)
            .compute_failures()
            .exact_scan(&corpus.bytes)
            .is_empty());

        let plan = vec![(0, MutationSpec::exact(0)); 3];
        assert!(matches!(
            gen_corpus(&patterns, 5, &plan, 1),
            Err(DatagenError::Overflow { .. })
        ));
        let tight_len = 3 * (patterns.get(0).len() + 1) - 1;
        let tight = gen_corpus(&patterns, tight_len, &plan, 1).unwrap();
        assert_eq!(tight.plants.len(), 3);
        assert!(matches!(
            gen_corpus(&patterns, 100, &[(10, MutationSpec::exact(0))], 1),
            Err(DatagenError::UnknownPattern(10))
        ));
    }
}
