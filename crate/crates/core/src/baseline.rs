//! Reference scanner: every pattern is scored against every aligned input
//! slice with the full similarity measure, no pruning.
//!
//! Accuracy of the automaton is measured against this scanner, so it shares
//! the arbiter ([`judge`](crate::matcher::judge)) with it.

use crate::automaton::PatternSet;
use crate::matcher::{
    chunk_bounds, emit_candidate, sort_records, ConfigError, MatchRecord, ScanConfig,
};

/// All `(pattern, end)` pairs whose slice passes the global threshold and
/// the disjoint rule, sorted by `(end_offset, pattern_id)`.
pub fn naive_scan(
    patterns: &PatternSet,
    cfg: &ScanConfig,
    input: &[u8],
) -> Result<Vec<MatchRecord>, ConfigError> {
    cfg.validate()?;
    Ok(scan_ends(patterns, cfg, input, 1, input.len()))
}

fn scan_ends(
    patterns: &PatternSet,
    cfg: &ScanConfig,
    input: &[u8],
    first_end: usize,
    last_end: usize,
) -> Vec<MatchRecord> {
    let mut out = Vec::new();
    for end in first_end..=last_end {
        for (id, k) in patterns.iter().enumerate() {
            if let Some(r) = emit_candidate(cfg, id, k, input, end) {
                out.push(r);
            }
        }
    }
    sort_records(&mut out);
    out
}

/// [`naive_scan`] split into `chunks` disjoint ranges of end offsets.
pub fn naive_scan_chunked(
    patterns: &PatternSet,
    cfg: &ScanConfig,
    input: &[u8],
    chunks: usize,
) -> Result<Vec<MatchRecord>, ConfigError> {
    cfg.validate()?;
    let bounds = chunk_bounds(input.len(), chunks);
    let run = |&(a, b): &(usize, usize)| scan_ends(patterns, cfg, input, a + 1, b);
    #[cfg(feature = "parallel")]
    let parts: Vec<Vec<MatchRecord>> = {
        use rayon::prelude::*;
        bounds.par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<Vec<MatchRecord>> = bounds.iter().map(run).collect();
    Ok(parts.concat())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::similarity::{MetricKind, SimilarityMetric};
    use proptest::prelude::*;

    fn set(p: &[&str]) -> PatternSet {
        PatternSet::new(p.iter().map(|s| s.as_bytes().to_vec())).unwrap()
    }

    #[test]
    fn fknd_and_exact_hits() {
        let cfg = ScanConfig::default();
        let records = naive_scan(&set(&["FIND"]), &cfg, b"FKNDxFIND").unwrap();
        let keys: Vec<_> = records
            .iter()
            .map(|r| (r.end_offset, r.score, r.exact))
            .collect();
        assert_eq!(keys, vec![(4, 0.75, false), (9, 1.0, true)]);
        assert!(naive_scan(&set(&["FIND"]), &cfg, b"").unwrap().is_empty());
        assert!(naive_scan(&set(&["FIND"]), &cfg, b"FIN")
            .unwrap()
            .is_empty());
    }

    #[test]
    fn strict_configuration_finds_substrings() {
        let patterns = set(&["he", "she", "his", "hers"]);
        let input = b"ushers";
        for kind in MetricKind::ALL {
            let records = naive_scan(
                &patterns,
                &ScanConfig::exact(SimilarityMetric::new(kind)),
                input,
            )
            .unwrap();
            let keys: Vec<_> = records.iter().map(|r| r.key()).collect();
            assert_eq!(keys, vec![(4, 0), (4, 1), (6, 3)], "{kind}");
        }
    }

    proptest! {
        #[test]
        fn chunked_equals_serial(
            input in prop::collection::vec(b'a'..b'd', 0..200),
            chunks in 1usize..10,
            t in 0.4f64..=1.0,
        ) {
            let patterns = set(&["abc", "ca", "bbbb", "d"]);
            let cfg = ScanConfig::new(SimilarityMetric::levenshtein()).with_threshold(t).with_disjoint(0.5);
            prop_assert_eq!(
                naive_scan_chunked(&patterns, &cfg, &input, chunks).unwrap(),
                naive_scan(&patterns, &cfg, &input).unwrap()
            );
        }
    }
}
