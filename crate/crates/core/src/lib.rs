//! Approximate multi-pattern matching over an Aho-Corasick trie extended with
//! sliding-window lookahead, plus a hash-chained content ledger whose minting
//! step is gated by the matcher.

pub mod automaton;
pub mod baseline;
pub mod bench;
pub mod datagen;
pub mod ledger;
pub mod matcher;
pub mod similarity;
pub mod tokenize;

pub use automaton::{build_trie, Automaton, AutomatonError, PatternId, PatternSet, StateId};
pub use baseline::naive_scan;
pub use matcher::{
    scan_chunked, ConfigError, MatchRecord, ScanConfig, ScanOutput, ScanStats, Scanner,
};
pub use similarity::{Alphabet, EditCosts, MetricKind, SimilarityError, SimilarityMetric};
pub use tokenize::{canonicalize, tokenize, TokenizedText};

/// Whether chunked scans run on the rayon pool or sequentially.
pub const PARALLEL: bool = cfg!(feature = "parallel");
