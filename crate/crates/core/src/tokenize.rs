//! Canonical text form stored in ledger records and scanned by the matcher.
//!
//! ASCII letters are lowercased, every maximal run of bytes that are not ASCII
//! alphanumerics collapses into one space, and the ends are trimmed.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedText {
    pub original: Vec<u8>,
    pub tokens: Vec<Vec<u8>>,
    pub canonical: Vec<u8>,
}

pub fn tokenize(text: &[u8]) -> TokenizedText {
    let tokens: Vec<Vec<u8>> = text
        .split(|b| !b.is_ascii_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_ascii_lowercase())
        .collect();
    let canonical = tokens.join(&b' ');
    TokenizedText {
        original: text.to_vec(),
        tokens,
        canonical,
    }
}

/// Shorthand for `tokenize(text).canonical`.
pub fn canonicalize(text: &[u8]) -> Vec<u8> {
    tokenize(text).canonical
}
