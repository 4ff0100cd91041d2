//! Hash-chained ledger of text NFTs. Minting is refused when the candidate
//! text approximately contains, or is contained in, an already minted text.
//!
//! # Block hash
//!
//! A block hash is SHA-256 over the concatenation of
//!
//! * `index` and `timestamp` as 8-byte big-endian integers,
//! * `prev_hash` as its 32 raw bytes,
//! * the NFT count as an 8-byte big-endian integer, then per NFT: `nft_id`
//!   (8-byte big-endian), `owner`, `original_text` and `tokenized_text` (each
//!   an 8-byte big-endian length followed by the bytes) and the 32 raw bytes
//!   of `content_hash`.
//!
//! The genesis block links to 32 zero bytes.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};
use thiserror::Error;

use crate::automaton::{Automaton, PatternSet};
use crate::baseline::naive_scan;
use crate::matcher::{MatchRecord, ScanConfig, Scanner};
use crate::tokenize::canonicalize;

pub type Digest = [u8; 32];

pub const ZERO_DIGEST: Digest = [0; 32];

pub fn sha256(bytes: &[u8]) -> Digest {
    Sha256::digest(bytes).into()
}

/// Lowercase hex SHA-256 of the exact bytes.
pub fn hash_text(text: &[u8]) -> String {
    hex::encode(sha256(text))
}

#[derive(Debug, Error)]
pub enum LedgerError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Corrupt { line: usize, message: String },
    #[error("text of nft {nft_id} is not valid UTF-8")]
    NotUtf8 { nft_id: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NftRecord {
    pub nft_id: u64,
    pub owner: Vec<u8>,
    pub original_text: Vec<u8>,
    pub tokenized_text: Vec<u8>,
    pub content_hash: Digest,
}

impl NftRecord {
    pub fn new(nft_id: u64, owner: &[u8], text: &[u8]) -> Self {
        NftRecord {
            nft_id,
            owner: owner.to_vec(),
            original_text: text.to_vec(),
            tokenized_text: canonicalize(text),
            content_hash: sha256(text),
        }
    }

    fn is_consistent(&self) -> bool {
        self.content_hash == sha256(&self.original_text)
            && self.tokenized_text == canonicalize(&self.original_text)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub index: u64,
    pub timestamp: u64,
    pub prev_hash: Digest,
    pub nfts: Vec<NftRecord>,
    pub hash: Digest,
}

impl Block {
    pub fn new(index: u64, timestamp: u64, prev_hash: Digest, nfts: Vec<NftRecord>) -> Self {
        let mut block = Block {
            index,
            timestamp,
            prev_hash,
            nfts,
            hash: ZERO_DIGEST,
        };
        block.hash = block.compute_hash();
        block
    }

    /// Canonical byte serialization hashed into `hash`.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        fn bytes(out: &mut Vec<u8>, b: &[u8]) {
            out.extend_from_slice(&(b.len() as u64).to_be_bytes());
            out.extend_from_slice(b);
        }
        let mut out = Vec::with_capacity(
            64 + self
                .nfts
                .iter()
                .map(|n| 96 + n.original_text.len() * 2)
                .sum::<usize>(),
        );
        out.extend_from_slice(&self.index.to_be_bytes());
        out.extend_from_slice(&self.timestamp.to_be_bytes());
        out.extend_from_slice(&self.prev_hash);
        out.extend_from_slice(&(self.nfts.len() as u64).to_be_bytes());
        for n in &self.nfts {
            out.extend_from_slice(&n.nft_id.to_be_bytes());
            bytes(&mut out, &n.owner);
            bytes(&mut out, &n.original_text);
            bytes(&mut out, &n.tokenized_text);
            out.extend_from_slice(&n.content_hash);
        }
        out
    }

    pub fn compute_hash(&self) -> Digest {
        sha256(&self.canonical_bytes())
    }
}

/// How candidates are compared with minted texts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MintPolicy {
    /// The window is always the longest pattern; `scan.window` is ignored.
    pub scan: ScanConfig,
    /// Texts longer than this are split into overlapping shingles.
    pub shingle_len: usize,
}

impl Default for MintPolicy {
    fn default() -> Self {
        MintPolicy {
            scan: ScanConfig::default(),
            shingle_len: 512,
        }
    }
}

/// Splits a canonical text into patterns of at most `cap` symbols, advancing
/// by `cap / 2`; the last shingle always ends at the end of the text.
pub fn shingles(text: &[u8], cap: usize) -> Vec<&[u8]> {
    let cap = cap.max(1);
    if text.len() <= cap {
        return vec![text];
    }
    let stride = (cap / 2).max(1);
    let mut out: Vec<&[u8]> = (0..=text.len() - cap)
        .step_by(stride)
        .map(|s| &text[s..s + cap])
        .collect();
    if !(text.len() - cap).is_multiple_of(stride) {
        out.push(&text[text.len() - cap..]);
    }
    out
}

/// Which scanner decides plagiarism.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    Matcher,
    Baseline,
}

/// A minted text that matched the candidate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Offense {
    pub nft_id: u64,
    pub score: f64,
}

fn scan_with(
    engine: Engine,
    patterns: &PatternSet,
    cfg: &ScanConfig,
    input: &[u8],
) -> Vec<MatchRecord> {
    let cfg = ScanConfig {
        window: None,
        ..*cfg
    };
    match engine {
        Engine::Matcher => {
            let aut =
                Automaton::build(patterns, patterns.max_len()).expect("shingles are non-empty");
            Scanner::new(&aut, cfg)
                .expect("policy validated")
                .scan(input)
        }
        Engine::Baseline => naive_scan(patterns, &cfg, input).expect("policy validated"),
    }
}

fn distinct_patterns<'a>(
    texts: impl Iterator<Item = (u64, &'a [u8])>,
    cap: usize,
) -> (PatternSet, Vec<Vec<u64>>) {
    let mut owners: BTreeMap<&[u8], Vec<u64>> = BTreeMap::new();
    for (id, text) in texts {
        for s in shingles(text, cap) {
            let ids = owners.entry(s).or_default();
            if ids.last() != Some(&id) {
                ids.push(id);
            }
        }
    }
    let ids = owners.values().cloned().collect();
    (
        PatternSet::new(owners.into_keys().map(<[u8]>::to_vec))
            .expect("distinct non-empty shingles"),
        ids,
    )
}

/// Best-scoring minted text that contains an approximate copy of a shingle of
/// `candidate`, or of which `candidate` contains an approximate copy. Ties go
/// to the lower id. Texts are compared in canonical form.
pub fn find_offense<'a>(
    policy: &MintPolicy,
    minted: impl Iterator<Item = (u64, &'a [u8])> + Clone,
    candidate: &[u8],
    engine: Engine,
) -> Option<Offense> {
    let mut best: Option<Offense> = None;
    let mut consider = |nft_id: u64, score: f64| {
        let better = match best {
            None => true,
            Some(b) => score > b.score || (score == b.score && nft_id < b.nft_id),
        };
        if better {
            best = Some(Offense { nft_id, score });
        }
    };

    let non_empty = minted.clone().filter(|(_, t)| !t.is_empty());
    if non_empty.clone().next().is_none() || candidate.is_empty() {
        return None;
    }
    let (corpus, owners) = distinct_patterns(non_empty.clone(), policy.shingle_len);
    for r in scan_with(engine, &corpus, &policy.scan, candidate) {
        for &id in &owners[r.pattern_id] {
            consider(id, r.score);
        }
    }

    let (own, _) = distinct_patterns(std::iter::once((0, candidate)), policy.shingle_len);
    for (id, text) in non_empty {
        if let Some(top) = scan_with(engine, &own, &policy.scan, text)
            .iter()
            .map(|r| r.score)
            .reduce(f64::max)
        {
            consider(id, top);
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RejectReason {
    EmptyContent,
    ExactDuplicate,
    Plagiarism,
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RejectReason::EmptyContent => "empty content",
            RejectReason::ExactDuplicate => "exact duplicate",
            RejectReason::Plagiarism => "plagiarism",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MintOutcome {
    Accepted(NftRecord),
    Rejected {
        reason: RejectReason,
        offense: Option<Offense>,
    },
}

impl MintOutcome {
    pub fn is_accepted(&self) -> bool {
        matches!(self, MintOutcome::Accepted(_))
    }
}

/// Outcome of [`Ledger::verify_chain`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainStatus {
    Ok,
    /// First block whose index, linkage, hash or NFT contents do not check out.
    FirstBad(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ledger {
    pub blocks: Vec<Block>,
    pub policy: MintPolicy,
}

impl Ledger {
    pub fn new(policy: MintPolicy) -> Self {
        Ledger {
            blocks: Vec::new(),
            policy,
        }
    }

    pub fn nfts(&self) -> impl Iterator<Item = &NftRecord> + Clone + '_ {
        self.blocks.iter().flat_map(|b| b.nfts.iter())
    }

    pub fn tip_hash(&self) -> Digest {
        self.blocks.last().map_or(ZERO_DIGEST, |b| b.hash)
    }

    /// Runs the gate with the given engine without touching the ledger.
    pub fn check(
        &self,
        text: &[u8],
        engine: Engine,
    ) -> Result<(), (RejectReason, Option<Offense>)> {
        let canonical = canonicalize(text);
        if canonical.is_empty() {
            return Err((RejectReason::EmptyContent, None));
        }
        let hash = sha256(text);
        if let Some(dup) = self.nfts().find(|n| n.content_hash == hash) {
            return Err((
                RejectReason::ExactDuplicate,
                Some(Offense {
                    nft_id: dup.nft_id,
                    score: 1.0,
                }),
            ));
        }
        let minted = self.nfts().map(|n| (n.nft_id, n.tokenized_text.as_slice()));
        match find_offense(&self.policy, minted, &canonical, engine) {
            Some(o) => Err((RejectReason::Plagiarism, Some(o))),
            None => Ok(()),
        }
    }

    /// Appends a block holding the new NFT unless the gate rejects the text.
    pub fn mint(&mut self, owner: &[u8], text: &[u8], timestamp: u64) -> MintOutcome {
        if let Err((reason, offense)) = self.check(text, Engine::Matcher) {
            log::info!("mint rejected: {reason}");
            return MintOutcome::Rejected { reason, offense };
        }
        let nft = NftRecord::new(self.nfts().count() as u64, owner, text);
        let block = Block::new(
            self.blocks.len() as u64,
            timestamp,
            self.tip_hash(),
            vec![nft.clone()],
        );
        self.blocks.push(block);
        MintOutcome::Accepted(nft)
    }

    pub fn verify_chain(&self) -> ChainStatus {
        let mut prev = ZERO_DIGEST;
        for (i, b) in self.blocks.iter().enumerate() {
            let sound = b.index == i as u64
                && b.prev_hash == prev
                && b.compute_hash() == b.hash
                && b.nfts.iter().all(NftRecord::is_consistent);
            if !sound {
                return ChainStatus::FirstBad(i);
            }
            prev = b.hash;
        }
        ChainStatus::Ok
    }

    /// One JSON object per block, hashes in lowercase hex.
    pub fn to_json_lines(&self) -> Result<String, LedgerError> {
        let mut out = String::new();
        for b in &self.blocks {
            let wire = WireBlock::try_from(b)?;
            out.push_str(&serde_json::to_string(&wire).expect("plain data serializes"));
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_json_lines(text: &str, policy: MintPolicy) -> Result<Self, LedgerError> {
        Self::read(BufReader::new(text.as_bytes()), policy)
    }

    fn read(reader: impl BufRead, policy: MintPolicy) -> Result<Self, LedgerError> {
        let mut blocks = Vec::new();
        for (n, line) in reader.lines().enumerate() {
            let corrupt = |message: String| LedgerError::Corrupt {
                line: n + 1,
                message,
            };
            let line = line.map_err(|e| corrupt(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let wire: WireBlock =
                serde_json::from_str(&line).map_err(|e| corrupt(e.to_string()))?;
            blocks.push(wire.into_block().map_err(corrupt)?);
        }
        Ok(Ledger { blocks, policy })
    }

    pub fn load(path: impl AsRef<Path>, policy: MintPolicy) -> Result<Self, LedgerError> {
        let path = path.as_ref();
        let file = fs::File::open(path).map_err(|source| LedgerError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::read(BufReader::new(file), policy)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), LedgerError> {
        let path = path.as_ref();
        let io = |source| LedgerError::Io {
            path: path.display().to_string(),
            source,
        };
        let text = self.to_json_lines()?;
        let mut file = fs::File::create(path).map_err(io)?;
        file.write_all(text.as_bytes()).map_err(io)
    }
}

#[derive(Serialize, Deserialize)]
struct WireNft {
    nft_id: u64,
    owner: String,
    original_text: String,
    tokenized_text: String,
    content_hash: String,
}

#[derive(Serialize, Deserialize)]
struct WireBlock {
    index: u64,
    timestamp: u64,
    prev_hash: String,
    nfts: Vec<WireNft>,
    hash: String,
}

impl TryFrom<&Block> for WireBlock {
    type Error = LedgerError;

    fn try_from(b: &Block) -> Result<Self, LedgerError> {
        let text = |bytes: &[u8], nft_id| {
            String::from_utf8(bytes.to_vec()).map_err(|_| LedgerError::NotUtf8 { nft_id })
        };
        let nfts = b
            .nfts
            .iter()
            .map(|n| {
                Ok(WireNft {
                    nft_id: n.nft_id,
                    owner: text(&n.owner, n.nft_id)?,
                    original_text: text(&n.original_text, n.nft_id)?,
                    tokenized_text: text(&n.tokenized_text, n.nft_id)?,
                    content_hash: hex::encode(n.content_hash),
                })
            })
            .collect::<Result<_, LedgerError>>()?;
        Ok(WireBlock {
            index: b.index,
            timestamp: b.timestamp,
            prev_hash: hex::encode(b.prev_hash),
            nfts,
            hash: hex::encode(b.hash),
        })
    }
}

fn parse_digest(s: &str) -> Result<Digest, String> {
    let mut d = ZERO_DIGEST;
    hex::decode_to_slice(s, &mut d).map_err(|e| format!("bad digest {s:?}: {e}"))?;
    Ok(d)
}

impl WireBlock {
    fn into_block(self) -> Result<Block, String> {
        let nfts = self
            .nfts
            .into_iter()
            .map(|n| {
                Ok(NftRecord {
                    nft_id: n.nft_id,
                    owner: n.owner.into_bytes(),
                    original_text: n.original_text.into_bytes(),
                    tokenized_text: n.tokenized_text.into_bytes(),
                    content_hash: parse_digest(&n.content_hash)?,
                })
            })
            .collect::<Result<_, String>>()?;
        Ok(Block {
            index: self.index,
            timestamp: self.timestamp,
            prev_hash: parse_digest(&self.prev_hash)?,
            nfts,
            hash: parse_digest(&self.hash)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ORIGINAL: &[u8] = b"The sky is beautiful";
    const ALTERED: &[u8] = b"The sky's beautiful";

    #[test]
    fn sample_text_digests() {
        assert_eq!(
            hash_text(ORIGINAL),
            "d5217a507abdf43516559facc8b9f51cecd463fe2f4542a53ea6de3363642a62"
        );
        assert_eq!(
            hash_text(ALTERED),
            "f452385958a7281aff97bcd2d52f9d43c29be3bcd24481f87d23e6a9b626a2a8"
        );
        assert_eq!(
            hash_text(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn canonical_bytes_layout() {
        let nft = NftRecord::new(7, b"al", b"Hi!");
        let block = Block::new(1, 2, [9; 32], vec![nft.clone()]);
        let mut expected = Vec::new();
        expected.extend_from_slice(&1u64.to_be_bytes());
        expected.extend_from_slice(&2u64.to_be_bytes());
        expected.extend_from_slice(&[9; 32]);
        expected.extend_from_slice(&1u64.to_be_bytes());
        expected.extend_from_slice(&7u64.to_be_bytes());
        expected.extend_from_slice(&[0, 0, 0, 0, 0, 0, 0, 2, b'a', b'l']);
        expected.extend_from_slice(&[0, 0, 0, 0, 0, 0, 0, 3, b'H', b'i', b'!']);
        expected.extend_from_slice(&[0, 0, 0, 0, 0, 0, 0, 2, b'h', b'i']);
        expected.extend_from_slice(&nft.content_hash);
        assert_eq!(block.canonical_bytes(), expected);
        assert_eq!(block.hash, sha256(&expected));
    }

    #[test]
    fn shingling() {
        assert_eq!(shingles(b"abc", 5), vec![b"abc".as_slice()]);
        assert_eq!(
            shingles(b"abcdefgh", 4),
            vec![b"abcd".as_slice(), b"cdef", b"efgh"]
        );
        assert_eq!(
            shingles(b"abcdefghi", 4),
            vec![b"abcd".as_slice(), b"cdef", b"efgh", b"fghi"]
        );
    }

    fn five_mints() -> Ledger {
        let mut ledger = Ledger::new(MintPolicy::default());
        for (i, text) in [
            "alpha beta gamma",
            "quantum entanglement basics",
            "rust ownership rules",
            "the cat sat on a mat",
            "ledger blocks chain",
        ]
        .iter()
        .enumerate()
        {
            assert!(
                ledger
                    .mint(b"owner", text.as_bytes(), 1_700_000_000 + i as u64)
                    .is_accepted(),
                "{text}"
            );
        }
        ledger
    }

    #[test]
    fn mint_and_verify() {
        let mut ledger = five_mints();
        assert_eq!(ledger.blocks.len(), 5);
        assert_eq!(ledger.blocks[0].prev_hash, ZERO_DIGEST);
        assert_eq!(ledger.verify_chain(), ChainStatus::Ok);

        ledger.blocks[2].nfts[0].original_text[0] ^= 1;
        assert_eq!(ledger.verify_chain(), ChainStatus::FirstBad(2));
    }

    #[test]
    fn forged_block_breaks_the_next_link() {
        let mut ledger = five_mints();
        let old = &ledger.blocks[2];
        let forged = Block::new(
            2,
            old.timestamp,
            old.prev_hash,
            vec![NftRecord::new(2, b"mallory", b"forged text")],
        );
        ledger.blocks[2] = forged;
        assert_eq!(ledger.verify_chain(), ChainStatus::FirstBad(3));
    }

    #[test]
    fn duplicates_and_empty_content() {
        let mut ledger = five_mints();
        let again = ledger.mint(b"x", b"rust ownership rules", 1);
        assert_eq!(
            again,
            MintOutcome::Rejected {
                reason: RejectReason::ExactDuplicate,
                offense: Some(Offense {
                    nft_id: 2,
                    score: 1.0
                })
            }
        );
        let empty = ledger.mint(b"x", b" ?! ", 1);
        assert_eq!(
            empty,
            MintOutcome::Rejected {
                reason: RejectReason::EmptyContent,
                offense: None
            }
        );
        assert_eq!(ledger.blocks.len(), 5);
    }

    #[test]
    fn containment_is_caught_in_both_directions() {
        let mut ledger = Ledger::new(MintPolicy::default());
        assert!(ledger
            .mint(b"a", b"the quick brown fox jumps over the lazy dog", 0)
            .is_accepted());
        // Candidate inside a minted text, one substitution.
        match ledger.mint(b"b", b"quick brawn fox", 1) {
            MintOutcome::Rejected {
                reason: RejectReason::Plagiarism,
                offense: Some(o),
            } => {
                assert_eq!(o.nft_id, 0);
                assert!((o.score - 14.0 / 15.0).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
        // Minted text inside the candidate.
        let mut ledger = Ledger::new(MintPolicy::default());
        assert!(ledger.mint(b"a", b"lazy dog", 0).is_accepted());
        assert!(!ledger
            .mint(b"b", b"the quick brown fox jumps over the lazy dog", 1)
            .is_accepted());
    }

    #[test]
    fn sample_texts_follow_the_baseline_oracle() {
        let mut ledger = Ledger::new(MintPolicy::default());
        assert!(ledger.mint(b"a", ORIGINAL, 0).is_accepted());
        let oracle = ledger.check(ALTERED, Engine::Baseline).is_ok();
        assert_eq!(ledger.check(ALTERED, Engine::Matcher).is_ok(), oracle);
        // Aligned Hamming comparison of the canonical forms never reaches 0.75:
        // "the sky s beautiful" is one symbol shorter and shifts everything
        // after "the sky ".
        assert!(oracle);
        assert!(ledger
            .mint(b"b", b"quantum entanglement basics", 1)
            .is_accepted());
    }

    #[test]
    fn json_lines_round_trip() {
        let ledger = five_mints();
        let text = ledger.to_json_lines().unwrap();
        assert_eq!(text.lines().count(), 5);
        let back = Ledger::from_json_lines(&text, MintPolicy::default()).unwrap();
        assert_eq!(back, ledger);
        assert!(text.contains(&hash_text(b"alpha beta gamma")));

        let broken = text.replacen('{', "[", 1);
        assert!(matches!(
            Ledger::from_json_lines(&broken, MintPolicy::default()),
            Err(LedgerError::Corrupt { line: 1, .. })
        ));

        let mut bad = Ledger::new(MintPolicy::default());
        bad.mint(b"o", &[b'a', 0xff, b'b'], 0);
        assert!(matches!(
            bad.to_json_lines(),
            Err(LedgerError::NotUtf8 { .. })
        ));
    }
}
