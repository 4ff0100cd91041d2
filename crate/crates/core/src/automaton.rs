//! Aho-Corasick trie with failure links, extended with per-node window data.
//!
//! Construction runs in three stages:
//!
//! 1. [`build_trie`] lays out one root path per pattern.
//! 2. [`Trie::compute_failures`] assigns failure links breadth-first and
//!    merges output sets along the failure chain.
//! 3. [`Automaton::prepare_window`] fixes the sliding window length `w` and
//!    derives, for every node, the scoring candidates used by the matcher.
//!    [`Automaton::compute_window_suffixes`] additionally materializes the
//!    complete list of length-`w` continuations of every node.
//!
//! A window suffix walk from a node follows every goto edge and, at a node
//! without goto edges, jumps through the failure link without consuming a
//! symbol. Every edge-less node is the end of a pattern, so each suffix
//! completes the pattern it runs along before jumping. The scoring
//! candidates are exactly those suffixes cut at the end of that pattern (or
//! at any earlier pattern end on the way): `prefix(node) + suffix` shortened
//! to `min(|pattern|, depth + w)` symbols of a pattern below the node.

use std::collections::{BTreeSet, VecDeque};
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::matcher::MatchRecord;

pub type PatternId = usize;

#[derive(Debug, Error)]
pub enum AutomatonError {
    #[error("pattern #{index} is empty")]
    EmptyPattern { index: usize },
    #[error("pattern #{second} duplicates pattern #{first}: {pattern:?}")]
    DuplicatePattern {
        first: usize,
        second: usize,
        pattern: String,
    },
    #[error("window length must be positive")]
    ZeroWindow,
    #[error("window suffix lists exceed {limit} entries; use a shorter window or prepare_window")]
    WindowTooLarge { limit: usize },
    #[error("reading pattern file {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// An ordered, duplicate-free list of non-empty patterns.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PatternSet {
    patterns: Vec<Vec<u8>>,
    max_len: usize,
}

impl PatternSet {
    pub fn new<I, P>(patterns: I) -> Result<Self, AutomatonError>
    where
        I: IntoIterator<Item = P>,
        P: Into<Vec<u8>>,
    {
        let patterns: Vec<Vec<u8>> = patterns.into_iter().map(Into::into).collect();
        let mut seen = std::collections::HashMap::with_capacity(patterns.len());
        for (index, p) in patterns.iter().enumerate() {
            if p.is_empty() {
                return Err(AutomatonError::EmptyPattern { index });
            }
            if let Some(&first) = seen.get(p.as_slice()) {
                return Err(AutomatonError::DuplicatePattern {
                    first,
                    second: index,
                    pattern: String::from_utf8_lossy(p).into_owned(),
                });
            }
            seen.insert(p.as_slice(), index);
        }
        let max_len = patterns.iter().map(Vec::len).max().unwrap_or(0);
        Ok(PatternSet { patterns, max_len })
    }

    /// Parses the pattern file format: one pattern per line, blank lines and
    /// lines starting with `#` skipped.
    pub fn parse(text: &str) -> Result<Self, AutomatonError> {
        let lines = text
            .lines()
            .map(|l| l.strip_suffix('\r').unwrap_or(l))
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| l.as_bytes().to_vec());
        PatternSet::new(lines)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, AutomatonError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| AutomatonError::Io {
            path: path.display().to_string(),
            source,
        })?;
        PatternSet::parse(&text)
    }

    pub fn to_file_format(&self) -> String {
        let mut out = String::new();
        for p in &self.patterns {
            out.push_str(&String::from_utf8_lossy(p));
            out.push('\n');
        }
        out
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn total_len(&self) -> usize {
        self.patterns.iter().map(Vec::len).sum()
    }

    pub fn get(&self, id: PatternId) -> &[u8] {
        &self.patterns[id]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[u8]> + '_ {
        self.patterns.iter().map(Vec::as_slice)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateId(u32);

impl StateId {
    pub const ROOT: StateId = StateId(0);

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

const NO_STATE: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Edges {
    Dense(Box<[u32; 256]>),
    Sparse(Vec<(u8, StateId)>),
}

impl Edges {
    #[inline]
    fn get(&self, symbol: u8) -> Option<StateId> {
        match self {
            Edges::Dense(table) => {
                let s = table[symbol as usize];
                (s != NO_STATE).then_some(StateId(s))
            }
            Edges::Sparse(list) => {
                if list.len() <= 8 {
                    list.iter().find(|(c, _)| *c == symbol).map(|&(_, s)| s)
                } else {
                    list.binary_search_by_key(&symbol, |&(c, _)| c)
                        .ok()
                        .map(|i| list[i].1)
                }
            }
        }
    }

    fn insert(&mut self, symbol: u8, to: StateId) {
        match self {
            Edges::Dense(table) => table[symbol as usize] = to.0,
            Edges::Sparse(list) => match list.binary_search_by_key(&symbol, |&(c, _)| c) {
                Ok(i) => list[i].1 = to,
                Err(i) => list.insert(i, (symbol, to)),
            },
        }
    }

    fn iter(&self) -> Box<dyn Iterator<Item = (u8, StateId)> + '_> {
        match self {
            Edges::Dense(table) => Box::new(
                table
                    .iter()
                    .enumerate()
                    .filter(|(_, &s)| s != NO_STATE)
                    .map(|(c, &s)| (c as u8, StateId(s))),
            ),
            Edges::Sparse(list) => Box::new(list.iter().copied()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    depth: u32,
    edges: Edges,
    edge_count: u32,
    fail: StateId,
    /// Pattern spelled exactly by the root path, if any.
    terminal: Option<PatternId>,
    /// Patterns ending here, including those reached along the failure chain.
    outputs: Vec<PatternId>,
    /// A pattern whose path passes through this node; gives the prefix.
    via: PatternId,
    groups: (u32, u32),
}

impl Node {
    fn new(depth: u32, via: PatternId, dense: bool) -> Self {
        Node {
            depth,
            edges: if dense {
                Edges::Dense(Box::new([NO_STATE; 256]))
            } else {
                Edges::Sparse(Vec::new())
            },
            edge_count: 0,
            fail: StateId::ROOT,
            terminal: None,
            outputs: Vec::new(),
            via,
            groups: (0, 0),
        }
    }

    pub fn depth(&self) -> usize {
        self.depth as usize
    }

    pub fn fail(&self) -> StateId {
        self.fail
    }

    pub fn terminal(&self) -> Option<PatternId> {
        self.terminal
    }

    pub fn outputs(&self) -> &[PatternId] {
        &self.outputs
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count as usize
    }
}

/// Trie over a [`PatternSet`]; failure links are not yet assigned.
#[derive(Debug, Clone)]
pub struct Trie {
    patterns: PatternSet,
    nodes: Vec<Node>,
}

pub fn build_trie(patterns: &PatternSet) -> Trie {
    let mut nodes = vec![Node::new(0, 0, true)];
    for (id, pattern) in patterns.iter().enumerate() {
        let mut state = StateId::ROOT;
        for (depth, &symbol) in pattern.iter().enumerate() {
            state = match nodes[state.index()].edges.get(symbol) {
                Some(next) => next,
                None => {
                    let next = StateId(nodes.len() as u32);
                    nodes.push(Node::new(depth as u32 + 1, id, false));
                    let parent = &mut nodes[state.index()];
                    parent.edges.insert(symbol, next);
                    parent.edge_count += 1;
                    next
                }
            };
        }
        nodes[state.index()].terminal = Some(id);
    }
    Trie {
        patterns: patterns.clone(),
        nodes,
    }
}

impl Trie {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn output_node_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.terminal.is_some()).count()
    }

    pub fn compute_failures(mut self) -> Automaton {
        let mut queue = VecDeque::new();
        let root_children: Vec<StateId> = self.nodes[0].edges.iter().map(|(_, s)| s).collect();
        for child in root_children {
            self.nodes[child.index()].fail = StateId::ROOT;
            queue.push_back(child);
        }
        while let Some(state) = queue.pop_front() {
            let children: Vec<(u8, StateId)> = self.nodes[state.index()].edges.iter().collect();
            for (symbol, child) in children {
                let mut f = self.nodes[state.index()].fail;
                let target = loop {
                    if let Some(next) = self.nodes[f.index()].edges.get(symbol) {
                        break next;
                    }
                    if f == StateId::ROOT {
                        break StateId::ROOT;
                    }
                    f = self.nodes[f.index()].fail;
                };
                self.nodes[child.index()].fail = target;
                queue.push_back(child);
            }
            // Parents are dequeued before children, so the failure target's
            // outputs are final by now.
            let fail = self.nodes[state.index()].fail;
            let mut outputs: Vec<PatternId> =
                self.nodes[state.index()].terminal.into_iter().collect();
            if state != StateId::ROOT {
                outputs.extend_from_slice(&self.nodes[fail.index()].outputs);
            }
            outputs.sort_unstable();
            outputs.dedup();
            self.nodes[state.index()].outputs = outputs;
        }

        let mut flat = Vec::with_capacity(self.patterns.total_len());
        let mut offsets = Vec::with_capacity(self.patterns.len());
        for p in self.patterns.iter() {
            offsets.push(flat.len() as u32);
            flat.extend_from_slice(p);
        }
        Automaton {
            patterns: self.patterns,
            nodes: self.nodes,
            flat,
            offsets,
            window: None,
            candidates: Vec::new(),
            groups: Vec::new(),
            window_suffixes: None,
        }
    }
}

/// One scoring candidate: `pattern[..len]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Candidate {
    pub pattern: u32,
    pub len: u32,
    /// Offset of the pattern in the automaton's flat byte store.
    pub(crate) offset: u32,
    /// `len` equals the full pattern length.
    pub complete: bool,
}

/// Candidates of one node sharing the symbol that follows the node's prefix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CandidateGroup {
    pub symbol: u8,
    pub child: StateId,
    pub(crate) start: u32,
    pub(crate) end: u32,
}

/// Failure-linked automaton, optionally prepared for a sliding window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Automaton {
    patterns: PatternSet,
    nodes: Vec<Node>,
    flat: Vec<u8>,
    offsets: Vec<u32>,
    window: Option<usize>,
    candidates: Vec<Candidate>,
    groups: Vec<CandidateGroup>,
    window_suffixes: Option<Vec<Vec<Vec<u8>>>>,
}

/// Default cap on materialized window suffixes across all nodes.
pub const DEFAULT_SUFFIX_LIMIT: usize = 1 << 22;

impl Automaton {
    /// Trie, failure links and window candidates in one go.
    pub fn build(patterns: &PatternSet, window: usize) -> Result<Automaton, AutomatonError> {
        build_trie(patterns)
            .compute_failures()
            .prepare_window(window)
    }

    pub fn patterns(&self) -> &PatternSet {
        &self.patterns
    }

    pub fn pattern(&self, id: PatternId) -> &[u8] {
        self.patterns.get(id)
    }

    pub fn window(&self) -> Option<usize> {
        self.window
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node(&self, state: StateId) -> &Node {
        &self.nodes[state.index()]
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> {
        (0..self.nodes.len() as u32).map(StateId)
    }

    /// Final states `F`: nodes where some pattern ends.
    pub fn output_states(&self) -> impl Iterator<Item = StateId> + '_ {
        self.states()
            .filter(|s| self.nodes[s.index()].terminal.is_some())
    }

    #[inline]
    pub fn goto(&self, state: StateId, symbol: u8) -> Option<StateId> {
        self.nodes[state.index()].edges.get(symbol)
    }

    pub fn edges(&self, state: StateId) -> impl Iterator<Item = (u8, StateId)> + '_ {
        self.nodes[state.index()].edges.iter()
    }

    pub fn prefix(&self, state: StateId) -> &[u8] {
        let n = &self.nodes[state.index()];
        if state == StateId::ROOT {
            return &[];
        }
        &self.patterns.get(n.via)[..n.depth()]
    }

    /// State whose root path spells `prefix`, if it exists.
    pub fn find_state(&self, prefix: &[u8]) -> Option<StateId> {
        prefix
            .iter()
            .try_fold(StateId::ROOT, |s, &c| self.goto(s, c))
    }

    /// Classic Aho-Corasick transition: follow failure links until a goto edge
    /// for `symbol` exists.
    #[inline]
    pub fn next_state(&self, mut state: StateId, symbol: u8) -> StateId {
        loop {
            if let Some(next) = self.goto(state, symbol) {
                return next;
            }
            if state == StateId::ROOT {
                return StateId::ROOT;
            }
            state = self.nodes[state.index()].fail;
        }
    }

    /// Every exact occurrence of every pattern, each with score 1.
    pub fn exact_scan(&self, input: &[u8]) -> Vec<MatchRecord> {
        let mut out = Vec::new();
        let mut state = StateId::ROOT;
        for (i, &c) in input.iter().enumerate() {
            state = self.next_state(state, c);
            for &pid in &self.nodes[state.index()].outputs {
                out.push(MatchRecord {
                    pattern_id: pid,
                    end_offset: i + 1,
                    score: 1.0,
                    exact: true,
                });
            }
        }
        out
    }

    /// Fixes the window length and derives the per-node scoring candidates.
    pub fn prepare_window(mut self, window: usize) -> Result<Automaton, AutomatonError> {
        if window == 0 {
            return Err(AutomatonError::ZeroWindow);
        }
        if window < self.patterns.max_len() {
            log::warn!(
                "window {} is shorter than the longest pattern ({}); window scores may disagree with full-pattern scores",
                window,
                self.patterns.max_len()
            );
        }
        let mut per_node: Vec<Vec<Candidate>> = vec![Vec::new(); self.nodes.len()];
        for (id, pattern) in self.patterns.iter().enumerate() {
            let mut state = StateId::ROOT;
            for depth in 0..=pattern.len() {
                let len = pattern.len().min(depth + window);
                per_node[state.index()].push(Candidate {
                    pattern: id as u32,
                    len: len as u32,
                    offset: self.offsets[id],
                    complete: len == pattern.len(),
                });
                if depth < pattern.len() {
                    state = self
                        .goto(state, pattern[depth])
                        .expect("pattern path exists");
                }
            }
        }

        self.candidates.clear();
        self.groups.clear();
        for (index, mut list) in per_node.into_iter().enumerate() {
            let flat = &self.flat;
            let bytes = |c: &Candidate| &flat[c.offset as usize..(c.offset + c.len) as usize];
            list.sort_by(|a, b| {
                bytes(a)
                    .cmp(bytes(b))
                    .then(b.complete.cmp(&a.complete))
                    .then(a.pattern.cmp(&b.pattern))
            });
            list.dedup_by(|b, a| bytes(a) == bytes(b) && a.complete == b.complete);

            let depth = self.nodes[index].depth();
            let group_start = self.groups.len() as u32;
            for c in list {
                if c.len as usize == depth {
                    // The node's own pattern: nothing left to advance into.
                    continue;
                }
                let symbol = self.flat[c.offset as usize + depth];
                let at = self.candidates.len() as u32;
                self.candidates.push(c);
                let extends_last = self.groups.len() as u32 > group_start
                    && self.groups.last().is_some_and(|g| g.symbol == symbol);
                if extends_last {
                    self.groups.last_mut().expect("non-empty").end = at + 1;
                } else {
                    let child = self.nodes[index]
                        .edges
                        .get(symbol)
                        .expect("candidate follows a trie edge");
                    self.groups.push(CandidateGroup {
                        symbol,
                        child,
                        start: at,
                        end: at + 1,
                    });
                }
            }
            self.nodes[index].groups = (group_start, self.groups.len() as u32);
        }
        self.window = Some(window);
        self.window_suffixes = None;
        Ok(self)
    }

    /// Scoring candidates of `state`, grouped by the symbol after its prefix.
    pub fn candidate_groups(&self, state: StateId) -> &[CandidateGroup] {
        let (a, b) = self.nodes[state.index()].groups;
        &self.groups[a as usize..b as usize]
    }

    pub fn group_candidates(&self, group: &CandidateGroup) -> &[Candidate] {
        &self.candidates[group.start as usize..group.end as usize]
    }

    #[inline]
    pub fn candidate_bytes(&self, c: &Candidate) -> &[u8] {
        &self.flat[c.offset as usize..(c.offset + c.len) as usize]
    }

    /// All scoring candidates of `state` as byte strings, sorted, including
    /// the node's own pattern when it ends here.
    pub fn candidates(&self, state: StateId) -> Vec<Vec<u8>> {
        let mut out: Vec<Vec<u8>> = self
            .candidate_groups(state)
            .iter()
            .flat_map(|g| self.group_candidates(g))
            .map(|c| self.candidate_bytes(c).to_vec())
            .collect();
        if let Some(t) = self.nodes[state.index()].terminal {
            out.push(self.pattern(t).to_vec());
        }
        out.sort();
        out.dedup();
        out
    }

    /// Enumerates the window suffixes of one node without storing them.
    pub fn window_suffixes_of(
        &self,
        state: StateId,
        window: usize,
    ) -> Result<Vec<Vec<u8>>, AutomatonError> {
        if window == 0 {
            return Err(AutomatonError::ZeroWindow);
        }
        let mut out = BTreeSet::new();
        let mut buf = Vec::with_capacity(window);
        self.walk_suffixes(state, window, &mut buf, &mut out, usize::MAX)?;
        Ok(out.into_iter().collect())
    }

    fn walk_suffixes(
        &self,
        state: StateId,
        window: usize,
        buf: &mut Vec<u8>,
        out: &mut BTreeSet<Vec<u8>>,
        limit: usize,
    ) -> Result<(), AutomatonError> {
        if buf.len() == window {
            out.insert(buf.clone());
            return if out.len() > limit {
                Err(AutomatonError::WindowTooLarge { limit })
            } else {
                Ok(())
            };
        }
        let node = &self.nodes[state.index()];
        if node.edge_count > 0 {
            for (symbol, child) in node.edges.iter() {
                buf.push(symbol);
                self.walk_suffixes(child, window, buf, out, limit)?;
                buf.pop();
            }
            Ok(())
        } else if state == StateId::ROOT {
            // Only an empty pattern set leaves the root without edges.
            out.insert(buf.clone());
            Ok(())
        } else {
            self.walk_suffixes(node.fail, window, buf, out, limit)
        }
    }

    /// Materializes the full window suffix list of every node (and prepares
    /// the matching scoring candidates). Fails once more than `limit`
    /// suffixes in total would be stored.
    pub fn compute_window_suffixes(
        self,
        window: usize,
        limit: usize,
    ) -> Result<Automaton, AutomatonError> {
        let mut aut = self.prepare_window(window)?;
        let mut lists = Vec::with_capacity(aut.nodes.len());
        let mut total = 0usize;
        for state in aut.states() {
            let mut set = BTreeSet::new();
            let mut buf = Vec::with_capacity(window);
            aut.walk_suffixes(state, window, &mut buf, &mut set, limit - total)?;
            total += set.len();
            lists.push(set.into_iter().collect());
        }
        aut.window_suffixes = Some(lists);
        Ok(aut)
    }

    /// Materialized window suffixes, if [`compute_window_suffixes`] ran.
    ///
    /// [`compute_window_suffixes`]: Automaton::compute_window_suffixes
    pub fn window_suffixes(&self, state: StateId) -> Option<&[Vec<u8>]> {
        self.window_suffixes
            .as_ref()
            .map(|lists| lists[state.index()].as_slice())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn word_patterns() -> PatternSet {
        PatternSet::new(
            ["AND", "FIND", "FINE", "FAIL", "FAIR", "INTO"].map(|s| s.as_bytes().to_vec()),
        )
        .unwrap()
    }

    #[test]
    fn trie_sizes() {
        let trie = build_trie(&word_patterns());
        assert_eq!(trie.node_count() - 1, 16);
        assert_eq!(trie.output_node_count(), 6);

        let single = build_trie(&PatternSet::new([b"A".to_vec()]).unwrap());
        assert_eq!(single.node_count() - 1, 1);
        assert_eq!(single.output_node_count(), 1);

        let shared = build_trie(&PatternSet::new([b"AB".to_vec(), b"AC".to_vec()]).unwrap());
        assert_eq!(shared.node_count() - 1, 3);
    }

    #[test]
    fn duplicate_and_empty_patterns_are_rejected() {
        let err = PatternSet::new([b"AB".to_vec(), b"C".to_vec(), b"AB".to_vec()]).unwrap_err();
        assert!(matches!(
            err,
            AutomatonError::DuplicatePattern {
                first: 0,
                second: 2,
                ..
            }
        ));
        assert!(err.to_string().contains("AB"));
        assert!(matches!(
            PatternSet::new([Vec::new()]),
            Err(AutomatonError::EmptyPattern { index: 0 })
        ));
    }

    #[test]
    fn pattern_file_format() {
        let set = PatternSet::parse("# keywords\nAND\r\n\nFIND\n#FIND\n  x \n").unwrap();
        let got: Vec<&[u8]> = set.iter().collect();
        assert_eq!(got, vec![&b"AND"[..], b"FIND", b"  x "]);
        assert_eq!(set.max_len(), 4);
        assert_eq!(PatternSet::parse(&set.to_file_format()).unwrap(), set);
    }

    #[test]
    fn failure_links_on_word_patterns() {
        let aut = build_trie(&word_patterns()).compute_failures();
        let s = |p: &str| aut.find_state(p.as_bytes()).unwrap();
        assert_eq!(aut.node(s("FIN")).fail(), s("IN"));
        assert_eq!(aut.node(s("FAI")).fail(), s("I"));
        for (_, child) in aut.edges(StateId::ROOT) {
            assert_eq!(aut.node(child).fail(), StateId::ROOT);
        }
        assert_eq!(aut.node(StateId::ROOT).fail(), StateId::ROOT);
    }

    // Longest proper suffix of the prefix that is itself a trie prefix.
    fn brute_force_fail(aut: &Automaton, state: StateId) -> StateId {
        let prefix = aut.prefix(state);
        (1..=prefix.len())
            .filter_map(|start| aut.find_state(&prefix[start..]))
            .next()
            .unwrap_or(StateId::ROOT)
    }

    #[test]
    fn failure_links_match_brute_force() {
        let sets = [
            word_patterns(),
            PatternSet::new(
                ["he", "she", "his", "hers", "ushers", "s"].map(|s| s.as_bytes().to_vec()),
            )
            .unwrap(),
            PatternSet::new(["aaaa", "aab", "ab", "b", "baa"].map(|s| s.as_bytes().to_vec()))
                .unwrap(),
        ];
        for set in sets {
            let aut = build_trie(&set).compute_failures();
            for state in aut.states().skip(1) {
                assert_eq!(
                    aut.node(state).fail(),
                    brute_force_fail(&aut, state),
                    "{:?}",
                    aut.prefix(state)
                );
                assert!(aut.node(aut.node(state).fail()).depth() < aut.node(state).depth());
            }
        }
    }

    #[test]
    fn window_suffixes_of_node_f() {
        let aut = build_trie(&word_patterns()).compute_failures();
        let f = aut.find_state(b"F").unwrap();
        let got = aut.window_suffixes_of(f, 4).unwrap();
        for expected in [
            "INDA", "INDF", "INDI", "INEA", "INEF", "INEI", "AILA", "AILF", "AILI",
        ] {
            assert!(
                got.contains(&expected.as_bytes().to_vec()),
                "missing {expected}"
            );
        }
        assert!(got.iter().all(|s| s.len() == 4));
    }

    #[test]
    fn single_chain_window_suffixes() {
        let set = PatternSet::new([b"ABCD".to_vec()]).unwrap();
        let aut = build_trie(&set)
            .compute_failures()
            .compute_window_suffixes(2, DEFAULT_SUFFIX_LIMIT)
            .unwrap();
        assert_eq!(
            aut.window_suffixes(StateId::ROOT).unwrap(),
            &[b"AB".to_vec()]
        );
        let leaf = aut.find_state(b"ABCD").unwrap();
        assert_eq!(aut.window_suffixes(leaf).unwrap(), &[b"AB".to_vec()]);
        let c = aut.find_state(b"ABC").unwrap();
        assert_eq!(aut.window_suffixes(c).unwrap(), &[b"DA".to_vec()]);
        assert!(matches!(
            aut.clone().prepare_window(0),
            Err(AutomatonError::ZeroWindow)
        ));
    }

    #[test]
    fn suffix_limit_is_enforced() {
        let aut = build_trie(&word_patterns()).compute_failures();
        assert!(matches!(
            aut.compute_window_suffixes(12, 100),
            Err(AutomatonError::WindowTooLarge { limit: 100 })
        ));
    }

    #[test]
    fn candidates_are_patterns_below_the_node_clipped_to_the_window() {
        let aut = Automaton::build(&word_patterns(), 4).unwrap();
        let s = |p: &str| aut.find_state(p.as_bytes()).unwrap();
        let as_strings = |v: Vec<Vec<u8>>| {
            v.into_iter()
                .map(|b| String::from_utf8(b).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(
            as_strings(aut.candidates(s("F"))),
            ["FAIL", "FAIR", "FIND", "FINE"]
        );
        assert_eq!(as_strings(aut.candidates(s("AND"))), ["AND"]);
        assert_eq!(
            as_strings(aut.candidates(StateId::ROOT)),
            ["AND", "FAIL", "FAIR", "FIND", "FINE", "INTO"]
        );

        let groups = aut.candidate_groups(s("F"));
        let symbols: Vec<u8> = groups.iter().map(|g| g.symbol).collect();
        assert_eq!(symbols, b"AI");
        assert_eq!(groups[0].child, s("FA"));
        assert_eq!(aut.group_candidates(&groups[1]).len(), 2);

        // A window of 2 clips candidates at depth + 2.
        let narrow = Automaton::build(&word_patterns(), 2).unwrap();
        assert_eq!(
            as_strings(narrow.candidates(StateId::ROOT)),
            ["AN", "FA", "FI", "IN"]
        );
        assert_eq!(
            as_strings(narrow.candidates(narrow.find_state(b"FI").unwrap())),
            ["FIND", "FINE"]
        );
    }

    #[test]
    fn exact_scan_examples() {
        let ends = |pats: &[&str], input: &str| {
            let set = PatternSet::new(pats.iter().map(|p| p.as_bytes().to_vec())).unwrap();
            let aut = build_trie(&set).compute_failures();
            aut.exact_scan(input.as_bytes())
                .into_iter()
                .map(|r| (r.pattern_id, r.end_offset))
                .collect::<Vec<_>>()
        };
        assert_eq!(ends(&["AND"], "ANDAND"), vec![(0, 3), (0, 6)]);
        assert_eq!(ends(&["FIND", "FINE"], "FINE"), vec![(1, 4)]);
        assert_eq!(ends(&["IN", "FIND"], "FIND"), vec![(0, 3), (1, 4)]);
        assert!(ends(&["AND"], "").is_empty());
    }

    #[test]
    fn builds_are_deterministic() {
        let a = build_trie(&word_patterns())
            .compute_failures()
            .compute_window_suffixes(4, DEFAULT_SUFFIX_LIMIT)
            .unwrap();
        let b = build_trie(&word_patterns())
            .compute_failures()
            .compute_window_suffixes(4, DEFAULT_SUFFIX_LIMIT)
            .unwrap();
        assert_eq!(a, b);
    }
}
