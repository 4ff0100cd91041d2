//! Nondeterministic simulation of the window automaton.
//!
//! The scanner keeps a set of active states. Each carries the input offset
//! where its partial match began, so a state at depth `d` reached after
//! consuming `input[i]` always started at `i + 1 - d`. Per input symbol `c`,
//! every active state `q`
//!
//! 1. advances along `goto(q, c)` when that edge exists;
//! 2. advances along every other edge `goto(q, x)`, `x != c`, whose window
//!    candidates contain one that scores at least `t_local` against the input
//!    aligned at the state's start while staying inside the disjoint budget
//!    (a tolerated substitution);
//! 3. when `goto(q, c)` is missing and `q` matched the input exactly so far,
//!    falls back along failure links like classic Aho-Corasick.
//!
//! The root is re-added after every symbol. A state that reaches a node with
//! outputs hands each output pattern to the arbiter ([`judge`]), which scores
//! the full pattern against the aligned input slice and applies the global
//! threshold and the disjoint rule.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::automaton::{Automaton, Candidate, PatternId, PatternSet, StateId};
use crate::similarity::{
    euclid_score, levenshtein_distance, mismatches, unit_levenshtein, MetricKind, SimilarityError,
    SimilarityMetric,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("{name} must lie in [0, 1], got {value}")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("window length must be positive")]
    ZeroWindow,
    #[error("max_active_states must be at least 1")]
    NoActiveStates,
    #[error(
        "automaton was prepared for window {automaton:?} but the configuration asks for {config}"
    )]
    WindowMismatch {
        automaton: Option<usize>,
        config: usize,
    },
}

/// Thresholds and limits for one scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub metric: SimilarityMetric,
    /// Sliding window length; `None` uses the longest pattern.
    pub window: Option<usize>,
    pub local_threshold: f64,
    pub global_threshold: f64,
    pub disjoint_percent: f64,
    pub max_active_states: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            metric: SimilarityMetric::hamming(),
            window: None,
            local_threshold: 0.75,
            global_threshold: 0.75,
            disjoint_percent: 0.25,
            max_active_states: 64,
        }
    }
}

impl ScanConfig {
    pub fn new(metric: SimilarityMetric) -> Self {
        ScanConfig {
            metric,
            ..ScanConfig::default()
        }
    }

    /// Same value for the local and global threshold.
    pub fn with_threshold(mut self, t: f64) -> Self {
        self.local_threshold = t;
        self.global_threshold = t;
        self
    }

    pub fn with_disjoint(mut self, p: f64) -> Self {
        self.disjoint_percent = p;
        self
    }

    pub fn with_window(mut self, w: usize) -> Self {
        self.window = Some(w);
        self
    }

    /// Exact matching: every threshold at its strictest.
    pub fn exact(metric: SimilarityMetric) -> Self {
        ScanConfig {
            local_threshold: 1.0,
            global_threshold: 1.0,
            disjoint_percent: 0.0,
            ..ScanConfig::new(metric)
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for (name, value) in [
            ("local threshold", self.local_threshold),
            ("global threshold", self.global_threshold),
            ("disjoint percentage", self.disjoint_percent),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(ConfigError::OutOfRange { name, value });
            }
        }
        if self.window == Some(0) {
            return Err(ConfigError::ZeroWindow);
        }
        if self.max_active_states == 0 {
            return Err(ConfigError::NoActiveStates);
        }
        Ok(())
    }

    pub fn resolve_window(&self, patterns: &PatternSet) -> usize {
        self.window.unwrap_or(patterns.max_len()).max(1)
    }

    /// Builds an automaton prepared for this configuration's window.
    pub fn build_automaton(
        &self,
        patterns: &PatternSet,
    ) -> Result<Automaton, crate::automaton::AutomatonError> {
        Automaton::build(patterns, self.resolve_window(patterns))
    }
}

/// One reported (approximate) occurrence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchRecord {
    pub pattern_id: PatternId,
    /// One past the last matched input symbol.
    pub end_offset: usize,
    pub score: f64,
    /// The aligned input slice equals the pattern.
    pub exact: bool,
}

impl MatchRecord {
    pub fn key(&self) -> (usize, PatternId) {
        (self.end_offset, self.pattern_id)
    }
}

pub fn sort_records(records: &mut Vec<MatchRecord>) {
    records.sort_by_key(MatchRecord::key);
    records.dedup_by_key(|r| r.key());
}

/// Renders records as the JSON array emitted by the command line, scores with
/// six decimals.
pub fn records_to_json(patterns: &PatternSet, records: &[MatchRecord]) -> String {
    let mut out = String::from("[");
    for (i, r) in records.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let pattern = String::from_utf8_lossy(patterns.get(r.pattern_id));
        out.push_str(&format!(
            "{{\"pattern\":{},\"pattern_id\":{},\"end_offset\":{},\"score\":{:.6},\"exact\":{}}}",
            serde_json::to_string(&pattern).expect("strings serialize"),
            r.pattern_id,
            r.end_offset,
            r.score,
            r.exact
        ));
    }
    out.push(']');
    out
}

/// Full-pattern score and disjoint fraction of an aligned slice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Judgement {
    pub score: f64,
    pub disjoint: f64,
}

impl Judgement {
    pub fn accepts(&self, global_threshold: f64, disjoint_percent: f64) -> bool {
        self.score >= global_threshold && self.disjoint <= disjoint_percent
    }
}

/// Scores `pattern` against `slice`. The disjoint fraction is the mismatch
/// count (Euclid, Hamming) or the edit distance (Levenshtein) over the
/// pattern length.
pub fn judge(
    metric: &SimilarityMetric,
    pattern: &[u8],
    slice: &[u8],
) -> Result<Judgement, SimilarityError> {
    let len = pattern.len() as f64;
    match metric.kind {
        MetricKind::Hamming => {
            let n = pattern.len().max(slice.len());
            if n == 0 {
                return Err(SimilarityError::Empty);
            }
            let m = mismatches(pattern, slice) as f64;
            Ok(Judgement {
                score: 1.0 - m / n as f64,
                disjoint: m / len,
            })
        }
        MetricKind::Euclid => {
            let score = metric.similarity(pattern, slice)?;
            Ok(Judgement {
                score,
                disjoint: mismatches(pattern, slice) as f64 / len,
            })
        }
        MetricKind::Levenshtein => {
            let n = pattern.len().max(slice.len());
            if n == 0 {
                return Err(SimilarityError::Empty);
            }
            let d = if metric.edit_costs.is_unit() {
                unit_levenshtein(pattern, slice) as f64
            } else {
                levenshtein_distance(pattern, slice, &metric.edit_costs)
            };
            Ok(Judgement {
                score: (1.0 - d / n as f64).clamp(0.0, 1.0),
                disjoint: d / len,
            })
        }
    }
}

/// Judges `pattern` against the slice ending at `end_offset` and returns a
/// record when it clears the global threshold and disjoint budget.
pub fn emit_candidate(
    cfg: &ScanConfig,
    pattern_id: PatternId,
    pattern: &[u8],
    input: &[u8],
    end_offset: usize,
) -> Option<MatchRecord> {
    if end_offset < pattern.len() || end_offset > input.len() {
        return None;
    }
    let slice = &input[end_offset - pattern.len()..end_offset];
    let j = judge(&cfg.metric, pattern, slice).ok()?;
    if !j.accepts(cfg.global_threshold, cfg.disjoint_percent) {
        return None;
    }
    debug_assert!(j.score >= cfg.global_threshold && j.disjoint <= cfg.disjoint_percent);
    Some(MatchRecord {
        pattern_id,
        end_offset,
        score: j.score,
        exact: slice == pattern,
    })
}

/// A partial match: automaton node plus where it began in the input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ActiveState {
    pub state: StateId,
    pub start: usize,
    /// No substitution was tolerated on the way here.
    pub exact: bool,
    mismatches: u32,
    squared: u64,
}

impl ActiveState {
    fn root(start: usize) -> Self {
        ActiveState {
            state: StateId::ROOT,
            start,
            exact: true,
            mismatches: 0,
            squared: 0,
        }
    }
}

/// The image of one `δ: Q × σ → P(Q)` application.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActiveStateSet {
    states: Vec<ActiveState>,
}

impl ActiveStateSet {
    pub fn initial() -> Self {
        ActiveStateSet {
            states: vec![ActiveState::root(0)],
        }
    }

    pub fn states(&self) -> &[ActiveState] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn contains(&self, state: StateId) -> bool {
        self.states.iter().any(|s| s.state == state)
    }
}

/// Diagnostics collected during a scan.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ScanStats {
    /// Steps at which the active set had to be truncated.
    pub overflow_steps: u64,
    pub peak_active_states: usize,
    pub candidate_checks: u64,
}

impl ScanStats {
    pub fn merge(&mut self, other: &ScanStats) {
        self.overflow_steps += other.overflow_steps;
        self.peak_active_states = self.peak_active_states.max(other.peak_active_states);
        self.candidate_checks += other.candidate_checks;
    }
}

#[derive(Debug, Clone, Copy)]
struct Budget {
    /// Largest tolerated mismatch count or edit distance; negative rejects.
    count: i64,
    /// Largest tolerated squared symbol difference (Euclid only).
    squared: u64,
}

const REJECT: Budget = Budget {
    count: -1,
    squared: 0,
};

/// Per-length acceptance limits equivalent to `score >= t_local` and
/// `disjoint <= p`, precomputed with the arbiter's own arithmetic.
#[derive(Debug, Clone)]
struct Gate {
    metric: SimilarityMetric,
    threshold: f64,
    complete: Vec<Budget>,
    truncated: Vec<Budget>,
    disjoint: f64,
    truncated_disjoint: f64,
}

impl Gate {
    fn new(
        metric: SimilarityMetric,
        threshold: f64,
        disjoint: f64,
        window: usize,
        max_len: usize,
    ) -> Gate {
        // Window-level candidates get a budget scaled by w / L_max.
        let truncated_disjoint = if max_len > window {
            disjoint * window as f64 / max_len as f64
        } else {
            disjoint
        };
        let table = |p: f64| {
            (0..=max_len)
                .map(|len| Self::budget(&metric, threshold, p, len))
                .collect()
        };
        Gate {
            metric,
            threshold,
            complete: table(disjoint),
            truncated: table(truncated_disjoint),
            disjoint,
            truncated_disjoint,
        }
    }

    fn budget(metric: &SimilarityMetric, t: f64, p: f64, len: usize) -> Budget {
        if len == 0 {
            return REJECT;
        }
        let n = len as f64;
        let within = |m: usize| m as f64 / n <= p;
        match metric.kind {
            MetricKind::Hamming | MetricKind::Levenshtein => {
                let ok = |m: usize| 1.0 - m as f64 / n >= t && within(m);
                match (0..=len).take_while(|&m| ok(m)).last() {
                    Some(m) => Budget {
                        count: m as i64,
                        squared: 0,
                    },
                    None => REJECT,
                }
            }
            MetricKind::Euclid => {
                let count = match (0..=len).take_while(|&m| within(m)).last() {
                    Some(m) => m as i64,
                    None => return REJECT,
                };
                let ok = |s: u64| euclid_score(s, len, metric.alphabet) >= t;
                if !ok(0) {
                    return REJECT;
                }
                let max_diff = u64::from(metric.alphabet.max_difference());
                let (mut lo, mut hi) = (0u64, len as u64 * max_diff * max_diff);
                while lo < hi {
                    let mid = lo + (hi - lo).div_ceil(2);
                    if ok(mid) {
                        lo = mid;
                    } else {
                        hi = mid - 1;
                    }
                }
                Budget { count, squared: lo }
            }
        }
    }

    /// Mismatch or edit budget of a candidate; negative rejects everything.
    fn count_budget(&self, len: usize, complete: bool) -> i64 {
        if complete {
            self.complete[len].count
        } else {
            self.truncated[len].count
        }
    }

    /// Whether `passes` is decided by an integer count budget, which the
    /// prefilters rely on.
    fn counts_edits_or_mismatches(&self) -> bool {
        self.metric.kind != MetricKind::Levenshtein || self.metric.edit_costs.is_unit()
    }

    /// Does `cand` (sharing its first `depth` symbols with the state's path)
    /// pass against `slice`? `prefix_mismatches`/`prefix_squared` account for
    /// those first `depth` positions.
    #[inline]
    #[allow(clippy::too_many_arguments)]
    fn passes(
        &self,
        cand: &[u8],
        complete: bool,
        slice: &[u8],
        depth: usize,
        prefix_mismatches: u32,
        prefix_squared: u64,
        scratch: &mut LevScratch,
    ) -> bool {
        let len = cand.len();
        let budget = if complete {
            self.complete[len]
        } else {
            self.truncated[len]
        };
        if budget.count < 0 {
            return false;
        }
        let limit = budget.count as u64;
        let common = len.min(slice.len());
        let surplus = (len - common) as u64;
        match self.metric.kind {
            MetricKind::Hamming => {
                let mut m = u64::from(prefix_mismatches) + surplus;
                if m > limit {
                    return false;
                }
                for (a, b) in cand[depth..common].iter().zip(&slice[depth..common]) {
                    if a != b {
                        m += 1;
                        if m > limit {
                            return false;
                        }
                    }
                }
                true
            }
            MetricKind::Euclid => {
                let max_diff = u64::from(self.metric.alphabet.max_difference());
                let mut m = u64::from(prefix_mismatches) + surplus;
                let mut sq = prefix_squared + surplus * max_diff * max_diff;
                if m > limit || sq > budget.squared {
                    return false;
                }
                for (&a, &b) in cand[depth..common].iter().zip(&slice[depth..common]) {
                    if a != b {
                        let d = u64::from(a.abs_diff(b));
                        m += 1;
                        sq += d * d;
                        if m > limit || sq > budget.squared {
                            return false;
                        }
                    }
                }
                true
            }
            MetricKind::Levenshtein => {
                if self.metric.edit_costs.is_unit() {
                    scratch.within(cand, slice, budget.count as usize)
                } else {
                    let d = levenshtein_distance(cand, slice, &self.metric.edit_costs);
                    let n = len as f64;
                    let p = if complete {
                        self.disjoint
                    } else {
                        self.truncated_disjoint
                    };
                    (1.0 - d / n).clamp(0.0, 1.0) >= self.threshold && d / n <= p
                }
            }
        }
    }
}

/// Banded unit-cost edit distance with early exit.
#[derive(Debug, Default, Clone)]
struct LevScratch {
    prev: Vec<u32>,
    cur: Vec<u32>,
}

const FAR: u32 = u32::MAX / 4;

impl LevScratch {
    /// `unit_levenshtein(a, b) <= k`, only filling cells with `|i - j| <= k`
    /// and giving up once no cell of a row can still reach the corner.
    fn within(&mut self, a: &[u8], b: &[u8], k: usize) -> bool {
        let (n, m) = (a.len(), b.len());
        if n.abs_diff(m) > k {
            return false;
        }
        if self.prev.len() < m + 2 {
            self.prev.resize(m + 2, FAR);
            self.cur.resize(m + 2, FAR);
        }
        let (prev, cur) = (&mut self.prev, &mut self.cur);
        for (j, cell) in prev.iter_mut().enumerate().take(m + 2) {
            *cell = if j <= k.min(m) { j as u32 } else { FAR };
        }
        let k32 = k as u32;
        for i in 1..=n {
            let lo = i.saturating_sub(k).max(1);
            let hi = (i + k).min(m);
            cur[lo - 1] = if lo == 1 { i as u32 } else { FAR };
            let mut best = if lo == 1 {
                i as u32 + (n - i).abs_diff(m) as u32
            } else {
                FAR
            };
            let ai = a[i - 1];
            for j in lo..=hi {
                let v = (prev[j - 1] + u32::from(ai != b[j - 1]))
                    .min(prev[j] + 1)
                    .min(cur[j - 1] + 1);
                cur[j] = v;
                best = best.min(v + (n - i).abs_diff(m - j) as u32);
            }
            if hi < m {
                cur[hi + 1] = FAR;
            }
            if best > k32 {
                return false;
            }
            std::mem::swap(prev, cur);
        }
        prev[m] <= k32
    }
}

/// Exact prefilters that keep hopeless candidates away from the gate.
///
/// Both rest on the pigeonhole principle. A candidate within a budget of `b`
/// mismatches (or edits) of its aligned slice, cut into `b + 1` pieces, has
/// one piece that appears unchanged in the slice, shifted by at most `b`
/// positions under edit distance. Pieces are indexed by their first two
/// symbols and the input is probed a fixed distance ahead of the scan.
///
/// * Root candidates differ from the input in their first symbol, which
///   spends one unit of budget, so `b` pieces of the remaining symbols
///   suffice. Hits queue the candidate for the root offset it would align
///   at; the root only checks queued candidates.
/// * Complete candidates at deeper states are whole patterns aligned at the
///   state's start. Hits mark the pattern viable for that start offset;
///   deeper states skip patterns that are not.
///
/// Verdicts of the gate are unchanged, only the number of evaluations drops.
#[derive(Debug, Clone)]
struct Prefilter {
    /// Root group index and candidate.
    root_candidates: Vec<(u32, Candidate)>,
    /// Root candidates with pieces too short to index.
    root_always: Vec<u32>,
    /// Patterns with pieces too short to index, always viable.
    always_viable: Vec<u32>,
    starts: Vec<u32>,
    pieces: Vec<Piece>,
    piece_bytes: Vec<u8>,
    /// Probes run this far ahead of the scan.
    horizon: usize,
    /// Ring slots: lookahead plus the longest time a start offset stays live.
    ring_len: usize,
    pattern_words: usize,
}

#[derive(Debug, Clone, Copy)]
struct Piece {
    id: u32,
    offset: u16,
    slack: u16,
    /// Symbols of the piece in `Prefilter::piece_bytes`.
    text: u32,
    len: u16,
    /// Marks pattern viability rather than queueing a root candidate.
    viability: bool,
}

#[inline]
fn bigram(a: u8, b: u8) -> usize {
    usize::from(a) << 8 | usize::from(b)
}

/// `count` pieces covering `bytes[first..]` as `(offset, length)`, or `None`
/// when a piece would be shorter than a bigram.
fn cut(bytes: &[u8], first: usize, count: usize) -> Option<Vec<(usize, usize)>> {
    let rest = bytes.len().checked_sub(first)?;
    let piece_len = rest / count.max(1);
    if piece_len < 2 || bytes.len() > usize::from(u16::MAX) {
        return None;
    }
    let pieces = (0..count)
        .map(|k| {
            let offset = first + k * piece_len;
            let end = if k + 1 == count {
                bytes.len()
            } else {
                offset + piece_len
            };
            (offset, end - offset)
        })
        .collect();
    Some(pieces)
}

impl Prefilter {
    fn new(aut: &Automaton, gate: &Gate) -> Prefilter {
        let indexable = gate.counts_edits_or_mismatches();
        let shifts = gate.metric.kind == MetricKind::Levenshtein;
        let mut keyed: Vec<(usize, Piece)> = Vec::new();
        let mut piece_bytes = Vec::new();
        let mut add =
            |bytes: &[u8], id: u32, b: usize, cuts: Vec<(usize, usize)>, viability: bool| {
                for (offset, len) in cuts {
                    let piece = Piece {
                        id,
                        offset: offset as u16,
                        slack: if shifts { b as u16 } else { 0 },
                        text: piece_bytes.len() as u32,
                        len: len as u16,
                        viability,
                    };
                    piece_bytes.extend_from_slice(&bytes[offset..offset + len]);
                    keyed.push((bigram(bytes[offset], bytes[offset + 1]), piece));
                }
            };

        let mut root_candidates = Vec::new();
        let mut root_always = Vec::new();
        for (gi, group) in aut.candidate_groups(StateId::ROOT).iter().enumerate() {
            for cand in aut.group_candidates(group) {
                let bytes = aut.candidate_bytes(cand);
                let budget = gate.count_budget(bytes.len(), cand.complete);
                if indexable && budget < 1 {
                    // The first symbol alone exhausts the budget.
                    continue;
                }
                let id = root_candidates.len() as u32;
                root_candidates.push((gi as u32, *cand));
                let b = budget.max(1) as usize;
                match cut(bytes, 1, b).filter(|_| indexable) {
                    Some(cuts) => add(bytes, id, b, cuts, false),
                    None => root_always.push(id),
                }
            }
        }

        let mut always_viable = Vec::new();
        for (id, pattern) in aut.patterns().iter().enumerate() {
            let budget = gate.count_budget(pattern.len(), true);
            if indexable && budget < 0 {
                continue;
            }
            let b = budget.max(0) as usize;
            match cut(pattern, 0, b + 1).filter(|_| indexable) {
                Some(cuts) => add(pattern, id as u32, b, cuts, true),
                None => always_viable.push(id as u32),
            }
        }

        let mut starts = vec![0u32; (1 << 16) + 1];
        for &(k, _) in &keyed {
            starts[k + 1] += 1;
        }
        for k in 0..1 << 16 {
            starts[k + 1] += starts[k];
        }
        let mut slots: Vec<Option<Piece>> = vec![None; keyed.len()];
        let mut fill = starts.clone();
        for (k, piece) in keyed {
            slots[fill[k] as usize] = Some(piece);
            fill[k] += 1;
        }
        let pieces: Vec<Piece> = slots
            .into_iter()
            .map(|p| p.expect("every slot filled"))
            .collect();
        let horizon = pieces
            .iter()
            .map(|p| usize::from(p.offset) + usize::from(p.slack))
            .max()
            .unwrap_or(0)
            + 1;
        Prefilter {
            root_candidates,
            root_always,
            always_viable,
            starts,
            pieces,
            piece_bytes,
            horizon,
            ring_len: horizon + aut.patterns().max_len() + 2,
            pattern_words: aut.patterns().len().div_ceil(64),
        }
    }

    /// Probes the input up to `i + horizon`.
    fn probe(&self, ws: &mut Workspace, input: &[u8], i: usize) {
        // Fresh viability slots for start offsets that can first be written now.
        while ws.cleared <= i + self.horizon {
            let slot = ws.cleared % self.ring_len;
            let words = &mut ws.viable[slot * self.pattern_words..(slot + 1) * self.pattern_words];
            words.fill(0);
            for &id in &self.always_viable {
                words[id as usize / 64] |= 1 << (id % 64);
            }
            ws.cleared += 1;
        }
        let Some(last) = input.len().checked_sub(2) else {
            return;
        };
        let last = last.min(i + self.horizon);
        while ws.cursor <= last {
            let j = ws.cursor;
            ws.cursor += 1;
            let k = bigram(input[j], input[j + 1]);
            for p in &self.pieces[self.starts[k] as usize..self.starts[k + 1] as usize] {
                let text = &self.piece_bytes[p.text as usize..p.text as usize + usize::from(p.len)];
                if input.get(j..j + text.len()) != Some(text) {
                    continue;
                }
                // The piece sits at `t + offset + shift` for an alignment
                // `t <= j` with `|shift| <= slack`.
                let aligned = j as isize - p.offset as isize;
                let lo = (aligned - p.slack as isize).max(i as isize);
                let hi = (aligned + p.slack as isize).min(j as isize);
                for t in lo..=hi {
                    let slot = t as usize % self.ring_len;
                    if p.viability {
                        ws.viable[slot * self.pattern_words + p.id as usize / 64] |=
                            1 << (p.id % 64);
                    } else {
                        ws.ring[slot].push(p.id);
                    }
                }
            }
        }
    }

    /// Might `pattern` pass the gate aligned at `start`?
    #[inline]
    fn viable(&self, ws: &Workspace, start: usize, pattern: u32) -> bool {
        if start < ws.filtered_from {
            return true;
        }
        let slot = start % self.ring_len;
        ws.viable[slot * self.pattern_words + pattern as usize / 64] & (1 << (pattern % 64)) != 0
    }
}

/// Reusable per-scan buffers.
#[derive(Debug, Clone)]
struct Workspace {
    current: Vec<ActiveState>,
    next: Vec<ActiveState>,
    /// Per node: step stamp and position in `next`.
    seen: Vec<(u64, u32)>,
    /// Per pattern: last end offset already judged.
    judged: Vec<usize>,
    lev: LevScratch,
    stats: ScanStats,
    /// Queued root candidates per alignment offset, modulo the ring length.
    ring: Vec<Vec<u32>>,
    /// Pattern viability bitsets per start offset, same ring.
    viable: Vec<u64>,
    /// Start offsets below this were never probed and are not filtered.
    filtered_from: usize,
    /// Viability slots are fresh below this offset.
    cleared: usize,
    /// Next input offset to index.
    cursor: usize,
    candidate_seen: Vec<u64>,
    group_done: Vec<u64>,
}

impl Workspace {
    fn new(aut: &Automaton, filter: &Prefilter, from: usize) -> Self {
        Workspace {
            ring: vec![Vec::new(); filter.ring_len],
            viable: vec![0; filter.ring_len * filter.pattern_words],
            filtered_from: from,
            cleared: from,
            cursor: from,
            candidate_seen: vec![u64::MAX; filter.root_candidates.len()],
            group_done: vec![u64::MAX; aut.candidate_groups(StateId::ROOT).len()],
            current: Vec::with_capacity(64),
            next: Vec::with_capacity(64),
            seen: vec![(u64::MAX, 0); aut.node_count()],
            judged: vec![usize::MAX; aut.patterns().len()],
            lev: LevScratch::default(),
            stats: ScanStats::default(),
        }
    }

    #[inline]
    fn push(&mut self, step: u64, s: ActiveState) {
        let slot = &mut self.seen[s.state.index()];
        if slot.0 == step {
            let existing = &mut self.next[slot.1 as usize];
            if s.start < existing.start || (s.start == existing.start && s.exact && !existing.exact)
            {
                *existing = s;
            }
        } else {
            *slot = (step, self.next.len() as u32);
            self.next.push(s);
        }
    }
}

/// Runs the window automaton over inputs with a fixed configuration.
#[derive(Debug, Clone)]
pub struct Scanner<'a> {
    aut: &'a Automaton,
    cfg: ScanConfig,
    gate: Gate,
    filter: Prefilter,
    window: usize,
}

/// Records plus diagnostics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScanOutput {
    pub records: Vec<MatchRecord>,
    pub stats: ScanStats,
}

impl<'a> Scanner<'a> {
    pub fn new(aut: &'a Automaton, cfg: ScanConfig) -> Result<Self, ConfigError> {
        cfg.validate()?;
        let window = cfg.resolve_window(aut.patterns());
        if aut.window() != Some(window) {
            return Err(ConfigError::WindowMismatch {
                automaton: aut.window(),
                config: window,
            });
        }
        let gate = Gate::new(
            cfg.metric,
            cfg.local_threshold,
            cfg.disjoint_percent,
            window,
            aut.patterns().max_len(),
        );
        let filter = Prefilter::new(aut, &gate);
        Ok(Scanner {
            aut,
            cfg,
            gate,
            filter,
            window,
        })
    }

    pub fn automaton(&self) -> &Automaton {
        self.aut
    }

    pub fn config(&self) -> &ScanConfig {
        &self.cfg
    }

    pub fn window(&self) -> usize {
        self.window
    }

    /// Best similarity between any scoring candidate of `state` and the input
    /// aligned at `start`. Without candidates the node's prefix alone is
    /// compared.
    pub fn local_window_score(&self, state: StateId, input: &[u8], start: usize) -> f64 {
        let slice_for = |len: usize| &input[start.min(input.len())..(start + len).min(input.len())];
        let score = |cand: &[u8]| {
            self.cfg
                .metric
                .similarity(cand, slice_for(cand.len()))
                .unwrap_or(0.0)
        };
        let candidates = self.aut.candidates(state);
        if candidates.is_empty() {
            let prefix = self.aut.prefix(state);
            return if prefix.is_empty() {
                0.0
            } else {
                score(prefix)
            };
        }
        candidates.iter().map(|c| score(c)).fold(0.0, f64::max)
    }

    /// One application of the transition relation at input offset `i`.
    pub fn step(
        &self,
        active: &ActiveStateSet,
        input: &[u8],
        i: usize,
    ) -> (ActiveStateSet, Vec<MatchRecord>) {
        let mut ws = Workspace::new(self.aut, &self.filter, i);
        ws.current.clone_from(&active.states);
        let mut out = Vec::new();
        self.advance(&mut ws, input, i, &mut out);
        (ActiveStateSet { states: ws.next }, out)
    }

    pub fn scan(&self, input: &[u8]) -> Vec<MatchRecord> {
        self.scan_with_stats(input).records
    }

    pub fn scan_with_stats(&self, input: &[u8]) -> ScanOutput {
        self.scan_range(input, 0, input.len())
    }

    /// Steps over `input[from..to]` starting from a fresh root, while window
    /// lookahead and the arbiter still see the whole input.
    pub fn scan_range(&self, input: &[u8], from: usize, to: usize) -> ScanOutput {
        let mut ws = Workspace::new(self.aut, &self.filter, from);
        ws.current.push(ActiveState::root(from));
        let mut records = Vec::new();
        for i in from..to.min(input.len()) {
            self.advance(&mut ws, input, i, &mut records);
            std::mem::swap(&mut ws.current, &mut ws.next);
        }
        sort_records(&mut records);
        ScanOutput {
            records,
            stats: ws.stats,
        }
    }

    fn advance(&self, ws: &mut Workspace, input: &[u8], i: usize, out: &mut Vec<MatchRecord>) {
        let aut = self.aut;
        let c = input[i];
        let stamp = i as u64;
        ws.next.clear();
        for k in 0..ws.current.len() {
            let s = ws.current[k];
            let depth = aut.node(s.state).depth();

            let exact_child = aut.goto(s.state, c);
            if let Some(child) = exact_child {
                ws.push(stamp, ActiveState { state: child, ..s });
            }

            if s.state == StateId::ROOT && s.start == i {
                self.root_substitutions(ws, input, i);
            } else {
                self.substitutions(ws, input, i, s, depth);
            }

            if exact_child.is_none() && s.exact && s.state != StateId::ROOT {
                let landing = aut.next_state(aut.node(s.state).fail(), c);
                if landing != StateId::ROOT {
                    let start = i + 1 - aut.node(landing).depth();
                    ws.push(
                        stamp,
                        ActiveState {
                            state: landing,
                            start,
                            exact: true,
                            mismatches: 0,
                            squared: 0,
                        },
                    );
                }
            }
        }
        self.finish_step(ws, input, i, out);
    }

    /// Follows every edge `x != input[i]` of `s` whose group passes the gate.
    fn substitutions(
        &self,
        ws: &mut Workspace,
        input: &[u8],
        i: usize,
        s: ActiveState,
        depth: usize,
    ) {
        let aut = self.aut;
        let c = input[i];
        let stamp = i as u64;
        for group in aut.candidate_groups(s.state) {
            if group.symbol == c {
                continue;
            }
            if self.group_passes(ws, aut.group_candidates(group), input, s, depth) {
                let d = u64::from(group.symbol.abs_diff(c));
                ws.push(
                    stamp,
                    ActiveState {
                        state: group.child,
                        start: s.start,
                        exact: false,
                        mismatches: s.mismatches + 1,
                        squared: s.squared + d * d,
                    },
                );
            }
        }
    }

    /// [`Self::substitutions`] for the root, restricted to prefiltered
    /// candidates.
    fn root_substitutions(&self, ws: &mut Workspace, input: &[u8], i: usize) {
        let c = input[i];
        let stamp = i as u64;
        let filter = &self.filter;
        filter.probe(ws, input, i);
        let slot = i % ws.ring.len();
        let mut queued = std::mem::take(&mut ws.ring[slot]);
        let groups = self.aut.candidate_groups(StateId::ROOT);
        let n = input.len();
        for &id in queued.iter().chain(&filter.root_always) {
            let id = id as usize;
            if ws.candidate_seen[id] == stamp {
                continue;
            }
            ws.candidate_seen[id] = stamp;
            let (gi, cand) = filter.root_candidates[id];
            let gi = gi as usize;
            let group = &groups[gi];
            if group.symbol == c || ws.group_done[gi] == stamp {
                continue;
            }
            ws.stats.candidate_checks += 1;
            let bytes = self.aut.candidate_bytes(&cand);
            let slice = &input[i..(i + bytes.len()).min(n)];
            if self
                .gate
                .passes(bytes, cand.complete, slice, 0, 0, 0, &mut ws.lev)
            {
                ws.group_done[gi] = stamp;
                let d = u64::from(group.symbol.abs_diff(c));
                ws.push(
                    stamp,
                    ActiveState {
                        state: group.child,
                        start: i,
                        exact: false,
                        mismatches: 1,
                        squared: d * d,
                    },
                );
            }
        }
        queued.clear();
        ws.ring[slot] = queued;
    }

    fn finish_step(&self, ws: &mut Workspace, input: &[u8], i: usize, out: &mut Vec<MatchRecord>) {
        let aut = self.aut;
        let stamp = i as u64;
        ws.push(stamp, ActiveState::root(i + 1));

        if ws.next.len() > self.cfg.max_active_states {
            ws.stats.overflow_steps += 1;
            ws.next.sort_by(|a, b| {
                let root_last = (a.state == StateId::ROOT).cmp(&(b.state == StateId::ROOT));
                root_last
                    .then(aut.node(b.state).depth().cmp(&aut.node(a.state).depth()))
                    .then(a.state.cmp(&b.state))
            });
            let root = ws.next.pop().expect("root is present");
            ws.next.truncate(self.cfg.max_active_states - 1);
            ws.next.push(root);
            for (pos, s) in ws.next.iter().enumerate() {
                ws.seen[s.state.index()] = (stamp, pos as u32);
            }
        }
        debug_assert!(ws.next.len() <= self.cfg.max_active_states);
        ws.stats.peak_active_states = ws.stats.peak_active_states.max(ws.next.len());

        let end = i + 1;
        for s in &ws.next {
            for &pid in aut.node(s.state).outputs() {
                if ws.judged[pid] == end {
                    continue;
                }
                ws.judged[pid] = end;
                if let Some(r) = emit_candidate(&self.cfg, pid, aut.pattern(pid), input, end) {
                    out.push(r);
                }
            }
        }
    }

    #[inline]
    fn group_passes(
        &self,
        ws: &mut Workspace,
        cands: &[Candidate],
        input: &[u8],
        s: ActiveState,
        depth: usize,
    ) -> bool {
        let n = input.len();
        for cand in cands {
            if cand.complete && !self.filter.viable(ws, s.start, cand.pattern) {
                continue;
            }
            ws.stats.candidate_checks += 1;
            let bytes = self.aut.candidate_bytes(cand);
            let slice = &input[s.start.min(n)..(s.start + bytes.len()).min(n)];
            if self.gate.passes(
                bytes,
                cand.complete,
                slice,
                depth,
                s.mismatches,
                s.squared,
                &mut ws.lev,
            ) {
                return true;
            }
        }
        false
    }
}

/// Convenience: build nothing, just scan with a prepared automaton.
pub fn scan(
    aut: &Automaton,
    cfg: &ScanConfig,
    input: &[u8],
) -> Result<Vec<MatchRecord>, ConfigError> {
    Ok(Scanner::new(aut, *cfg)?.scan(input))
}

/// Splits `input` into `chunks` segments, scans each with an overlap of
/// `L_max + w` symbols of left context and keeps only the records that end
/// inside the segment. Segments run on the rayon pool when the `parallel`
/// feature is enabled.
pub fn scan_chunked(scanner: &Scanner<'_>, input: &[u8], chunks: usize) -> ScanOutput {
    let overlap = scanner.automaton().patterns().max_len() + scanner.window();
    let bounds = chunk_bounds(input.len(), chunks);
    let run = |&(a, b): &(usize, usize)| {
        let mut out = scanner.scan_range(input, a.saturating_sub(overlap), b);
        out.records
            .retain(|r| r.end_offset > a && r.end_offset <= b);
        out
    };
    #[cfg(feature = "parallel")]
    let parts: Vec<ScanOutput> = {
        use rayon::prelude::*;
        bounds.par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<ScanOutput> = bounds.iter().map(run).collect();

    let mut merged = ScanOutput::default();
    for part in parts {
        merged.records.extend(part.records);
        merged.stats.merge(&part.stats);
    }
    sort_records(&mut merged.records);
    merged
}

pub(crate) fn chunk_bounds(len: usize, chunks: usize) -> Vec<(usize, usize)> {
    let chunks = chunks.max(1);
    let size = len.div_ceil(chunks).max(1);
    (0..len)
        .step_by(size)
        .map(|a| (a, (a + size).min(len)))
        .collect()
}
