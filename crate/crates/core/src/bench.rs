//! Experiment harness: threshold sweeps with false positive/negative counts
//! against the baseline, and matcher versus baseline throughput.

use std::collections::HashSet;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::automaton::{Automaton, AutomatonError, PatternSet};
use crate::baseline::{naive_scan, naive_scan_chunked};
use crate::datagen::{gen_corpus, gen_patterns, plant_plan, Corpus, DatagenError};
use crate::matcher::{ConfigError, MatchRecord, ScanConfig, Scanner};
use crate::similarity::{MetricKind, SimilarityMetric};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("cannot time an empty corpus")]
    EmptyCorpus,
    #[error("at least 3 repetitions are required, got {0}")]
    TooFewRepetitions(usize),
    #[error("invalid grid {0:?}: expected lo:hi:step with 0 <= lo <= hi <= 1 and step > 0")]
    InvalidGrid(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
    #[error(transparent)]
    Datagen(#[from] DatagenError),
}

/// Pattern-length regime of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Scenario {
    /// 75 patterns of 4 to 15 symbols.
    One,
    /// The same count with doubled lengths, 8 to 30 symbols.
    Two,
}

impl Scenario {
    pub const PATTERN_COUNT: usize = 75;

    pub fn number(self) -> u8 {
        match self {
            Scenario::One => 1,
            Scenario::Two => 2,
        }
    }

    pub fn from_number(n: u8) -> Option<Self> {
        match n {
            1 => Some(Scenario::One),
            2 => Some(Scenario::Two),
            _ => None,
        }
    }

    pub fn lengths(self) -> (usize, usize) {
        match self {
            Scenario::One => (4, 15),
            Scenario::Two => (8, 30),
        }
    }
}

/// Substitution rates cycled over the planted copies.
pub const PLANT_RATES: [f64; 4] = [0.0, 0.05, 0.10, 0.15];

#[derive(Debug, Clone)]
pub struct Workload {
    pub scenario: Scenario,
    pub patterns: PatternSet,
    pub corpus: Corpus,
}

/// Seeded patterns and corpus for a scenario.
pub fn workload(
    scenario: Scenario,
    corpus_size: usize,
    plants: usize,
    seed: u64,
) -> Result<Workload, BenchError> {
    let (min, max) = scenario.lengths();
    let patterns = gen_patterns(Scenario::PATTERN_COUNT, min, max, seed)?;
    let plan = plant_plan(patterns.len(), plants, &PLANT_RATES, seed.wrapping_add(1));
    let corpus = gen_corpus(&patterns, corpus_size, &plan, seed.wrapping_add(2))?;
    Ok(Workload {
        scenario,
        patterns,
        corpus,
    })
}

/// `(false positives, false negatives)` of `matcher` relative to `baseline`,
/// compared as sets of `(pattern_id, end_offset)`.
pub fn accuracy(matcher: &[MatchRecord], baseline: &[MatchRecord]) -> (usize, usize) {
    let m: HashSet<_> = matcher.iter().map(MatchRecord::key).collect();
    let b: HashSet<_> = baseline.iter().map(MatchRecord::key).collect();
    (m.difference(&b).count(), b.difference(&m).count())
}

/// Parses `lo:hi:step` into an ascending list of thresholds.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, BenchError> {
    let bad = || BenchError::InvalidGrid(spec.to_string());
    let parts: Vec<f64> = spec
        .split(':')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad())?;
    let [lo, hi, step] = parts[..] else {
        return Err(bad());
    };
    if !(0.0..=1.0).contains(&lo) || !(lo..=1.0).contains(&hi) || step <= 0.0 || !step.is_finite() {
        return Err(bad());
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    // Round away accumulated binary error so 0.85 is 0.85.
    Ok((0..n)
        .map(|i| ((lo + i as f64 * step) * 1e9).round() / 1e9)
        .collect())
}

/// The grid used throughout: 0.50 to 0.95 in steps of 0.05.
pub fn default_grid() -> Vec<f64> {
    parse_grid("0.5:0.95:0.05").expect("valid grid")
}

/// Median bytes per second of `repetitions` timed calls of `run`, after one
/// discarded warm-up call of `warm_up`.
pub fn measure_throughput(
    bytes: usize,
    repetitions: usize,
    mut warm_up: impl FnMut(),
    mut run: impl FnMut(),
) -> Result<f64, BenchError> {
    if bytes == 0 {
        return Err(BenchError::EmptyCorpus);
    }
    if repetitions < 3 {
        return Err(BenchError::TooFewRepetitions(repetitions));
    }
    warm_up();
    let mut rates: Vec<f64> = (0..repetitions)
        .map(|_| {
            let t = Instant::now();
            run();
            bytes as f64 / t.elapsed().as_secs_f64().max(1e-9)
        })
        .collect();
    rates.sort_by(f64::total_cmp);
    Ok(rates[rates.len() / 2])
}

/// Prefix scanned by the discarded warm-up pass.
pub const WARM_UP_BYTES: usize = 256 * 1024;

/// Serial matcher throughput; the automaton is built before timing.
pub fn matcher_throughput(
    aut: &Automaton,
    cfg: &ScanConfig,
    corpus: &[u8],
    repetitions: usize,
) -> Result<f64, BenchError> {
    let scanner = Scanner::new(aut, *cfg)?;
    let warm = &corpus[..corpus.len().min(WARM_UP_BYTES)];
    measure_throughput(
        corpus.len(),
        repetitions,
        || {
            std::hint::black_box(scanner.scan(warm));
        },
        || {
            std::hint::black_box(scanner.scan(corpus));
        },
    )
}

/// Serial baseline throughput.
pub fn baseline_throughput(
    patterns: &PatternSet,
    cfg: &ScanConfig,
    corpus: &[u8],
    repetitions: usize,
) -> Result<f64, BenchError> {
    cfg.validate()?;
    let warm = &corpus[..corpus.len().min(WARM_UP_BYTES)];
    measure_throughput(
        corpus.len(),
        repetitions,
        || {
            std::hint::black_box(naive_scan(patterns, cfg, warm).expect("validated"));
        },
        || {
            std::hint::black_box(naive_scan(patterns, cfg, corpus).expect("validated"));
        },
    )
}

/// One line of the report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub scenario: u8,
    pub metric: MetricKind,
    pub t_local: f64,
    pub t_global: f64,
    pub p: f64,
    pub window: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub matcher_bps: Option<f64>,
    pub baseline_bps: Option<f64>,
}

impl SweepRow {
    pub fn speedup(&self) -> Option<f64> {
        Some(self.matcher_bps? / self.baseline_bps?)
    }
}

pub const CSV_HEADER: &str =
    "scenario,metric,t_local,t_global,p,window,fp,fn,matcher_bps,baseline_bps,speedup";

/// Renders rows under [`CSV_HEADER`]; missing timings are left empty.
pub fn to_csv(rows: &[SweepRow]) -> String {
    let opt =
        |v: Option<f64>, decimals: usize| v.map_or(String::new(), |v| format!("{v:.decimals$}"));
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{:.2},{:.2},{:.2},{},{},{},{},{},{}\n",
            r.scenario,
            r.metric,
            r.t_local,
            r.t_global,
            r.p,
            r.window,
            r.fp,
            r.fn_,
            opt(r.matcher_bps, 0),
            opt(r.baseline_bps, 0),
            opt(r.speedup(), 3)
        ));
    }
    out
}

/// Knobs of a sweep.
#[derive(Debug, Clone)]
pub struct SweepOptions {
    pub grid: Vec<f64>,
    pub disjoint_percent: f64,
    /// `None` uses the longest pattern.
    pub window: Option<usize>,
    pub max_active_states: usize,
    /// Timed repetitions; zero skips throughput measurement.
    pub repetitions: usize,
    /// Chunks for the untimed accuracy scans.
    pub chunks: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            grid: default_grid(),
            disjoint_percent: 0.25,
            window: None,
            max_active_states: ScanConfig::default().max_active_states,
            repetitions: 0,
            chunks: 1,
        }
    }
}

/// One row per grid value with `t_local = t_global = t`. The baseline runs
/// once at the lowest threshold; higher thresholds filter its records by
/// score, which is exact because the arbiter's verdict only depends on the
/// score through `score >= t_global`. Baseline throughput is measured once.
pub fn sweep_thresholds(
    scenario: Scenario,
    patterns: &PatternSet,
    corpus: &[u8],
    metric: SimilarityMetric,
    opts: &SweepOptions,
) -> Result<Vec<SweepRow>, BenchError> {
    let Some(&lowest) = opts.grid.iter().min_by(|a, b| a.total_cmp(b)) else {
        return Ok(Vec::new());
    };
    let base_cfg = ScanConfig {
        metric,
        window: opts.window,
        disjoint_percent: opts.disjoint_percent,
        max_active_states: opts.max_active_states,
        ..ScanConfig::default()
    }
    .with_threshold(lowest);
    base_cfg.validate()?;
    let window = base_cfg.resolve_window(patterns);
    let aut = Automaton::build(patterns, window)?;
    let baseline_all = naive_scan_chunked(patterns, &base_cfg, corpus, opts.chunks)?;
    let baseline_bps = if opts.repetitions > 0 {
        Some(baseline_throughput(
            patterns,
            &base_cfg,
            corpus,
            opts.repetitions,
        )?)
    } else {
        None
    };

    let mut rows = Vec::with_capacity(opts.grid.len());
    for &t in &opts.grid {
        let cfg = base_cfg.with_threshold(t);
        let scanner = Scanner::new(&aut, cfg)?;
        let matched = crate::matcher::scan_chunked(&scanner, corpus, opts.chunks);
        if matched.stats.overflow_steps > 0 {
            log::warn!(
                "{} t={t}: active set overflowed on {} steps",
                metric.kind,
                matched.stats.overflow_steps
            );
        }
        let baseline: Vec<MatchRecord> = baseline_all
            .iter()
            .copied()
            .filter(|r| r.score >= t)
            .collect();
        let (fp, fn_) = accuracy(&matched.records, &baseline);
        let matcher_bps = if opts.repetitions > 0 {
            Some(matcher_throughput(&aut, &cfg, corpus, opts.repetitions)?)
        } else {
            None
        };
        rows.push(SweepRow {
            scenario: scenario.number(),
            metric: metric.kind,
            t_local: t,
            t_global: t,
            p: opts.disjoint_percent,
            window,
            fp,
            fn_,
            matcher_bps,
            baseline_bps,
        });
    }
    Ok(rows)
}

/// Sweeps every metric over a generated workload.
pub fn run_scenario(
    work: &Workload,
    metrics: &[MetricKind],
    opts: &SweepOptions,
) -> Result<Vec<SweepRow>, BenchError> {
    let mut rows = Vec::new();
    for &kind in metrics {
        log::info!(
            "scenario {} {kind}: sweeping {} thresholds",
            work.scenario.number(),
            opts.grid.len()
        );
        rows.extend(sweep_thresholds(
            work.scenario,
            &work.patterns,
            &work.corpus.bytes,
            SimilarityMetric::new(kind),
            opts,
        )?);
    }
    Ok(rows)
}
