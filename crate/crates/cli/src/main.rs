//! `fuzzymint`: approximate multi-pattern scanning, experiment sweeps and a
//! plagiarism-gated text ledger from the command line.

mod config;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use fuzzymint::bench::{self, Scenario, SweepOptions};
use fuzzymint::ledger::{ChainStatus, Ledger, MintOutcome, MintPolicy};
use fuzzymint::matcher::records_to_json;
use fuzzymint::{scan_chunked, MetricKind, PatternSet, ScanConfig, Scanner};

use config::{resolve_seed, FileConfig, ScanFlags};

/// Why a command did not succeed; each variant maps to one exit code.
#[derive(Debug)]
pub enum Failure {
    /// The command ran but the answer is negative (rejected mint, bad chain).
    Rejected(String),
    /// Unreadable, unwritable or malformed files.
    Data(String),
    /// Invalid flags or settings.
    Usage(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Rejected(_) => 1,
            Failure::Data(_) => 2,
            Failure::Usage(_) => 64,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Rejected(m) | Failure::Data(m) | Failure::Usage(m) => m,
        }
    }
}

#[derive(Parser)]
#[command(name = "fuzzymint", version, about)]
struct Cli {
    /// TOML file with defaults for matcher settings, seed and threads.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print version, features and default settings as JSON.
    BuildInfo,
    /// Report approximate pattern occurrences as a JSON array.
    Scan {
        /// One pattern per line; blank lines and `#` comments are skipped.
        #[arg(long)]
        patterns: PathBuf,
        /// Text to scan, read as raw bytes.
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        scan: ScanFlags,
        /// Split the input into this many chunks scanned in parallel.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Sweep thresholds over a generated workload and write a CSV report.
    Bench {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        scenario: u8,
        #[arg(long)]
        seed: Option<u64>,
        /// Threshold grid as lo:hi:step.
        #[arg(long, default_value = "0.5:0.95:0.05")]
        grid: String,
        /// Metrics to sweep; all three when omitted.
        #[arg(long = "metric", value_delimiter = ',')]
        metrics: Vec<MetricKind>,
        /// Corpus size in bytes.
        #[arg(long, default_value_t = 2 * 1024 * 1024)]
        size: usize,
        /// Planted mutated pattern copies.
        #[arg(long, default_value_t = 240)]
        plants: usize,
        /// Timed repetitions per measurement; 0 skips timing.
        #[arg(long, default_value_t = 5)]
        reps: usize,
        #[arg(long, value_parser = config::unit_interval)]
        p: Option<f64>,
        #[arg(long)]
        window: Option<usize>,
        #[arg(long)]
        max_active: Option<usize>,
        /// Chunks for the untimed accuracy scans.
        #[arg(long)]
        threads: Option<usize>,
        /// CSV destination; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate patterns, a corpus with planted copies and its ground truth.
    Gen {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        scenario: u8,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 2 * 1024 * 1024)]
        size: usize,
        #[arg(long, default_value_t = 240)]
        plants: usize,
        /// Directory receiving patterns.txt, corpus.txt and truth.json.
        #[arg(long)]
        out: PathBuf,
    },
    /// Append a text to the ledger unless it duplicates or copies a minted one.
    Mint {
        #[arg(long)]
        ledger: PathBuf,
        #[arg(long)]
        owner: String,
        #[arg(long)]
        text_file: PathBuf,
        /// Start a new ledger if the file does not exist.
        #[arg(long)]
        init: bool,
        /// Block timestamp in seconds; the current time when omitted.
        #[arg(long)]
        timestamp: Option<u64>,
        #[command(flatten)]
        scan: ScanFlags,
    },
    /// Check the hash chain and every record in it.
    Verify {
        #[arg(long)]
        ledger: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(64),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("fuzzymint: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let file = FileConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::BuildInfo => build_info(),
        Command::Scan {
            patterns,
            input,
            scan,
            threads,
        } => cmd_scan(
            &patterns,
            &input,
            scan.resolve(&file)?,
            threads.or(file.threads),
        ),
        Command::Bench {
            scenario,
            seed,
            grid,
            metrics,
            size,
            plants,
            reps,
            p,
            window,
            max_active,
            threads,
            out,
        } => {
            let flags = ScanFlags {
                p,
                window,
                max_active,
                ..ScanFlags::default()
            };
            let cfg = flags.resolve(&file)?;
            let opts = SweepOptions {
                grid: bench::parse_grid(&grid).map_err(|e| Failure::Usage(e.to_string()))?,
                disjoint_percent: cfg.disjoint_percent,
                window: cfg.window,
                max_active_states: cfg.max_active_states,
                repetitions: reps,
                chunks: threads.or(file.threads).unwrap_or(1).max(1),
            };
            if reps != 0 && reps < 3 {
                return Err(Failure::Usage(format!(
                    "--reps must be 0 or at least 3, got {reps}"
                )));
            }
            let metrics = if metrics.is_empty() {
                MetricKind::ALL.to_vec()
            } else {
                metrics
            };
            cmd_bench(
                scenario_of(scenario),
                resolve_seed(seed, &file)?,
                size,
                plants,
                &metrics,
                &opts,
                out.as_deref(),
            )
        }
        Command::Gen {
            scenario,
            seed,
            size,
            plants,
            out,
        } => cmd_gen(
            scenario_of(scenario),
            resolve_seed(seed, &file)?,
            size,
            plants,
            &out,
        ),
        Command::Mint {
            ledger,
            owner,
            text_file,
            init,
            timestamp,
            scan,
        } => {
            let policy = MintPolicy {
                scan: scan.resolve(&file)?,
                ..MintPolicy::default()
            };
            cmd_mint(&ledger, &owner, &text_file, init, timestamp, policy)
        }
        Command::Verify { ledger } => cmd_verify(&ledger),
    }
}

fn scenario_of(n: u8) -> Scenario {
    Scenario::from_number(n).expect("clap restricts the range")
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| Failure::Data(format!("reading {}: {e}", path.display())))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    fs::write(path, bytes).map_err(|e| Failure::Data(format!("writing {}: {e}", path.display())))
}

fn build_info() -> Result<(), Failure> {
    let defaults = ScanConfig::default();
    let info = serde_json::json!({
        "name": "fuzzymint",
        "version": env!("CARGO_PKG_VERSION"),
        "parallel": fuzzymint::PARALLEL,
        "debug_assertions": cfg!(debug_assertions),
        "metrics": MetricKind::ALL.map(MetricKind::name),
        "defaults": {
            "metric": defaults.metric.kind.name(),
            "t_local": defaults.local_threshold,
            "t_global": defaults.global_threshold,
            "p": defaults.disjoint_percent,
            "max_active_states": defaults.max_active_states,
            "shingle_len": MintPolicy::default().shingle_len,
            "seed": config::DEFAULT_SEED,
        },
    });
    println!(
        "{}",
        serde_json::to_string_pretty(&info).expect("json value")
    );
    Ok(())
}

fn cmd_scan(
    patterns: &Path,
    input: &Path,
    cfg: ScanConfig,
    threads: Option<usize>,
) -> Result<(), Failure> {
    let patterns = PatternSet::from_file(patterns).map_err(|e| Failure::Data(e.to_string()))?;
    let input = read(input)?;
    if patterns.is_empty() {
        eprintln!("no patterns");
        println!("[]");
        return Ok(());
    }
    let started = Instant::now();
    let aut = cfg
        .build_automaton(&patterns)
        .map_err(|e| Failure::Data(e.to_string()))?;
    let built = started.elapsed();
    let scanner = Scanner::new(&aut, cfg).map_err(|e| Failure::Usage(e.to_string()))?;
    let out = match threads {
        Some(n) if n > 1 => in_pool(n, || scan_chunked(&scanner, &input, n))?,
        _ => scanner.scan_with_stats(&input),
    };
    println!("{}", records_to_json(&patterns, &out.records));
    eprintln!("build time: {:.3} ms", built.as_secs_f64() * 1e3);
    eprintln!("active-set overflow steps: {}", out.stats.overflow_steps);
    eprintln!("peak active states: {}", out.stats.peak_active_states);
    Ok(())
}

/// Runs `f` on a dedicated pool of `threads` workers.
fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T, Failure> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Failure::Usage(format!("cannot start {threads} threads: {e}")))?;
    Ok(pool.install(f))
}

fn cmd_bench(
    scenario: Scenario,
    seed: u64,
    size: usize,
    plants: usize,
    metrics: &[MetricKind],
    opts: &SweepOptions,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let work =
        bench::workload(scenario, size, plants, seed).map_err(|e| Failure::Usage(e.to_string()))?;
    let rows = in_pool(opts.chunks, || bench::run_scenario(&work, metrics, opts))?
        .map_err(|e| Failure::Usage(e.to_string()))?;
    let csv = bench::to_csv(&rows);
    match out {
        Some(path) => write(path, csv.as_bytes()),
        None => io::stdout()
            .write_all(csv.as_bytes())
            .map_err(|e| Failure::Data(format!("writing report: {e}"))),
    }
}

fn cmd_gen(
    scenario: Scenario,
    seed: u64,
    size: usize,
    plants: usize,
    out: &Path,
) -> Result<(), Failure> {
    let work =
        bench::workload(scenario, size, plants, seed).map_err(|e| Failure::Usage(e.to_string()))?;
    fs::create_dir_all(out)
        .map_err(|e| Failure::Data(format!("creating {}: {e}", out.display())))?;
    write(
        &out.join("patterns.txt"),
        work.patterns.to_file_format().as_bytes(),
    )?;
    write(&out.join("corpus.txt"), &work.corpus.bytes)?;
    write(
        &out.join("truth.json"),
        work.corpus.ground_truth_json().as_bytes(),
    )?;
    eprintln!(
        "{} patterns, {} bytes, {} plants written to {}",
        work.patterns.len(),
        work.corpus.bytes.len(),
        work.corpus.plants.len(),
        out.display()
    );
    Ok(())
}

fn load_ledger(path: &Path, policy: MintPolicy) -> Result<Ledger, Failure> {
    Ledger::load(path, policy).map_err(|e| Failure::Data(e.to_string()))
}

fn cmd_mint(
    path: &Path,
    owner: &str,
    text_file: &Path,
    init: bool,
    timestamp: Option<u64>,
    policy: MintPolicy,
) -> Result<(), Failure> {
    let mut ledger = if init && !path.exists() {
        Ledger::new(policy)
    } else {
        load_ledger(path, policy)?
    };
    let text = read(text_file)?;
    let timestamp = timestamp.unwrap_or_else(|| {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs())
    });
    match ledger.mint(owner.as_bytes(), &text, timestamp) {
        MintOutcome::Accepted(nft) => {
            ledger
                .save(path)
                .map_err(|e| Failure::Data(e.to_string()))?;
            println!("{}", nft.nft_id);
            Ok(())
        }
        MintOutcome::Rejected { reason, offense } => {
            let detail = match offense {
                Some(o) => format!(
                    "rejected: {reason} (offender nft {}, score {:.6})",
                    o.nft_id, o.score
                ),
                None => format!("rejected: {reason}"),
            };
            println!("{detail}");
            Err(Failure::Rejected(detail))
        }
    }
}

fn cmd_verify(path: &Path) -> Result<(), Failure> {
    let ledger = load_ledger(path, MintPolicy::default())?;
    match ledger.verify_chain() {
        ChainStatus::Ok => {
            println!("ok");
            Ok(())
        }
        ChainStatus::FirstBad(index) => {
            println!("first bad block: {index}");
            Err(Failure::Rejected(format!("chain broken at block {index}")))
        }
    }
}
