//! Settings resolution: command-line flags over the TOML config file over
//! built-in defaults.

use std::fs;
use std::path::Path;

use clap::Args;
use fuzzymint::{MetricKind, ScanConfig, SimilarityMetric};
use serde::Deserialize;

use crate::Failure;

/// Values a config file may supply. Every field is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub metric: Option<String>,
    pub t_local: Option<f64>,
    pub t_global: Option<f64>,
    pub p: Option<f64>,
    pub window: Option<usize>,
    pub max_active_states: Option<usize>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, Failure> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::Data(format!("reading config {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| Failure::Data(format!("parsing config {}: {e}", path.display())))
    }
}

pub fn unit_interval(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("{s:?} is not a number"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is outside [0, 1]"))
    }
}

/// Matcher settings shared by scan, bench and mint.
#[derive(Debug, Default, Clone, Args)]
pub struct ScanFlags {
    /// euclid, hamming or levenshtein.
    #[arg(long)]
    pub metric: Option<MetricKind>,
    /// Threshold for extending a state with a substitution.
    #[arg(long, value_parser = unit_interval)]
    pub t_local: Option<f64>,
    /// Threshold a full-length match must reach.
    #[arg(long, value_parser = unit_interval)]
    pub t_global: Option<f64>,
    /// Largest tolerated fraction of differing symbols.
    #[arg(long, value_parser = unit_interval)]
    pub p: Option<f64>,
    /// Lookahead window; defaults to the longest pattern.
    #[arg(long)]
    pub window: Option<usize>,
    /// Cap on simultaneously active states.
    #[arg(long)]
    pub max_active: Option<usize>,
}

impl ScanFlags {
    pub fn resolve(&self, file: &FileConfig) -> Result<ScanConfig, Failure> {
        let mut cfg = ScanConfig::default();
        if let Some(name) = &file.metric {
            let kind: MetricKind = name
                .parse()
                .map_err(|e| Failure::Data(format!("config: {e}")))?;
            cfg.metric = SimilarityMetric::new(kind);
        }
        for (name, value) in [
            ("t_local", file.t_local),
            ("t_global", file.t_global),
            ("p", file.p),
        ] {
            if let Some(v) = value {
                unit_interval(&v.to_string())
                    .map_err(|e| Failure::Data(format!("config {name}: {e}")))?;
            }
        }
        cfg.local_threshold = file.t_local.unwrap_or(cfg.local_threshold);
        cfg.global_threshold = file.t_global.unwrap_or(cfg.global_threshold);
        cfg.disjoint_percent = file.p.unwrap_or(cfg.disjoint_percent);
        cfg.window = file.window.or(cfg.window);
        cfg.max_active_states = file.max_active_states.unwrap_or(cfg.max_active_states);

        if let Some(kind) = self.metric {
            cfg.metric = SimilarityMetric::new(kind);
        }
        cfg.local_threshold = self.t_local.unwrap_or(cfg.local_threshold);
        cfg.global_threshold = self.t_global.unwrap_or(cfg.global_threshold);
        cfg.disjoint_percent = self.p.unwrap_or(cfg.disjoint_percent);
        cfg.window = self.window.or(cfg.window);
        cfg.max_active_states = self.max_active.unwrap_or(cfg.max_active_states);

        cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
        Ok(cfg)
    }
}

pub const SEED_ENV: &str = "FUZZYMINT_SEED";
pub const DEFAULT_SEED: u64 = 42;

/// Flag, then config file, then the environment, then the default.
pub fn resolve_seed(flag: Option<u64>, file: &FileConfig) -> Result<u64, Failure> {
    if let Some(seed) = flag.or(file.seed) {
        return Ok(seed);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Failure::Usage(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_override_defaults() {
        let file = FileConfig {
            metric: Some("levenshtein".into()),
            t_local: Some(0.6),
            t_global: Some(0.8),
            ..FileConfig::default()
        };
        let flags = ScanFlags {
            t_global: Some(0.9),
            ..ScanFlags::default()
        };
        let cfg = flags.resolve(&file).unwrap();
        assert_eq!(cfg.metric.kind, MetricKind::Levenshtein);
        assert_eq!(cfg.local_threshold, 0.6);
        assert_eq!(cfg.global_threshold, 0.9);
        assert_eq!(cfg.disjoint_percent, ScanConfig::default().disjoint_percent);
    }

    #[test]
    fn bad_file_values_are_data_errors() {
        let file = FileConfig {
            p: Some(1.5),
            ..FileConfig::default()
        };
        assert!(matches!(
            ScanFlags::default().resolve(&file),
            Err(Failure::Data(_))
        ));
        let file = FileConfig {
            metric: Some("cosine".into()),
            ..FileConfig::default()
        };
        assert!(matches!(
            ScanFlags::default().resolve(&file),
            Err(Failure::Data(_))
        ));
    }

    #[test]
    fn unit_interval_bounds() {
        assert_eq!(unit_interval("0"), Ok(0.0));
        assert_eq!(unit_interval("1.0"), Ok(1.0));
        assert!(unit_interval("1.01").is_err());
        assert!(unit_interval("-0.1").is_err());
        assert!(unit_interval("x").is_err());
    }
}
