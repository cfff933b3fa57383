//! Configured experiments over many replicas, and their reports.
//!
//! Each preset turns an [`ExperimentConfig`] into an [`ExperimentReport`]:
//! per-replica metric records, per-group aggregates, derived values such as
//! fitted slopes, and pass/fail checks. Replicas run on a worker pool, each
//! with its own random stream, and are merged in task order so that the
//! number of workers never changes a report.

mod config;
mod presets;
mod report;
mod svg;

use std::collections::BTreeMap;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use config::{
    BdSection, BlowupSection, DominationSection, DominationVariant, EllRule, ExperimentConfig, LlnSection,
    ModelSection, Preset, RateSelection, SchemeSection,
};
pub use presets::{
    inverse_square_tail, run_bd_hitting, run_blowup_sweep, run_domination_check, run_lln_sweep, run_scheme_order,
};
pub use report::{emit_report, read_records_csv, EmittedFiles, Formats};

use crate::bdchain::BdError;
use crate::model::ModelError;
use crate::pde::PdeError;
use crate::simulator::SimError;
use crate::stats::Summary;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error("{0}")]
    EllTooSlow(String),
    #[error("T = {t_end} is not below the blow-up time of the equation ({detail})")]
    BeyondBlowup { t_end: f64, detail: String },
    #[error("report has no replica records; nothing written")]
    EmptyReport,
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Pde(#[from] PdeError),
    #[error(transparent)]
    Bd(#[from] BdError),
}

/// Metrics of one replica. `n` is the number of sites, or the chain state for
/// birth-death experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicaRecord {
    pub group: String,
    pub n: usize,
    pub replica: u32,
    pub metrics: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub group: String,
    pub n: usize,
    pub metric: String,
    /// Statistics over the finite values of the metric.
    #[serde(flatten)]
    pub summary: Summary,
    /// Replicas whose value was infinite or NaN.
    pub non_finite: usize,
}

/// A value computed from several groups, e.g. a fitted slope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Derived {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub preset: Preset,
    /// SHA-256 of the serialized configuration.
    pub config_sha256: String,
    pub seed: u64,
    pub version: String,
    pub notes: Vec<String>,
}

/// Which plots a report can draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PlotSpec {
    /// Log-log plot of the median of `metric` against `n`, one line per group.
    LogLog { metric: String, title: String },
    /// Histogram of `metric` over all finite values, grouped by `n`.
    Histogram { metric: String, title: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub records: Vec<ReplicaRecord>,
    pub aggregates: Vec<Aggregate>,
    pub derived: Vec<Derived>,
    pub checks: Vec<Check>,
    pub provenance: Provenance,
    pub plots: Vec<PlotSpec>,
}

impl ExperimentReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn aggregate(&self, group: &str, n: usize, metric: &str) -> Option<&Aggregate> {
        self.aggregates
            .iter()
            .find(|a| a.group == group && a.n == n && a.metric == metric)
    }

    pub fn derived(&self, name: &str) -> Option<f64> {
        self.derived.iter().find(|d| d.name == name).map(|d| d.value)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Aggregates of every metric per `(group, n)`, in record order of first
/// appearance of the group and increasing `n`.
pub fn aggregate_records(records: &[ReplicaRecord]) -> Vec<Aggregate> {
    let mut groups: Vec<(&str, usize)> = Vec::new();
    for r in records {
        if !groups.contains(&(r.group.as_str(), r.n)) {
            groups.push((&r.group, r.n));
        }
    }
    let mut out = Vec::new();
    for (group, n) in groups {
        let members: Vec<&ReplicaRecord> = records.iter().filter(|r| r.group == group && r.n == n).collect();
        let metrics: std::collections::BTreeSet<&String> = members.iter().flat_map(|r| r.metrics.keys()).collect();
        for metric in metrics {
            let values: Vec<f64> = members.iter().filter_map(|r| r.metrics.get(metric).copied()).collect();
            let finite: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
            if finite.is_empty() {
                continue;
            }
            out.push(Aggregate {
                group: group.to_string(),
                n,
                metric: metric.clone(),
                summary: Summary::of(&finite),
                non_finite: values.len() - finite.len(),
            });
        }
    }
    out
}

/// SHA-256 of the serialized configuration without its output directory, so
/// that the same experiment written to two places reports the same hash.
pub fn config_hash(config: &ExperimentConfig) -> String {
    let mut config = config.clone();
    config.out = None;
    let digest = Sha256::digest(config.to_toml().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub(crate) fn provenance(config: &ExperimentConfig, notes: Vec<String>) -> Provenance {
    Provenance {
        preset: config.preset,
        config_sha256: config_hash(config),
        seed: config.seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        notes,
    }
}

/// Runs `task` on every item with `workers` threads (0 = all cores) and
/// returns the results in item order.
pub fn run_parallel<T, U, F>(items: Vec<T>, workers: usize, task: F) -> Result<Vec<U>, HarnessError>
where
    T: Send,
    U: Send,
    F: Fn(T) -> Result<U, HarnessError> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| HarnessError::Config(format!("worker pool: {e}")))?;
    pool.install(|| items.into_par_iter().map(&task).collect())
}

/// Runs the experiment selected by `config.preset`.
pub fn run(config: &ExperimentConfig, workers: usize) -> Result<ExperimentReport, HarnessError> {
    match config.preset {
        Preset::LlnSweep => run_lln_sweep(config, workers),
        Preset::BlowupSweep => run_blowup_sweep(config, workers),
        Preset::DominationCheck => run_domination_check(config, workers),
        Preset::SchemeOrder => run_scheme_order(config, workers),
        Preset::BdHitting => run_bd_hitting(config, workers),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(group: &str, n: usize, replica: u32, pairs: &[(&str, f64)]) -> ReplicaRecord {
        ReplicaRecord {
            group: group.into(),
            n,
            replica,
            metrics: pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }

    #[test]
    fn aggregates_skip_non_finite_values() {
        let records = vec![
            record("a", 8, 0, &[("x", 1.0), ("y", 5.0)]),
            record("a", 8, 1, &[("x", 3.0), ("y", f64::INFINITY)]),
            record("a", 16, 0, &[("x", 2.0)]),
        ];
        let agg = aggregate_records(&records);
        assert_eq!(agg.len(), 3);
        assert_eq!(agg[0].metric, "x");
        assert_eq!(agg[0].summary.mean, 2.0);
        assert_eq!(agg[1].metric, "y");
        assert_eq!(agg[1].summary.count, 1);
        assert_eq!(agg[1].non_finite, 1);
        assert_eq!((agg[2].n, agg[2].summary.median), (16, 2.0));
    }

    #[test]
    fn parallel_results_keep_item_order() {
        let out = run_parallel((0..100u64).collect(), 4, |i| Ok(i * i)).unwrap();
        assert_eq!(out, (0..100u64).map(|i| i * i).collect::<Vec<_>>());
    }

    #[test]
    fn hash_ignores_output_directory() {
        let a = Preset::SchemeOrder.default_config();
        let mut b = a.clone();
        b.out = Some("elsewhere".into());
        assert_eq!(config_hash(&a), config_hash(&b));
        b.seed += 1;
        assert_ne!(config_hash(&a), config_hash(&b));
    }
}
