//! Report files: per-replica CSV, summary JSON and SVG plots.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{svg, Aggregate, Check, Derived, ExperimentReport, HarnessError, PlotSpec, Provenance, ReplicaRecord};
use crate::fmt17;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Formats {
    pub csv: bool,
    pub json: bool,
    pub svg: bool,
}

impl Default for Formats {
    fn default() -> Self {
        Self {
            csv: true,
            json: true,
            svg: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmittedFiles {
    pub csv: Option<PathBuf>,
    pub json: Option<PathBuf>,
    pub svg: Vec<PathBuf>,
}

#[derive(Serialize)]
struct Summary<'a> {
    passed: bool,
    provenance: &'a Provenance,
    checks: &'a [Check],
    derived: &'a [Derived],
    aggregates: &'a [Aggregate],
}

fn metric_names(records: &[ReplicaRecord]) -> Vec<String> {
    let names: BTreeSet<&String> = records.iter().flat_map(|r| r.metrics.keys()).collect();
    names.into_iter().cloned().collect()
}

/// Header `group,n,replica,<metrics...>`; values with 17 significant digits,
/// empty where a replica lacks a metric.
pub fn records_csv(records: &[ReplicaRecord]) -> String {
    let names = metric_names(records);
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["group".to_string(), "n".into(), "replica".into()];
    header.extend(names.iter().cloned());
    writer.write_record(&header).expect("in-memory write");
    for r in records {
        let mut row = vec![r.group.clone(), r.n.to_string(), r.replica.to_string()];
        row.extend(names.iter().map(|m| r.metrics.get(m).map(|&v| fmt17(v)).unwrap_or_default()));
        writer.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

pub fn summary_json(report: &ExperimentReport) -> String {
    let summary = Summary {
        passed: report.passed(),
        provenance: &report.provenance,
        checks: &report.checks,
        derived: &report.derived,
        aggregates: &report.aggregates,
    };
    let mut text = serde_json::to_string_pretty(&summary).expect("report serializes");
    text.push('\n');
    text
}

/// Parses a CSV written by [`emit_report`] back into records.
pub fn read_records_csv(path: &Path) -> Result<Vec<ReplicaRecord>, HarnessError> {
    let parse_err = |message: String| HarnessError::Parse {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = csv::Reader::from_path(path).map_err(|e| parse_err(e.to_string()))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| parse_err(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.len() < 3 || header[..3] != ["group", "n", "replica"] {
        return Err(parse_err(format!("unexpected header {header:?}")));
    }
    let mut records = Vec::new();
    for (line, row) in reader.records().enumerate() {
        let row = row.map_err(|e| parse_err(e.to_string()))?;
        let field = |i: usize| row.get(i).unwrap_or("");
        let bad = |what: &str, value: &str| parse_err(format!("row {}: bad {what} {value:?}", line + 1));
        let mut metrics = BTreeMap::new();
        for (i, name) in header.iter().enumerate().skip(3) {
            let value = field(i);
            if !value.is_empty() {
                metrics.insert(name.clone(), value.parse().map_err(|_| bad(name, value))?);
            }
        }
        records.push(ReplicaRecord {
            group: field(0).to_string(),
            n: field(1).parse().map_err(|_| bad("n", field(1)))?,
            replica: field(2).parse().map_err(|_| bad("replica", field(2)))?,
            metrics,
        });
    }
    Ok(records)
}

fn plot_file(report: &ExperimentReport, plot: &PlotSpec) -> (String, String) {
    let preset = report.provenance.preset.name();
    match plot {
        PlotSpec::LogLog { metric, title } => {
            let mut groups: Vec<&str> = Vec::new();
            for a in &report.aggregates {
                if a.metric == *metric && !groups.contains(&a.group.as_str()) {
                    groups.push(&a.group);
                }
            }
            let series: Vec<svg::Series> = groups
                .iter()
                .map(|g| svg::Series {
                    label: g.to_string(),
                    points: report
                        .aggregates
                        .iter()
                        .filter(|a| a.group == *g && a.metric == *metric)
                        .map(|a| (a.n as f64, a.summary.median))
                        .collect(),
                })
                .collect();
            (format!("{preset}_{metric}_loglog.svg"), svg::loglog_plot(title, "N", metric, &series))
        }
        PlotSpec::Histogram { metric, title } => {
            let mut by_n: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
            for r in &report.records {
                if let Some(&v) = r.metrics.get(metric) {
                    if v.is_finite() {
                        by_n.entry(r.n).or_default().push(v);
                    }
                }
            }
            let samples: Vec<(String, Vec<f64>)> = by_n.into_iter().map(|(n, v)| (format!("N = {n}"), v)).collect();
            (format!("{preset}_{metric}_histogram.svg"), svg::histogram(title, metric, &samples, 20))
        }
    }
}

/// Writes the selected files into `dir`. Every file is rendered before the
/// first one is written; an empty report writes nothing.
pub fn emit_report(report: &ExperimentReport, formats: Formats, dir: &Path) -> Result<EmittedFiles, HarnessError> {
    if report.records.is_empty() {
        return Err(HarnessError::EmptyReport);
    }
    let preset = report.provenance.preset.name();
    let mut pending: Vec<(PathBuf, String)> = Vec::new();
    let mut emitted = EmittedFiles {
        csv: None,
        json: None,
        svg: Vec::new(),
    };
    if formats.csv {
        let path = dir.join(format!("{preset}_replicas.csv"));
        emitted.csv = Some(path.clone());
        pending.push((path, records_csv(&report.records)));
    }
    if formats.json {
        let path = dir.join(format!("{preset}_summary.json"));
        emitted.json = Some(path.clone());
        pending.push((path, summary_json(report)));
    }
    if formats.svg {
        for plot in &report.plots {
            let (name, text) = plot_file(report, plot);
            let path = dir.join(name);
            emitted.svg.push(path.clone());
            pending.push((path, text));
        }
    }
    std::fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    for (path, text) in pending {
        std::fs::write(&path, text).map_err(|source| HarnessError::Io { path, source })?;
    }
    Ok(emitted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{aggregate_records, provenance, ExperimentConfig, Preset};
    use proptest::prelude::*;

    fn report_from(records: Vec<ReplicaRecord>) -> ExperimentReport {
        let config: ExperimentConfig = Preset::BlowupSweep.default_config();
        ExperimentReport {
            aggregates: aggregate_records(&records),
            records,
            derived: vec![Derived {
                name: "slope".into(),
                value: -2.0,
            }],
            checks: Vec::new(),
            provenance: provenance(&config, vec!["note".into()]),
            plots: vec![
                PlotSpec::LogLog {
                    metric: "x".into(),
                    title: "x".into(),
                },
                PlotSpec::Histogram {
                    metric: "x".into(),
                    title: "x".into(),
                },
            ],
        }
    }

    fn sample_records() -> Vec<ReplicaRecord> {
        (0..12)
            .map(|i| ReplicaRecord {
                group: "g".into(),
                n: 8 << (i % 3),
                replica: i / 3,
                metrics: [
                    ("x".to_string(), 1.0 / (i as f64 + 1.0)),
                    ("t".to_string(), if i == 5 { f64::INFINITY } else { (i as f64).sqrt() }),
                ]
                .into_iter()
                .collect(),
            })
            .collect()
    }

    #[test]
    fn same_report_gives_identical_files() {
        let report = report_from(sample_records());
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let fa = emit_report(&report, Formats::default(), a.path()).unwrap();
        let fb = emit_report(&report, Formats::default(), b.path()).unwrap();
        assert_eq!(fa.svg.len(), 2);
        let pairs = [(fa.csv.unwrap(), fb.csv.unwrap()), (fa.json.unwrap(), fb.json.unwrap())];
        for (x, y) in pairs.iter().chain(fa.svg.iter().zip(&fb.svg).map(|(x, y)| (x.clone(), y.clone())).collect::<Vec<_>>().iter()) {
            assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap());
        }
    }

    #[test]
    fn empty_report_writes_nothing() {
        let report = report_from(Vec::new());
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out");
        assert!(matches!(emit_report(&report, Formats::default(), &out), Err(HarnessError::EmptyReport)));
        assert!(!out.exists());
    }

    #[test]
    fn unwritable_directory_reports_its_path() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        std::fs::write(&blocker, "x").unwrap();
        let err = emit_report(&report_from(sample_records()), Formats::default(), &blocker.join("sub")).unwrap_err();
        assert!(err.to_string().contains("file"), "{err}");
    }

    #[test]
    fn csv_round_trip_reproduces_aggregates() {
        let report = report_from(sample_records());
        let dir = tempfile::tempdir().unwrap();
        let files = emit_report(&report, Formats::default(), dir.path()).unwrap();
        let back = read_records_csv(&files.csv.unwrap()).unwrap();
        assert_eq!(back, report.records);
        assert_eq!(aggregate_records(&back), report.aggregates);
    }

    proptest! {
        #[test]
        fn recomputed_aggregates_print_identically(values in prop::collection::vec(-1e6f64..1e6, 1..40)) {
            let records: Vec<ReplicaRecord> = values
                .iter()
                .enumerate()
                .map(|(i, &v)| ReplicaRecord {
                    group: "g".into(),
                    n: 4,
                    replica: i as u32,
                    metrics: [("v".to_string(), v)].into_iter().collect(),
                })
                .collect();
            let report = report_from(records);
            let dir = tempfile::tempdir().unwrap();
            let files = emit_report(&report, Formats { csv: true, json: true, svg: false }, dir.path()).unwrap();
            let back = read_records_csv(files.csv.as_ref().unwrap()).unwrap();
            let mut again = report.clone();
            again.aggregates = aggregate_records(&back);
            prop_assert_eq!(summary_json(&again), std::fs::read_to_string(files.json.unwrap()).unwrap());
        }
    }
}
