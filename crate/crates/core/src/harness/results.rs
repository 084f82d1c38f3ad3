use std::collections::BTreeMap;
use std::fs::File;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const RECORD_COLUMNS: [&str; 8] = [
    "trial",
    "retrain_index",
    "samples_seen",
    "labels_spent",
    "dataset_size",
    "test_accuracy",
    "mean_decision_time_s",
    "retrain_time_s",
];

pub const DECISION_COLUMNS: [&str; 8] = [
    "trial",
    "stream_id",
    "informativeness",
    "diversity_after",
    "gamma",
    "delta",
    "kept",
    "trigger_fired",
];

pub const SUMMARY_COLUMNS: [&str; 4] = [
    "retrain_index",
    "mean_accuracy",
    "var_accuracy",
    "mean_labels_spent",
];

/// One evaluation point: after the initial training (index 0) or after
/// the n-th retraining.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub trial: usize,
    pub retrain_index: usize,
    pub samples_seen: usize,
    pub labels_spent: usize,
    pub dataset_size: usize,
    pub test_accuracy: f64,
    pub mean_decision_time_s: f64,
    pub retrain_time_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionRow {
    pub trial: usize,
    pub stream_id: u64,
    pub informativeness: Option<f64>,
    pub diversity_after: Option<f64>,
    pub gamma: Option<f64>,
    pub delta: Option<f64>,
    pub kept: bool,
    pub trigger_fired: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub retrain_index: usize,
    pub mean_accuracy: f64,
    /// Population variance across trials.
    pub var_accuracy: f64,
    pub mean_labels_spent: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub strategy: String,
    pub retrain_index: usize,
    pub mean_accuracy: f64,
    pub var_accuracy: f64,
    pub mean_labels_spent: f64,
}

/// Mean and variance per retrain index over whichever trials reached it.
pub fn summarize(records: &[ExperimentRecord]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<usize, Vec<&ExperimentRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(r.retrain_index).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|(retrain_index, rs)| {
            let n = rs.len() as f64;
            let mean = rs.iter().map(|r| r.test_accuracy).sum::<f64>() / n;
            let var = rs
                .iter()
                .map(|r| (r.test_accuracy - mean).powi(2))
                .sum::<f64>()
                / n;
            SummaryRow {
                retrain_index,
                mean_accuracy: mean,
                var_accuracy: var,
                mean_labels_spent: rs.iter().map(|r| r.labels_spent as f64).sum::<f64>() / n,
            }
        })
        .collect()
}

/// Writes `rows` under an explicit header so an empty table still has one.
pub fn write_csv<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(file);
    w.write_record(header)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

/// Writes `records.csv`, `decisions.csv` and `summary.csv` into `dir`.
pub fn write_results(
    records: &[ExperimentRecord],
    decisions: &[DecisionRow],
    dir: &Path,
) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_csv(&dir.join("records.csv"), &RECORD_COLUMNS, records)?;
    write_csv(&dir.join("decisions.csv"), &DECISION_COLUMNS, decisions)?;
    write_csv(
        &dir.join("summary.csv"),
        &SUMMARY_COLUMNS,
        &summarize(records),
    )
}

pub fn comparison_rows(strategy: &str, summary: &[SummaryRow]) -> Vec<ComparisonRow> {
    summary
        .iter()
        .map(|s| ComparisonRow {
            strategy: strategy.to_string(),
            retrain_index: s.retrain_index,
            mean_accuracy: s.mean_accuracy,
            var_accuracy: s.var_accuracy,
            mean_labels_spent: s.mean_labels_spent,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(trial: usize, n: usize, acc: f64) -> ExperimentRecord {
        ExperimentRecord {
            trial,
            retrain_index: n,
            samples_seen: 100 * n,
            labels_spent: 32 * n,
            dataset_size: 150 + 32 * n,
            test_accuracy: acc,
            mean_decision_time_s: 0.0,
            retrain_time_s: 0.0,
        }
    }

    #[test]
    fn summary_uses_population_variance() {
        let rs = vec![record(0, 1, 0.5), record(1, 1, 0.7), record(0, 2, 0.9)];
        let s = summarize(&rs);
        assert_eq!(s.len(), 2);
        assert!((s[0].mean_accuracy - 0.6).abs() < 1e-12);
        assert!((s[0].var_accuracy - 0.01).abs() < 1e-12);
        assert_eq!(s[1].var_accuracy, 0.0);
        assert_eq!(s[0].mean_labels_spent, 32.0);
    }

    #[test]
    fn ten_trials_three_retrains_give_three_rows() {
        let rs: Vec<_> = (0..10)
            .flat_map(|t| (1..=3).map(move |n| record(t, n, 0.1 * n as f64)))
            .collect();
        assert_eq!(summarize(&rs).len(), 3);
    }

    #[test]
    fn empty_tables_have_headers_and_rows_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        write_results(&[], &[], dir.path()).unwrap();
        let text = std::fs::read_to_string(dir.path().join("records.csv")).unwrap();
        assert_eq!(text.trim_end(), RECORD_COLUMNS.join(","));
        let text = std::fs::read_to_string(dir.path().join("decisions.csv")).unwrap();
        assert_eq!(text.trim_end(), DECISION_COLUMNS.join(","));
        let text = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        assert_eq!(text.trim_end(), SUMMARY_COLUMNS.join(","));

        let decisions = vec![DecisionRow {
            trial: 0,
            stream_id: 7,
            informativeness: Some(0.25),
            diversity_after: None,
            gamma: Some(0.125),
            delta: None,
            kept: true,
            trigger_fired: false,
        }];
        let rs = vec![record(0, 0, 0.5)];
        write_results(&rs, &decisions, dir.path()).unwrap();
        let back: Vec<DecisionRow> = read_csv(&dir.path().join("decisions.csv")).unwrap();
        assert_eq!(back, decisions);
        let back: Vec<ExperimentRecord> = read_csv(&dir.path().join("records.csv")).unwrap();
        assert_eq!(back, rs);
    }
}
