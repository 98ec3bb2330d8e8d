//! Accuracy metrics and the per-epoch metrics log.

use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};
use stgcn_autodiff::Tensor;
use stgcn_model::predict_topk;

use crate::error::HarnessError;

/// One epoch of training, as a JSON line in `metrics.jsonl`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub epoch: usize,
    pub train_loss: f64,
    /// Top-1 accuracy over the epoch's training batches.
    pub top1: f64,
    /// Top-5 accuracy over the epoch's training batches.
    pub top5: f64,
    pub lr: f64,
    /// Seconds since the run started. Excluded from reproducibility
    /// comparisons, since no two runs share a clock.
    pub wall_time_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eval_top1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eval_top5: Option<f64>,
}

/// Fraction of rows whose label ranks among the `min(k, classes)`
/// highest logits. Clamping k lets a top-5 report stay meaningful on
/// datasets with fewer than five classes.
pub fn accuracy_at_k(logits: &Tensor, labels: &[usize], k: usize) -> Result<f64, HarnessError> {
    Ok(count_topk_hits(logits, labels, k)? as f64 / labels.len().max(1) as f64)
}

/// Number of rows whose label appears in the top `min(k, classes)`.
pub fn count_topk_hits(logits: &Tensor, labels: &[usize], k: usize) -> Result<usize, HarnessError> {
    let classes = match *logits.shape() {
        [_, c] => c,
        _ => {
            return Err(HarnessError::Model(
                stgcn_model::ModelError::BadLogitsShape(logits.shape().to_vec()),
            ))
        }
    };
    let ranked = predict_topk(logits, k.min(classes).max(1))?;
    Ok(ranked
        .iter()
        .zip(labels)
        .filter(|(row, label)| row.contains(label))
        .count())
}

/// Appends one record as a JSON line.
pub fn append_record<W: std::io::Write>(mut out: W, record: &MetricsRecord) -> std::io::Result<()> {
    serde_json::to_writer(&mut out, record)?;
    out.write_all(b"\n")
}

pub fn read_metrics_file(path: &Path) -> Result<Vec<MetricsRecord>, HarnessError> {
    let file = std::fs::File::open(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut records = Vec::new();
    for (index, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: MetricsRecord =
            serde_json::from_str(&line).map_err(|source| HarnessError::MalformedMetrics {
                line: index + 1,
                source,
            })?;
        records.push(record);
    }
    Ok(records)
}

/// Mean accuracy over the records with epoch in `[from, to]`, the way
/// multi-epoch results are commonly reported. Evaluation accuracy is
/// averaged where present, training accuracy otherwise.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WindowReport {
    pub from: usize,
    pub to: usize,
    pub records: usize,
    pub top1_mean: f64,
    pub top5_mean: f64,
}

pub fn windowed_mean(
    records: &[MetricsRecord],
    from: usize,
    to: usize,
) -> Result<WindowReport, HarnessError> {
    if from > to {
        return Err(HarnessError::BadWindow { from, to });
    }
    let window: Vec<&MetricsRecord> = records
        .iter()
        .filter(|r| (from..=to).contains(&r.epoch))
        .collect();
    if window.is_empty() {
        return Err(HarnessError::EmptyWindow { from, to });
    }
    let n = window.len() as f64;
    Ok(WindowReport {
        from,
        to,
        records: window.len(),
        top1_mean: window
            .iter()
            .map(|r| r.eval_top1.unwrap_or(r.top1))
            .sum::<f64>()
            / n,
        top5_mean: window
            .iter()
            .map(|r| r.eval_top5.unwrap_or(r.top5))
            .sum::<f64>()
            / n,
    })
}

/// Whether two logs describe the same run, ignoring wall-clock fields.
pub fn metrics_equal_ignoring_time(a: &[MetricsRecord], b: &[MetricsRecord]) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|(x, y)| {
            let mut x = x.clone();
            let mut y = y.clone();
            x.wall_time_s = 0.0;
            y.wall_time_s = 0.0;
            x == y
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn logits(rows: &[&[f64]]) -> Tensor {
        let cols = rows[0].len();
        Tensor::new(
            vec![rows.len(), cols],
            rows.iter().flat_map(|r| r.iter().copied()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn perfect_logits_score_one_at_every_k() {
        let l = logits(&[&[9.0, 0.0, 0.0], &[0.0, 9.0, 0.0], &[0.0, 0.0, 9.0]]);
        let labels = [0, 1, 2];
        assert_eq!(accuracy_at_k(&l, &labels, 1).unwrap(), 1.0);
        assert_eq!(accuracy_at_k(&l, &labels, 5).unwrap(), 1.0);
    }

    #[test]
    fn top5_counts_labels_anywhere_in_the_top_five() {
        let l = logits(&[
            &[0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.0],
            &[0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 1.0],
        ]);
        assert_eq!(accuracy_at_k(&l, &[4, 5], 5).unwrap(), 0.5);
        assert_eq!(accuracy_at_k(&l, &[4, 5], 1).unwrap(), 0.0);
    }

    #[test]
    fn k_beyond_the_class_count_is_clamped() {
        let l = logits(&[&[0.1, 0.2], &[0.3, 0.0]]);
        assert_eq!(accuracy_at_k(&l, &[0, 1], 5).unwrap(), 1.0);
        assert_eq!(accuracy_at_k(&l, &[1, 0], 5).unwrap(), 1.0);
        assert_eq!(accuracy_at_k(&l, &[1, 0], 1).unwrap(), 1.0);
        assert_eq!(accuracy_at_k(&l, &[0, 1], 1).unwrap(), 0.0);
    }

    #[test]
    fn top5_is_never_below_top1() {
        let l = logits(&[
            &[0.3, 0.1, 0.9, 0.2],
            &[0.5, 0.4, 0.3, 0.2],
            &[0.0, 0.0, 0.1, 0.0],
        ]);
        for labels in [[2usize, 0, 1], [1, 3, 2], [0, 2, 3]] {
            let a1 = accuracy_at_k(&l, &labels, 1).unwrap();
            let a5 = accuracy_at_k(&l, &labels, 5).unwrap();
            assert!(a5 >= a1);
        }
    }

    fn record(epoch: usize, top1: f64, eval_top1: Option<f64>) -> MetricsRecord {
        MetricsRecord {
            epoch,
            train_loss: 1.0,
            top1,
            top5: top1,
            lr: 0.01,
            wall_time_s: epoch as f64 * 3.3,
            eval_top1,
            eval_top5: eval_top1,
        }
    }

    #[test]
    fn windowed_mean_averages_the_inclusive_range() {
        let records: Vec<MetricsRecord> =
            (1..=10).map(|e| record(e, e as f64 / 10.0, None)).collect();
        let report = windowed_mean(&records, 4, 6).unwrap();
        assert_eq!(report.records, 3);
        assert!((report.top1_mean - 0.5).abs() < 1e-12);
    }

    #[test]
    fn windowed_mean_prefers_evaluation_accuracy() {
        let records = vec![record(1, 0.2, Some(0.8)), record(2, 0.4, Some(0.6))];
        let report = windowed_mean(&records, 1, 2).unwrap();
        assert!((report.top1_mean - 0.7).abs() < 1e-12);
    }

    #[test]
    fn bad_windows_are_rejected() {
        let records = vec![record(1, 0.5, None)];
        assert!(matches!(
            windowed_mean(&records, 3, 2),
            Err(HarnessError::BadWindow { .. })
        ));
        assert!(matches!(
            windowed_mean(&records, 5, 9),
            Err(HarnessError::EmptyWindow { .. })
        ));
    }

    #[test]
    fn log_comparison_ignores_only_wall_time() {
        let a = vec![record(1, 0.5, None), record(2, 0.6, None)];
        let mut b = a.clone();
        b[0].wall_time_s = 99.0;
        assert!(metrics_equal_ignoring_time(&a, &b));
        b[1].top1 = 0.61;
        assert!(!metrics_equal_ignoring_time(&a, &b));
    }

    #[test]
    fn jsonl_round_trip_preserves_records() {
        let records = vec![record(1, 0.5, Some(0.4)), record(2, 0.6, None)];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("metrics.jsonl");
        let mut file = std::fs::File::create(&path).unwrap();
        for r in &records {
            append_record(&mut file, r).unwrap();
        }
        drop(file);
        assert_eq!(read_metrics_file(&path).unwrap(), records);
    }
}
